use serde::{Deserialize, Serialize};

use super::scene::{legend_height, min_plot_height, min_plot_width};
use super::text::{block_height, wrap, FONT_HEADING, FONT_SUBTITLE, FONT_TITLE};
use super::{ChartError, ChartIR, HeadingAnchor, PanelSpec, Rect};

pub const FIGURE_MARGIN: f64 = 16.0;
pub const HORIZONTAL_GAP: f64 = 16.0;
/// Floor for the gap between stacked panels; the default is the larger of
/// this and 4% of the requested canvas height.
pub const MIN_VERTICAL_SPACING: f64 = 16.0;
/// The canvas may grow to at most this multiple of its requested size in
/// each dimension before layout gives up.
pub const GROWTH_CAP: f64 = 4.0;
/// Share of a panel's width given to a side-anchored heading.
const SIDE_HEADING_SHARE: f64 = 0.3;
const HEADING_PAD: f64 = 4.0;
const TITLE_PAD: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelBoxes {
    pub outer: Rect,
    pub heading: Option<Rect>,
    pub heading_lines: Vec<String>,
    pub plot: Rect,
    pub legend: Option<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutedFigure {
    pub canvas: Rect,
    pub title_box: Option<Rect>,
    pub title_lines: Vec<String>,
    pub summary_lines: Vec<String>,
    pub panels: Vec<PanelBoxes>,
    pub rows: usize,
    pub cols: usize,
    /// Gap between stacked panels in pixels.
    pub vertical_spacing: f64,
    /// Gap divided by the height of the panel grid; zero for a single row.
    pub normalized_spacing: f64,
}

impl LayoutedFigure {
    /// Upper bound on the normalized gap between `rows` stacked panels.
    pub fn spacing_bound(rows: usize) -> Option<f64> {
        (rows >= 2).then(|| 1.0 / (rows - 1) as f64)
    }

    pub fn spacing_ok(&self) -> bool {
        Self::spacing_bound(self.rows).is_none_or(|b| self.normalized_spacing < b)
    }
}

fn heading_height(lines: usize) -> f64 {
    if lines == 0 {
        0.0
    } else {
        block_height(lines, FONT_HEADING) + HEADING_PAD
    }
}

fn is_side(anchor: HeadingAnchor) -> bool {
    matches!(anchor, HeadingAnchor::Left | HeadingAnchor::Right)
}

fn panel_min_width(p: &PanelSpec) -> f64 {
    let plot = min_plot_width(p);
    if is_side(p.heading_anchor) && !p.heading.trim().is_empty() {
        plot / (1.0 - SIDE_HEADING_SHARE)
    } else {
        plot
    }
}

fn panel_min_height(p: &PanelSpec, w: f64) -> f64 {
    if is_side(p.heading_anchor) && !p.heading.trim().is_empty() {
        let hw = w * SIDE_HEADING_SHARE;
        let bw = w - hw;
        let head = heading_height(wrap(&p.heading, hw - HEADING_PAD, FONT_HEADING).len());
        head.max(min_plot_height(p, bw) + legend_height(p, bw))
    } else {
        heading_height(wrap(&p.heading, w, FONT_HEADING).len()) + min_plot_height(p, w) + legend_height(p, w)
    }
}

fn panel_boxes(p: &PanelSpec, outer: Rect) -> PanelBoxes {
    let side = is_side(p.heading_anchor) && !p.heading.trim().is_empty();
    let (heading, heading_lines, body) = if side {
        let hw = outer.w * SIDE_HEADING_SHARE;
        let lines = wrap(&p.heading, hw - HEADING_PAD, FONT_HEADING);
        let hh = block_height(lines.len(), FONT_HEADING);
        let bw = outer.w - hw;
        if p.heading_anchor == HeadingAnchor::Left {
            (
                Rect::new(outer.x, outer.y, hw - HEADING_PAD, hh),
                lines,
                Rect::new(outer.x + hw, outer.y, bw, outer.h),
            )
        } else {
            (
                Rect::new(outer.x + bw + HEADING_PAD, outer.y, hw - HEADING_PAD, hh),
                lines,
                Rect::new(outer.x, outer.y, bw, outer.h),
            )
        }
    } else {
        let lines = wrap(&p.heading, outer.w, FONT_HEADING);
        let hh = block_height(lines.len(), FONT_HEADING);
        let taken = heading_height(lines.len());
        if p.heading_anchor == HeadingAnchor::Below {
            (
                Rect::new(outer.x, outer.bottom() - hh, outer.w, hh),
                lines,
                Rect::new(outer.x, outer.y, outer.w, outer.h - taken),
            )
        } else {
            (
                Rect::new(outer.x, outer.y, outer.w, hh),
                lines,
                Rect::new(outer.x, outer.y + taken, outer.w, outer.h - taken),
            )
        }
    };
    let lh = legend_height(p, body.w);
    let legend = (lh > 0.0).then(|| Rect::new(body.x, body.bottom() - lh, body.w, lh));
    PanelBoxes {
        outer,
        heading: (!heading_lines.is_empty()).then_some(heading),
        heading_lines,
        plot: Rect::new(body.x, body.y, body.w, body.h - lh),
        legend,
    }
}

/// Assigns every panel an absolute box on a grid of equal-width columns.
///
/// The canvas widens until every cell fits its widest panel, then grows in
/// height until every row fits; leftover height is shared equally across
/// rows. Exceeding `GROWTH_CAP` in either dimension is an error.
pub fn layout(ir: &ChartIR) -> Result<LayoutedFigure, ChartError> {
    ir.validate()?;
    let n = ir.panels.len();
    let (rows, cols) = ir.arrangement.shape(n);
    let (w0, h0) = (ir.canvas.width_px as f64, ir.canvas.height_px as f64);
    let vgap = MIN_VERTICAL_SPACING.max(0.04 * h0);
    let hgaps = HORIZONTAL_GAP * (cols as f64 - 1.0);
    let vgaps = vgap * (rows as f64 - 1.0);

    let need_w = ir.panels.iter().map(panel_min_width).fold(0.0, f64::max);
    let mut width = w0;
    if (width - 2.0 * FIGURE_MARGIN - hgaps) / (cols as f64) < need_w {
        width = need_w * cols as f64 + hgaps + 2.0 * FIGURE_MARGIN;
        if width > GROWTH_CAP * w0 {
            return Err(ChartError::InfeasibleLayout(format!(
                "{cols} column(s) need a canvas {width:.0}px wide, more than {GROWTH_CAP}x the requested {w0:.0}px"
            )));
        }
    }
    let inner_w = width - 2.0 * FIGURE_MARGIN;
    let cell_w = (inner_w - hgaps) / cols as f64;

    let title_lines = wrap(&ir.figure_title, inner_w, FONT_TITLE);
    let summary_lines = wrap(&ir.figure_summary, inner_w, FONT_SUBTITLE);
    let title_h = block_height(title_lines.len(), FONT_TITLE) + block_height(summary_lines.len(), FONT_SUBTITLE);
    let title_block = if title_h > 0.0 { title_h + TITLE_PAD } else { 0.0 };

    let mut row_req = vec![0.0f64; rows];
    for (i, p) in ir.panels.iter().enumerate() {
        let r = i / cols;
        row_req[r] = row_req[r].max(panel_min_height(p, cell_w));
    }
    let required: f64 = row_req.iter().sum();
    let mut height = h0;
    let avail = height - 2.0 * FIGURE_MARGIN - title_block - vgaps;
    if required > avail {
        height += required - avail;
        if height > GROWTH_CAP * h0 {
            return Err(ChartError::InfeasibleLayout(format!(
                "{rows} row(s) need a canvas {height:.0}px tall, more than {GROWTH_CAP}x the requested {h0:.0}px"
            )));
        }
    }
    let avail = height - 2.0 * FIGURE_MARGIN - title_block - vgaps;
    let extra = ((avail - required) / rows as f64).max(0.0);
    let row_h: Vec<f64> = row_req.iter().map(|r| r + extra).collect();

    let grid_top = FIGURE_MARGIN + title_block;
    let mut panels = Vec::with_capacity(n);
    for (i, p) in ir.panels.iter().enumerate() {
        let (r, c) = (i / cols, i % cols);
        let y = grid_top + row_h[..r].iter().sum::<f64>() + vgap * r as f64;
        let x = FIGURE_MARGIN + (cell_w + HORIZONTAL_GAP) * c as f64;
        panels.push(panel_boxes(p, Rect::new(x, y, cell_w, row_h[r])));
    }
    let grid_h = row_h.iter().sum::<f64>() + vgaps;
    Ok(LayoutedFigure {
        canvas: Rect::new(0.0, 0.0, width, height),
        title_box: (title_h > 0.0).then(|| Rect::new(FIGURE_MARGIN, FIGURE_MARGIN, inner_w, title_h)),
        title_lines,
        summary_lines,
        panels,
        rows,
        cols,
        vertical_spacing: vgap,
        normalized_spacing: if rows >= 2 { vgap / grid_h } else { 0.0 },
    })
}
