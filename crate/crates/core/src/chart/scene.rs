//! Panel drawing. Every measurement used by `layout` is computed here by
//! the same code that places elements, so a box that layout sized with
//! `min_plot_height` is always large enough for what is drawn into it.

use std::collections::HashMap;

use super::layout::{LayoutedFigure, PanelBoxes};
use super::text::{block_height, line_height, text_width, wrap, BASELINE_FACTOR, FONT_HEADING, FONT_SMALL, FONT_SUBTITLE, FONT_TITLE};
use super::{ChartIR, PanelSpec, Rect};
use crate::metadata::{ChartKind, PERCENT_UNIT};

/// Distinct hues, no greys; cycled when a panel has more series.
pub const DEFAULT_PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
pub const TEXT_COLOR: &str = "#222222";
pub const INSIDE_TEXT_COLOR: &str = "#ffffff";
pub const AXIS_COLOR: &str = "#333333";

const LABEL_GAP: f64 = 6.0;
const BAR_MIN: f64 = 18.0;
const BAR_MAX: f64 = 36.0;
const BAR_GAP: f64 = 2.0;
const GROUP_GAP: f64 = 10.0;
const PAD: f64 = 4.0;
const ZONE_MIN: f64 = 60.0;
const SWATCH: f64 = 10.0;
const SWATCH_GAP: f64 = 4.0;
const MARKER_R: f64 = 3.0;
const PIE_MIN: f64 = 64.0;
const PIE_MULTI_MIN: f64 = 48.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

impl Anchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::Start => "start",
            Anchor::Middle => "middle",
            Anchor::End => "end",
        }
    }

    pub fn parse(s: &str) -> Anchor {
        match s {
            "middle" => Anchor::Middle,
            "end" => Anchor::End,
            _ => Anchor::Start,
        }
    }
}

/// Box occupied by one line of text under the fixed glyph metrics.
pub fn text_box(x: f64, baseline: f64, size: f64, anchor: Anchor, content: &str) -> Rect {
    let w = text_width(content, size);
    let left = match anchor {
        Anchor::Start => x,
        Anchor::Middle => x - w / 2.0,
        Anchor::End => x - w,
    };
    Rect::new(left, baseline - BASELINE_FACTOR * size, w, line_height(size))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Text {
        id: String,
        class: &'static str,
        x: f64,
        y: f64,
        size: f64,
        anchor: Anchor,
        bold: bool,
        fill: String,
        content: String,
    },
    Rect {
        id: String,
        class: &'static str,
        rect: Rect,
        fill: String,
    },
    Circle {
        id: String,
        class: &'static str,
        cx: f64,
        cy: f64,
        r: f64,
        fill: String,
    },
    Line {
        class: &'static str,
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: String,
    },
    Path {
        class: &'static str,
        d: String,
        fill: String,
        stroke: String,
        opacity: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub figure: Vec<Element>,
    pub panels: Vec<Vec<Element>>,
}

/// Shortest decimal rendering of a value, with `%` for percentages.
pub fn format_value(value: f64, unit: Option<&str>) -> String {
    let v = if value == 0.0 { 0.0 } else { value };
    match unit {
        Some(PERCENT_UNIT) => format!("{v}%"),
        _ => format!("{v}"),
    }
}

fn parse_hex(c: &str) -> Option<(u8, u8, u8)> {
    let h = c.trim().strip_prefix('#')?;
    let digit = |s: &str| u8::from_str_radix(s, 16).ok();
    match h.len() {
        6 => Some((digit(&h[0..2])?, digit(&h[2..4])?, digit(&h[4..6])?)),
        3 => {
            let d = |i: usize| digit(&h[i..i + 1]).map(|v| v * 17);
            Some((d(0)?, d(1)?, d(2)?))
        }
        _ => None,
    }
}

/// True for greys, black and white, by name or by low chroma.
pub fn is_greyish(color: &str) -> bool {
    let lower = color.trim().to_lowercase();
    if ["black", "white", "silver", "gainsboro", "whitesmoke"].contains(&lower.as_str())
        || lower.contains("grey")
        || lower.contains("gray")
    {
        return true;
    }
    match parse_hex(&lower) {
        Some((r, g, b)) => r.max(g).max(b) - r.min(g).min(b) < 24,
        None => false,
    }
}

fn palette(panel: &PanelSpec) -> Vec<String> {
    let usable: Vec<String> = panel
        .palette
        .iter()
        .filter(|c| parse_hex(c).is_some() && !is_greyish(c))
        .cloned()
        .collect();
    if usable.is_empty() {
        DEFAULT_PALETTE.iter().map(|c| c.to_string()).collect()
    } else {
        usable
    }
}

fn lh() -> f64 {
    line_height(FONT_SMALL)
}

fn lines_height(lines: &[String]) -> f64 {
    block_height(lines.len(), FONT_SMALL)
}

fn label_lines(text: &Option<String>, w: f64) -> Vec<String> {
    text.as_deref().map(|t| wrap(t, w, FONT_SMALL)).unwrap_or_default()
}

fn band(lines: &[String]) -> f64 {
    if lines.is_empty() {
        0.0
    } else {
        lines_height(lines) + PAD
    }
}

#[derive(Debug, Clone)]
struct Cell {
    value: f64,
    text: String,
}

/// Panel data as a category-by-series matrix. Repeated labels within one
/// series become separate categories so no value is dropped.
struct Table {
    cats: Vec<String>,
    names: Vec<String>,
    cells: Vec<Vec<Option<Cell>>>,
}

impl Table {
    fn new(panel: &PanelSpec) -> Table {
        let mut keys: Vec<(String, usize)> = Vec::new();
        let mut placed: Vec<Vec<(usize, Cell)>> = Vec::new();
        for s in &panel.series {
            let mut seen: HashMap<&str, usize> = HashMap::new();
            let mut row = Vec::new();
            for p in &s.points {
                let k = seen.entry(p.label.as_str()).or_insert(0);
                let key = (p.label.clone(), *k);
                *k += 1;
                let ci = match keys.iter().position(|x| *x == key) {
                    Some(i) => i,
                    None => {
                        keys.push(key);
                        keys.len() - 1
                    }
                };
                row.push((
                    ci,
                    Cell {
                        value: p.value,
                        text: format_value(p.value, p.unit.as_deref()),
                    },
                ));
            }
            placed.push(row);
        }
        let mut cells = vec![vec![None; panel.series.len()]; keys.len()];
        for (si, row) in placed.into_iter().enumerate() {
            for (ci, cell) in row {
                cells[ci][si] = Some(cell);
            }
        }
        Table {
            cats: keys.into_iter().map(|(l, _)| l).collect(),
            names: panel
                .series
                .iter()
                .enumerate()
                .map(|(i, s)| if s.name.trim().is_empty() { format!("Series {}", i + 1) } else { s.name.clone() })
                .collect(),
            cells,
        }
    }

    fn n_cats(&self) -> usize {
        self.cats.len()
    }

    fn n_series(&self) -> usize {
        self.names.len()
    }

    fn all(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().flatten().flatten()
    }

    fn label_width(&self) -> f64 {
        self.all().map(|c| text_width(&c.text, FONT_SMALL)).fold(0.0, f64::max)
    }

    fn domain(&self) -> (f64, f64) {
        let lo = self.all().map(|c| c.value).fold(0.0, f64::min);
        let hi = self.all().map(|c| c.value).fold(0.0, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    }

    fn has_negative(&self) -> bool {
        self.all().any(|c| c.value < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    HBar { stacked: bool },
    VBar { gap: f64 },
    Line { area: bool },
    Pie,
}

fn family(kind: &ChartKind) -> Family {
    match kind {
        ChartKind::HorizontalBar => Family::HBar { stacked: false },
        ChartKind::StackedBar => Family::HBar { stacked: true },
        ChartKind::Histogram => Family::VBar { gap: 1.0 },
        ChartKind::Line => Family::Line { area: false },
        ChartKind::Area => Family::Line { area: true },
        ChartKind::Pie => Family::Pie,
        ChartKind::Bar | ChartKind::GroupedBar | ChartKind::Unknown(_) => Family::VBar { gap: 8.0 },
    }
}

fn shows_legend(t: &Table) -> bool {
    t.n_series() > 1
}

/// Height of the series legend drawn under the plot, zero when absent.
pub fn legend_height(panel: &PanelSpec, width: f64) -> f64 {
    let t = Table::new(panel);
    if !shows_legend(&t) {
        return 0.0;
    }
    let text_w = width - SWATCH - SWATCH_GAP;
    PAD + t.names.iter().map(|n| lines_height(&wrap(n, text_w, FONT_SMALL)).max(lh())).sum::<f64>()
}

// ---- horizontal bars ----

struct HGeom {
    label_w: f64,
    bar_h: f64,
    cat_lines: Vec<Vec<String>>,
    group_h: Vec<f64>,
    total: f64,
}

fn h_geom(t: &Table, stacked: bool, w: f64, avail: Option<f64>) -> HGeom {
    let widest = t.cats.iter().map(|c| text_width(c, FONT_SMALL)).fold(0.0, f64::max);
    let label_w = if widest > 0.0 { (0.35 * w).min(widest + LABEL_GAP) } else { 0.0 };
    let cat_lines: Vec<Vec<String>> = t
        .cats
        .iter()
        .map(|c| if label_w > 0.0 { wrap(c, label_w - LABEL_GAP, FONT_SMALL) } else { Vec::new() })
        .collect();
    let bars = if stacked { 1.0 } else { t.n_series() as f64 };
    let measure = |bar_h: f64| {
        let group_h: Vec<f64> = cat_lines
            .iter()
            .map(|l| (bars * bar_h + (bars - 1.0) * BAR_GAP).max(lines_height(l)))
            .collect();
        let total = PAD + group_h.iter().sum::<f64>() + GROUP_GAP * (t.n_cats() as f64 - 1.0).max(0.0) + PAD;
        (group_h, total)
    };
    let mut bar_h = BAR_MIN;
    if let Some(avail) = avail {
        let mut candidate = BAR_MAX;
        while candidate > BAR_MIN {
            if measure(candidate).1 <= avail {
                bar_h = candidate;
                break;
            }
            candidate -= 1.0;
        }
    }
    let (group_h, total) = measure(bar_h);
    HGeom {
        label_w,
        bar_h,
        cat_lines,
        group_h,
        total,
    }
}

/// (left, right) space kept free of bars for value labels.
fn h_reserve(t: &Table, stacked: bool) -> (f64, f64) {
    let tw = t.label_width();
    if stacked {
        let right = t
            .cells
            .iter()
            .map(|row| row.iter().flatten().map(|c| text_width(&c.text, FONT_SMALL) + PAD).sum::<f64>())
            .fold(0.0, f64::max);
        (0.0, right)
    } else {
        (if t.has_negative() { tw + PAD } else { 0.0 }, tw + PAD)
    }
}

fn stack_max(t: &Table) -> f64 {
    let m = t
        .cells
        .iter()
        .map(|row| row.iter().flatten().map(|c| c.value).sum::<f64>())
        .fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

// ---- vertical bars and lines share a category axis along x ----

fn slot_min(t: &Table, fam: Family) -> f64 {
    let tw = t.label_width();
    match fam {
        Family::VBar { gap } => t.n_series() as f64 * (tw + PAD).max(12.0) + gap,
        _ => (tw + PAD).max(24.0),
    }
}

fn cat_band_lines(t: &Table, slot: f64) -> Vec<Vec<String>> {
    t.cats.iter().map(|c| wrap(c, slot - PAD, FONT_SMALL)).collect()
}

fn cat_band_height(lines: &[Vec<String>]) -> f64 {
    let n = lines.iter().map(Vec::len).max().unwrap_or(0);
    if n == 0 {
        0.0
    } else {
        block_height(n, FONT_SMALL) + PAD
    }
}

// ---- pies ----

fn pie_single_rows(t: &Table, w: f64) -> (f64, Vec<Vec<String>>) {
    let label_x = SWATCH + SWATCH_GAP + t.label_width() + LABEL_GAP;
    let rows: Vec<Vec<String>> = t.cats.iter().map(|c| wrap(c, w - label_x, FONT_SMALL)).collect();
    (label_x, rows)
}

fn pie_rows_height(rows: &[Vec<String>]) -> f64 {
    rows.iter().map(|r| lines_height(r).max(lh()) + 2.0).sum()
}

/// Narrowest plot box a panel can be drawn into without collisions.
pub fn min_plot_width(panel: &PanelSpec) -> f64 {
    let t = Table::new(panel);
    let fam = family(&panel.kind);
    match fam {
        Family::HBar { stacked } => {
            let (l, r) = h_reserve(&t, stacked);
            (l + r + 40.0) / 0.65
        }
        Family::VBar { .. } | Family::Line { .. } => (t.n_cats() as f64 * slot_min(&t, fam)).max(120.0),
        Family::Pie if t.n_series() <= 1 => (SWATCH + SWATCH_GAP + t.label_width() + LABEL_GAP + 60.0).max(100.0),
        Family::Pie => {
            let col = (SWATCH + SWATCH_GAP + t.label_width() + PAD).max(PIE_MULTI_MIN + 8.0);
            (t.n_cats() as f64 * col).max(100.0)
        }
    }
}

fn axis_frame(panel: &PanelSpec, plot: Rect) -> (Vec<String>, Vec<String>, Rect) {
    if family(&panel.kind) == Family::Pie {
        return (Vec::new(), Vec::new(), plot);
    }
    let y = label_lines(&panel.y_label, plot.w);
    let x = label_lines(&panel.x_label, plot.w);
    let (top, bottom) = (band(&y), band(&x));
    (y, x, Rect::new(plot.x, plot.y + top, plot.w, plot.h - top - bottom))
}

fn region_min_height(panel: &PanelSpec, t: &Table, w: f64) -> f64 {
    let fam = family(&panel.kind);
    match fam {
        Family::HBar { stacked } => h_geom(t, stacked, w, None).total,
        Family::VBar { .. } => {
            let slot = w / t.n_cats().max(1) as f64;
            let neg = if t.has_negative() { lh() + 2.0 } else { 0.0 };
            lh() + 2.0 + ZONE_MIN + neg + cat_band_height(&cat_band_lines(t, slot))
        }
        Family::Line { .. } => {
            let slot = w / t.n_cats().max(1) as f64;
            t.n_series() as f64 * lh() + 2.0 + ZONE_MIN + cat_band_height(&cat_band_lines(t, slot))
        }
        Family::Pie if t.n_series() <= 1 => PIE_MIN + PAD + pie_rows_height(&pie_single_rows(t, w).1),
        Family::Pie => {
            let col = w / t.n_cats().max(1) as f64;
            cat_band_height(&cat_band_lines(t, col)) + PIE_MULTI_MIN + PAD + t.n_series() as f64 * (lh() + 2.0)
        }
    }
}

/// Smallest plot height for a plot box of width `width`, axis labels included.
pub fn min_plot_height(panel: &PanelSpec, width: f64) -> f64 {
    let t = Table::new(panel);
    let (y, x, _) = axis_frame(panel, Rect::new(0.0, 0.0, width, 0.0));
    band(&y) + band(&x) + region_min_height(panel, &t, width)
}

struct Painter {
    prefix: String,
    counter: usize,
    out: Vec<Element>,
}

impl Painter {
    fn id(&mut self, what: &str) -> String {
        self.counter += 1;
        format!("{}-{what}-{}", self.prefix, self.counter)
    }

    #[allow(clippy::too_many_arguments)]
    fn text(&mut self, what: &str, class: &'static str, x: f64, baseline: f64, size: f64, anchor: Anchor, fill: &str, content: &str) {
        let id = self.id(what);
        self.out.push(Element::Text {
            id,
            class,
            x,
            y: baseline,
            size,
            anchor,
            bold: class == "heading" || class == "title",
            fill: fill.to_string(),
            content: content.to_string(),
        });
    }

    /// Stacks `lines` downward from `top`; returns the height used.
    #[allow(clippy::too_many_arguments)]
    fn lines(&mut self, what: &str, class: &'static str, lines: &[String], x: f64, top: f64, size: f64, anchor: Anchor) -> f64 {
        for (i, l) in lines.iter().enumerate() {
            let baseline = top + i as f64 * line_height(size) + BASELINE_FACTOR * size;
            self.text(what, class, x, baseline, size, anchor, TEXT_COLOR, l);
        }
        block_height(lines.len(), size)
    }

    fn rect(&mut self, what: &str, class: &'static str, rect: Rect, fill: &str) {
        let id = self.id(what);
        self.out.push(Element::Rect {
            id,
            class,
            rect,
            fill: fill.to_string(),
        });
    }

    fn line(&mut self, class: &'static str, x1: f64, y1: f64, x2: f64, y2: f64) {
        self.out.push(Element::Line {
            class,
            x1,
            y1,
            x2,
            y2,
            stroke: AXIS_COLOR.to_string(),
        });
    }

    /// Value label vertically centered on a row of height `h` starting at `top`.
    fn centered(&mut self, x: f64, top: f64, h: f64, anchor: Anchor, fill: &str, content: &str) {
        let baseline = top + (h - lh()) / 2.0 + BASELINE_FACTOR * FONT_SMALL;
        self.text("value", "value-label", x, baseline, FONT_SMALL, anchor, fill, content);
    }
}

fn draw_hbar(p: &mut Painter, panel: &PanelSpec, t: &Table, r: Rect, pal: &[String], stacked: bool) {
    let g = h_geom(t, stacked, r.w, Some(r.h));
    let ax = r.x + g.label_w;
    let (res_l, res_r) = h_reserve(t, stacked);
    let span = (r.right() - ax - res_l - res_r).max(1.0);
    let (lo, hi) = if stacked { (0.0, stack_max(t)) } else { t.domain() };
    let xpos = |v: f64| ax + res_l + (v - lo) / (hi - lo) * span;
    let x0 = xpos(0.0);
    let bottom = r.y + g.total;
    p.line("axis y-axis", x0, r.y, x0, bottom);
    p.line("axis x-axis", ax, bottom, r.right(), bottom);

    let mut top = r.y + PAD;
    for (ci, row) in t.cells.iter().enumerate() {
        let gh = g.group_h[ci];
        let lines = &g.cat_lines[ci];
        let label_top = top + (gh - lines_height(lines)) / 2.0;
        p.lines("category", "category-label", lines, ax - LABEL_GAP, label_top, FONT_SMALL, Anchor::End);
        if stacked {
            let bar_top = top + (gh - g.bar_h) / 2.0;
            let mut acc = 0.0;
            let mut cursor = x0;
            let mut overflow = Vec::new();
            for (si, cell) in row.iter().enumerate() {
                let Some(cell) = cell else { continue };
                acc += cell.value;
                let end = xpos(acc);
                let rect = Rect::new(cursor, bar_top, end - cursor, g.bar_h);
                p.rect("bar", "mark bar", rect, &pal[si % pal.len()]);
                if panel.show_value_labels {
                    let tw = text_width(&cell.text, FONT_SMALL);
                    if rect.w >= tw + LABEL_GAP {
                        p.centered(rect.x + rect.w / 2.0, bar_top, g.bar_h, Anchor::Middle, INSIDE_TEXT_COLOR, &cell.text);
                    } else {
                        overflow.push(cell.text.clone());
                    }
                }
                cursor = end;
            }
            let mut x = cursor + 3.0;
            for text in overflow {
                p.centered(x, bar_top, g.bar_h, Anchor::Start, TEXT_COLOR, &text);
                x += text_width(&text, FONT_SMALL) + PAD;
            }
        } else {
            let n = t.n_series() as f64;
            let used = n * g.bar_h + (n - 1.0) * BAR_GAP;
            let mut bar_top = top + (gh - used) / 2.0;
            for (si, cell) in row.iter().enumerate() {
                if let Some(cell) = cell {
                    let xv = xpos(cell.value);
                    let rect = Rect::new(x0.min(xv), bar_top, (xv - x0).abs(), g.bar_h);
                    p.rect("bar", "mark bar", rect, &pal[si % pal.len()]);
                    if panel.show_value_labels {
                        let tw = text_width(&cell.text, FONT_SMALL);
                        if rect.w >= tw + LABEL_GAP {
                            p.centered(rect.x + rect.w / 2.0, bar_top, g.bar_h, Anchor::Middle, INSIDE_TEXT_COLOR, &cell.text);
                        } else if cell.value >= 0.0 {
                            p.centered(xv + 3.0, bar_top, g.bar_h, Anchor::Start, TEXT_COLOR, &cell.text);
                        } else {
                            p.centered(xv - 3.0, bar_top, g.bar_h, Anchor::End, TEXT_COLOR, &cell.text);
                        }
                    }
                }
                bar_top += g.bar_h + BAR_GAP;
            }
        }
        top += gh + GROUP_GAP;
    }
}

fn draw_cat_band(p: &mut Painter, t: &Table, r: Rect, slot: f64) -> f64 {
    let lines = cat_band_lines(t, slot);
    let h = cat_band_height(&lines);
    let top = r.bottom() - h + PAD;
    for (ci, l) in lines.iter().enumerate() {
        let cx = r.x + (ci as f64 + 0.5) * slot;
        p.lines("category", "category-label", l, cx, top, FONT_SMALL, Anchor::Middle);
    }
    h
}

fn draw_vbar(p: &mut Painter, panel: &PanelSpec, t: &Table, r: Rect, pal: &[String], gap: f64) {
    let slot = r.w / t.n_cats().max(1) as f64;
    let band_h = draw_cat_band(p, t, r, slot);
    let neg = if t.has_negative() { lh() + 2.0 } else { 0.0 };
    let zone_top = r.y + lh() + 2.0;
    let zone_bottom = r.bottom() - band_h - neg;
    let (lo, hi) = t.domain();
    let ypos = |v: f64| zone_bottom - (v - lo) / (hi - lo) * (zone_bottom - zone_top);
    let y0 = ypos(0.0);
    p.line("axis x-axis", r.x, y0, r.right(), y0);
    p.line("axis y-axis", r.x, zone_top, r.x, zone_bottom);
    let n = t.n_series() as f64;
    let bar_w = (slot - gap) / n;
    for (ci, row) in t.cells.iter().enumerate() {
        for (si, cell) in row.iter().enumerate() {
            let Some(cell) = cell else { continue };
            let x = r.x + ci as f64 * slot + gap / 2.0 + si as f64 * bar_w;
            let yv = ypos(cell.value);
            let rect = Rect::new(x, y0.min(yv), bar_w, (yv - y0).abs());
            p.rect("bar", "mark bar", rect, &pal[si % pal.len()]);
            if !panel.show_value_labels {
                continue;
            }
            let cx = x + bar_w / 2.0;
            let inside = rect.h >= lh() + PAD && bar_w >= text_width(&cell.text, FONT_SMALL) + PAD;
            let top = match (inside, cell.value >= 0.0) {
                (true, true) => rect.y + 2.0,
                (true, false) => rect.bottom() - 2.0 - lh(),
                (false, true) => rect.y - 2.0 - lh(),
                (false, false) => rect.bottom() + 2.0,
            };
            let fill = if inside { INSIDE_TEXT_COLOR } else { TEXT_COLOR };
            p.centered(cx, top, lh(), Anchor::Middle, fill, &cell.text);
        }
    }
}

fn draw_line(p: &mut Painter, panel: &PanelSpec, t: &Table, r: Rect, pal: &[String], area: bool) {
    let slot = r.w / t.n_cats().max(1) as f64;
    let band_h = draw_cat_band(p, t, r, slot);
    let value_band = t.n_series() as f64 * lh() + 2.0;
    let zone_top = r.y + value_band + 6.0;
    let zone_bottom = r.bottom() - band_h - 6.0;
    let (lo, hi) = t.domain();
    let ypos = |v: f64| zone_bottom - (v - lo) / (hi - lo) * (zone_bottom - zone_top);
    let y0 = ypos(0.0);
    p.line("axis x-axis", r.x, y0, r.right(), y0);
    p.line("axis y-axis", r.x, zone_top - 6.0, r.x, zone_bottom + 6.0);
    for si in 0..t.n_series() {
        let color = &pal[si % pal.len()];
        let pts: Vec<(f64, f64, &Cell)> = t
            .cells
            .iter()
            .enumerate()
            .filter_map(|(ci, row)| row[si].as_ref().map(|c| (r.x + (ci as f64 + 0.5) * slot, ypos(c.value), c)))
            .collect();
        let coords: Vec<String> = pts.iter().map(|(x, y, _)| format!("{x:.2},{y:.2}")).collect();
        if area && !pts.is_empty() {
            let (first, last) = (pts[0].0, pts[pts.len() - 1].0);
            p.out.push(Element::Path {
                class: "area",
                d: format!("M{first:.2},{y0:.2} L{} L{last:.2},{y0:.2} Z", coords.join(" L")),
                fill: color.clone(),
                stroke: "none".into(),
                opacity: 0.35,
            });
        }
        p.out.push(Element::Path {
            class: "series-line",
            d: format!("M{}", coords.join(" L")),
            fill: "none".into(),
            stroke: color.clone(),
            opacity: 1.0,
        });
        for (x, y, cell) in &pts {
            let id = p.id("point");
            p.out.push(Element::Circle {
                id,
                class: "mark point",
                cx: *x,
                cy: *y,
                r: MARKER_R,
                fill: color.clone(),
            });
            if panel.show_value_labels {
                p.centered(*x, r.y + si as f64 * lh(), lh(), Anchor::Middle, color, &cell.text);
            }
        }
    }
}

fn slice_path(cx: f64, cy: f64, r: f64, a0: f64, a1: f64) -> String {
    let (s0, c0) = a0.sin_cos();
    let (s1, c1) = a1.sin_cos();
    let large = if a1 - a0 > std::f64::consts::PI { 1 } else { 0 };
    format!(
        "M{cx:.2},{cy:.2} L{:.2},{:.2} A{r:.2},{r:.2} 0 {large} 1 {:.2},{:.2} Z",
        cx + r * s0,
        cy - r * c0,
        cx + r * s1,
        cy - r * c1
    )
}

/// Slices proportional to each value's share of the total, clockwise from
/// twelve o'clock. Totals need not be 100.
fn draw_pie_disc(p: &mut Painter, cx: f64, cy: f64, radius: f64, values: &[(usize, f64)], pal: &[String]) {
    let total: f64 = values.iter().map(|(_, v)| v).sum();
    if total <= 0.0 || radius <= 0.0 {
        return;
    }
    let nonzero: Vec<&(usize, f64)> = values.iter().filter(|(_, v)| *v > 0.0).collect();
    if nonzero.len() == 1 {
        let id = p.id("slice");
        p.out.push(Element::Circle {
            id,
            class: "slice",
            cx,
            cy,
            r: radius,
            fill: pal[nonzero[0].0 % pal.len()].clone(),
        });
        return;
    }
    let mut angle = 0.0;
    for (i, v) in values {
        if *v <= 0.0 {
            continue;
        }
        let sweep = v / total * std::f64::consts::TAU;
        p.out.push(Element::Path {
            class: "slice",
            d: slice_path(cx, cy, radius, angle, angle + sweep),
            fill: pal[i % pal.len()].clone(),
            stroke: "#ffffff".into(),
            opacity: 1.0,
        });
        angle += sweep;
    }
}

fn swatch_row(p: &mut Painter, x: f64, top: f64, color: &str) {
    let rect = Rect::new(x, top + (lh() - SWATCH) / 2.0, SWATCH, SWATCH);
    p.rect("swatch", "mark swatch", rect, color);
}

fn draw_pie(p: &mut Painter, panel: &PanelSpec, t: &Table, r: Rect, pal: &[String]) {
    if t.n_series() <= 1 {
        let (label_x, rows) = pie_single_rows(t, r.w);
        let rows_h = pie_rows_height(&rows);
        let pie_h = r.h - rows_h - PAD;
        let radius = (r.w.min(pie_h) / 2.0 - 2.0).max(0.0);
        let values: Vec<(usize, f64)> = t.cells.iter().enumerate().filter_map(|(i, row)| row[0].as_ref().map(|c| (i, c.value))).collect();
        draw_pie_disc(p, r.x + r.w / 2.0, r.y + pie_h / 2.0, radius, &values, pal);
        let mut top = r.y + pie_h + PAD;
        for (ci, row) in t.cells.iter().enumerate() {
            let lines = &rows[ci];
            swatch_row(p, r.x, top, &pal[ci % pal.len()]);
            if let (Some(cell), true) = (&row[0], panel.show_value_labels) {
                p.centered(r.x + SWATCH + SWATCH_GAP, top, lh(), Anchor::Start, TEXT_COLOR, &cell.text);
            }
            p.lines("category", "category-label", lines, r.x + label_x, top, FONT_SMALL, Anchor::Start);
            top += lines_height(lines).max(lh()) + 2.0;
        }
    } else {
        let col = r.w / t.n_cats().max(1) as f64;
        let cap = cat_band_lines(t, col);
        let cap_h = cat_band_height(&cap);
        let rows_h = t.n_series() as f64 * (lh() + 2.0);
        let pie_h = r.h - cap_h - rows_h - PAD;
        let radius = ((col - 8.0).min(pie_h) / 2.0 - 2.0).max(0.0);
        for (ci, row) in t.cells.iter().enumerate() {
            let cx = r.x + (ci as f64 + 0.5) * col;
            p.lines("category", "category-label", &cap[ci], cx, r.y, FONT_SMALL, Anchor::Middle);
            let values: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(si, c)| c.as_ref().map(|c| (si, c.value))).collect();
            draw_pie_disc(p, cx, r.y + cap_h + pie_h / 2.0, radius, &values, pal);
            let mut top = r.y + cap_h + pie_h + PAD;
            let left = r.x + ci as f64 * col + 4.0;
            for (si, cell) in row.iter().enumerate() {
                if let Some(cell) = cell {
                    swatch_row(p, left, top, &pal[si % pal.len()]);
                    if panel.show_value_labels {
                        p.centered(left + SWATCH + SWATCH_GAP, top, lh(), Anchor::Start, TEXT_COLOR, &cell.text);
                    }
                }
                top += lh() + 2.0;
            }
        }
    }
}

fn draw_legend(p: &mut Painter, t: &Table, r: Rect, pal: &[String]) {
    let mut top = r.y + PAD;
    for (si, name) in t.names.iter().enumerate() {
        let lines = wrap(name, r.w - SWATCH - SWATCH_GAP, FONT_SMALL);
        swatch_row(p, r.x, top, &pal[si % pal.len()]);
        p.lines("legend", "legend-label", &lines, r.x + SWATCH + SWATCH_GAP, top, FONT_SMALL, Anchor::Start);
        top += lines_height(&lines).max(lh());
    }
}

fn draw_panel(index: usize, panel: &PanelSpec, boxes: &PanelBoxes) -> Vec<Element> {
    let mut p = Painter {
        prefix: format!("p{index}"),
        counter: 0,
        out: Vec::new(),
    };
    if let Some(h) = boxes.heading {
        p.lines("heading", "heading", &boxes.heading_lines, h.x, h.y, FONT_HEADING, Anchor::Start);
    }
    let t = Table::new(panel);
    let pal = palette(panel);
    let (ylines, xlines, region) = axis_frame(panel, boxes.plot);
    p.lines("ylabel", "axis-label", &ylines, boxes.plot.x, boxes.plot.y, FONT_SMALL, Anchor::Start);
    if !xlines.is_empty() {
        let top = boxes.plot.bottom() - lines_height(&xlines);
        p.lines("xlabel", "axis-label", &xlines, boxes.plot.x + boxes.plot.w / 2.0, top, FONT_SMALL, Anchor::Middle);
    }
    match family(&panel.kind) {
        Family::HBar { stacked } => draw_hbar(&mut p, panel, &t, region, &pal, stacked),
        Family::VBar { gap } => draw_vbar(&mut p, panel, &t, region, &pal, gap),
        Family::Line { area } => draw_line(&mut p, panel, &t, region, &pal, area),
        Family::Pie => draw_pie(&mut p, panel, &t, region, &pal),
    }
    if let (Some(l), true) = (boxes.legend, shows_legend(&t)) {
        draw_legend(&mut p, &t, l, &pal);
    }
    p.out
}

/// Positions every element of the figure in absolute canvas coordinates.
pub fn build_scene(figure: &LayoutedFigure, ir: &ChartIR) -> Scene {
    let mut title = Painter {
        prefix: "figure".into(),
        counter: 0,
        out: Vec::new(),
    };
    if let Some(b) = figure.title_box {
        let cx = b.x + b.w / 2.0;
        let used = title.lines("title", "title", &figure.title_lines, cx, b.y, FONT_TITLE, Anchor::Middle);
        title.lines("summary", "summary", &figure.summary_lines, cx, b.y + used, FONT_SUBTITLE, Anchor::Middle);
    }
    Scene {
        width: figure.canvas.w,
        height: figure.canvas.h,
        figure: title.out,
        panels: ir
            .panels
            .iter()
            .zip(&figure.panels)
            .enumerate()
            .map(|(i, (panel, boxes))| draw_panel(i + 1, panel, boxes))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(35.0, Some("percent")), "35%");
        assert_eq!(format_value(0.25, None), "0.25");
        assert_eq!(format_value(-0.0, None), "0");
        assert_eq!(format_value(1200.0, Some("USD")), "1200");
    }

    #[test]
    fn grey_detection() {
        for c in ["#000000", "#ffffff", "#808080", "#777", "grey", "DarkGray", "black"] {
            assert!(is_greyish(c), "{c}");
        }
        for c in DEFAULT_PALETTE {
            assert!(!is_greyish(c), "{c}");
        }
    }

    #[test]
    fn text_box_anchors() {
        let b = text_box(100.0, 50.0, 10.0, Anchor::Middle, "abcd");
        assert_eq!(b, Rect::new(88.0, 41.0, 24.0, 12.0));
        assert_eq!(text_box(100.0, 50.0, 10.0, Anchor::End, "abcd").x, 76.0);
    }
}
