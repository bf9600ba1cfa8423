use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Arrangement, ChartError, ChartIR, HeadingAnchor, PanelSpec, PixelSize, Point, Series};
use crate::metadata::{Alignment, ChartKind, MetadataDoc, StatBlock, Subchart};

/// Smallest panel box the compiler requests, whatever the metadata says.
pub const MIN_PANEL_WIDTH: u32 = 360;
pub const MIN_PANEL_HEIGHT: u32 = 240;
const TITLE_ALLOWANCE: u32 = 60;
const GAP: u32 = 16;

/// Direction implied by one subchart's placement phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Vertical,
    Horizontal,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub arrangement: Arrangement,
    /// One entry per subchart; `None` when the phrase carries no direction.
    pub votes: Vec<Option<Placement>>,
    pub warnings: Vec<String>,
}

fn corner_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:top|upper|bottom|lower)[- ]?(?:left|right)\b|\bcorner\b").unwrap())
}

fn horizontal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:right|left|beside|next to|side by side|side-by-side|adjacent|alongside)\b").unwrap())
}

fn vertical_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:below|under|underneath|beneath|bottom|above|top|stacked)\b").unwrap())
}

fn classify(phrase: &str) -> Option<Placement> {
    if corner_re().is_match(phrase) {
        return Some(Placement::Grid);
    }
    match (horizontal_re().is_match(phrase), vertical_re().is_match(phrase)) {
        (true, true) => Some(Placement::Grid),
        (true, false) => Some(Placement::Horizontal),
        (false, true) => Some(Placement::Vertical),
        (false, false) => None,
    }
}

/// Resolves the figure arrangement from the placement phrases.
///
/// Later subcharts whose phrase names no direction fall back to their
/// alignment field, and failing that count as vertical with a warning.
/// Unanimous vertical gives a column, unanimous horizontal a row, anything
/// mixed a near-square grid.
pub fn resolve_placement(doc: &MetadataDoc) -> PlacementReport {
    let mut votes = Vec::with_capacity(doc.subcharts.len());
    let mut warnings = Vec::new();
    for (i, sub) in doc.subcharts.iter().enumerate() {
        let mut vote = classify(&sub.position_chart);
        if vote.is_none() && i > 0 {
            vote = match sub.alignment {
                Alignment::Horizontal => Some(Placement::Horizontal),
                Alignment::Vertical => Some(Placement::Vertical),
                Alignment::Unspecified => {
                    warnings.push(format!(
                        "subchart_{}: placement `{}` names no direction; assuming below the previous subchart",
                        i + 1,
                        sub.position_chart
                    ));
                    Some(Placement::Vertical)
                }
            };
        }
        votes.push(vote);
    }
    let n = doc.subcharts.len();
    let has = |p: Placement| votes.contains(&Some(p));
    let arrangement = if n <= 1 {
        Arrangement::Column
    } else if has(Placement::Grid) || (has(Placement::Horizontal) && has(Placement::Vertical)) {
        let cols = (n as f64).sqrt().ceil() as usize;
        Arrangement::Grid {
            rows: n.div_ceil(cols),
            cols,
        }
    } else if has(Placement::Horizontal) {
        Arrangement::Row
    } else {
        Arrangement::Column
    };
    PlacementReport {
        arrangement,
        votes,
        warnings,
    }
}

fn heading_anchor(phrase: Option<&str>) -> HeadingAnchor {
    let Some(p) = phrase else {
        return HeadingAnchor::Above;
    };
    let p = p.to_lowercase();
    let has = |w: &str| p.split(|c: char| !c.is_alphanumeric()).any(|t| t == w);
    if has("above") || has("top") || has("over") {
        HeadingAnchor::Above
    } else if has("below") || has("under") || has("bottom") || has("beneath") {
        HeadingAnchor::Below
    } else if has("left") {
        HeadingAnchor::Left
    } else if has("right") {
        HeadingAnchor::Right
    } else {
        HeadingAnchor::Above
    }
}

fn point(label: &str, value: f64, unit: &Option<String>) -> Point {
    Point {
        label: label.to_string(),
        value,
        unit: unit.clone(),
    }
}

/// Statistics to series: a single list stays one series; categorized
/// blocks are transposed so that value labels become series and categories
/// become point labels.
fn series_from_stats(stats: &StatBlock) -> Vec<Series> {
    if stats.series.len() == 1 {
        let s = &stats.series[0];
        return vec![Series {
            name: s.category.clone(),
            points: s.values.iter().map(|v| point(&v.label, v.value, &v.unit)).collect(),
        }];
    }
    let mut out: Vec<Series> = Vec::new();
    for group in &stats.series {
        for v in &group.values {
            let p = point(&group.category, v.value, &v.unit);
            match out.iter_mut().find(|s| s.name == v.label) {
                Some(s) => s.points.push(p),
                None => out.push(Series {
                    name: v.label.clone(),
                    points: vec![p],
                }),
            }
        }
    }
    out
}

fn transpose_single(series: Vec<Series>) -> Vec<Series> {
    let Some(only) = series.into_iter().next() else {
        return Vec::new();
    };
    only.points
        .into_iter()
        .map(|p| Series {
            name: p.label,
            points: vec![Point {
                label: only.name.clone(),
                value: p.value,
                unit: p.unit,
            }],
        })
        .collect()
}

fn panel_from_subchart(index: usize, sub: &Subchart) -> Result<PanelSpec, ChartError> {
    if !sub.kind.is_known() {
        return Err(ChartError::UnrenderableKind {
            index,
            kind: sub.kind.as_str().to_string(),
        });
    }
    if sub.stats.value_count() == 0 {
        return Err(ChartError::EmptySeries { index });
    }
    let mut series: Vec<Series> = series_from_stats(&sub.stats)
        .into_iter()
        .filter(|s| !s.points.is_empty())
        .collect();
    match sub.kind {
        ChartKind::Line | ChartKind::Area if series.len() > 1 && series.iter().all(|s| s.points.len() == 1) => {
            series = vec![Series {
                name: String::new(),
                points: series.into_iter().flat_map(|s| s.points).collect(),
            }];
        }
        ChartKind::StackedBar | ChartKind::GroupedBar if series.len() == 1 => {
            series = transpose_single(series);
        }
        _ => {}
    }
    let dims = sub.dimensions.size().filter(|(w, h)| *w > 0 && *h > 0);
    let panel = PanelSpec {
        kind: sub.kind.clone(),
        series,
        x_label: sub.axis.x_label.clone(),
        y_label: sub.axis.y_label.clone(),
        heading: sub.text.clone(),
        heading_anchor: heading_anchor(sub.position_chart_text.as_deref()),
        palette: super::DEFAULT_PALETTE.iter().map(|c| c.to_string()).collect(),
        show_value_labels: true,
        requested_box: dims.map(|(width_px, height_px)| PixelSize { width_px, height_px }),
    };
    super::validate_panel(index, &panel)?;
    Ok(panel)
}

fn canvas_for(panels: &[PanelSpec], arrangement: Arrangement, has_title: bool) -> PixelSize {
    let n = panels.len();
    let (rows, cols) = arrangement.shape(n);
    let size = |p: &PanelSpec| {
        let r = p.requested_box.unwrap_or(PixelSize { width_px: 0, height_px: 0 });
        (r.width_px.max(MIN_PANEL_WIDTH), r.height_px.max(MIN_PANEL_HEIGHT))
    };
    let mut col_w = vec![0u32; cols];
    let mut row_h = vec![0u32; rows];
    for (i, p) in panels.iter().enumerate() {
        let (w, h) = size(p);
        col_w[i % cols] = col_w[i % cols].max(w);
        row_h[i / cols] = row_h[i / cols].max(h);
    }
    let margin = super::FIGURE_MARGIN as u32;
    let width = col_w.iter().sum::<u32>() + GAP * (cols as u32 - 1) + 2 * margin;
    let height = row_h.iter().sum::<u32>()
        + GAP * (rows as u32 - 1)
        + 2 * margin
        + if has_title { TITLE_ALLOWANCE } else { 0 };
    PixelSize {
        width_px: width,
        height_px: height,
    }
}

/// Deterministic metadata-to-program compiler: one panel per subchart, in
/// order, with statistics carried over unchanged.
pub fn compile_metadata(doc: &MetadataDoc) -> Result<ChartIR, ChartError> {
    if doc.subcharts.is_empty() {
        return Err(ChartError::InvalidIr("metadata has no subcharts".into()));
    }
    let panels = doc
        .subcharts
        .iter()
        .enumerate()
        .map(|(i, s)| panel_from_subchart(i + 1, s))
        .collect::<Result<Vec<_>, _>>()?;
    let placement = resolve_placement(doc);
    for w in &placement.warnings {
        log::warn!("{w}");
    }
    let has_title = !doc.title.trim().is_empty() || !doc.summary.trim().is_empty();
    Ok(ChartIR {
        figure_title: doc.title.clone(),
        figure_summary: doc.summary.clone(),
        canvas: canvas_for(&panels, placement.arrangement, has_title),
        panels,
        arrangement: placement.arrangement,
    })
}
