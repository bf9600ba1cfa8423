//! Declarative chart programs: compilation from metadata, deterministic
//! layout, SVG rendering, overlap detection and the mechanical checklist
//! used by the judge.
//!
//! Data model: a panel's `series` are legend entries and each point's label
//! is a category. A single uncategorized statistics list becomes one series.

mod compile;
mod constraints;
mod geometry;
mod layout;
mod overlap;
mod scene;
mod svg;
pub mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metadata::ChartKind;

pub use compile::{compile_metadata, resolve_placement, Placement, PlacementReport};
pub use constraints::{check_constraints, check_ir, CheckId, CheckResult, ConstraintReport};
pub use compile::{MIN_PANEL_HEIGHT, MIN_PANEL_WIDTH};
pub use geometry::Rect;
pub use layout::{layout, LayoutedFigure, PanelBoxes, FIGURE_MARGIN, GROWTH_CAP, HORIZONTAL_GAP, MIN_VERTICAL_SPACING};
pub use overlap::{detect_overlaps, OverlapKind, OverlapViolation};
pub use scene::{build_scene, format_value, is_greyish, text_box, Anchor, Element, Scene, DEFAULT_PALETTE};
pub use svg::{layout_and_render, render_svg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("subchart {index} has kind `{kind}` which cannot be rendered")]
    UnrenderableKind { index: usize, kind: String },
    #[error("subchart {index} has no numeric statistics")]
    EmptySeries { index: usize },
    #[error("panel {index}: {detail}")]
    InvalidSeries { index: usize, detail: String },
    #[error("invalid chart program: {0}")]
    InvalidIr(String),
    #[error("layout infeasible: {0}")]
    InfeasibleLayout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelSize {
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Arrangement {
    Column,
    Row,
    Grid { rows: usize, cols: usize },
}

impl Arrangement {
    /// Effective (rows, cols) for `n` panels.
    pub fn shape(&self, n: usize) -> (usize, usize) {
        match *self {
            Arrangement::Column => (n, 1),
            Arrangement::Row => (1, n),
            Arrangement::Grid { rows, cols } => (rows, cols),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingAnchor {
    #[default]
    Above,
    Below,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    #[serde(default)]
    pub name: String,
    pub points: Vec<Point>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub kind: ChartKind,
    pub series: Vec<Series>,
    #[serde(default)]
    pub x_label: Option<String>,
    #[serde(default)]
    pub y_label: Option<String>,
    #[serde(default)]
    pub heading: String,
    #[serde(default)]
    pub heading_anchor: HeadingAnchor,
    #[serde(default)]
    pub palette: Vec<String>,
    #[serde(default = "yes")]
    pub show_value_labels: bool,
    #[serde(default)]
    pub requested_box: Option<PixelSize>,
}

impl PanelSpec {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.series.iter().flat_map(|s| s.points.iter().map(|p| p.value))
    }

    /// Distinct point labels in first-appearance order.
    pub fn categories(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.series {
            for p in &s.points {
                if !out.contains(&p.label) {
                    out.push(p.label.clone());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartIR {
    #[serde(default)]
    pub figure_title: String,
    #[serde(default)]
    pub figure_summary: String,
    pub canvas: PixelSize,
    pub panels: Vec<PanelSpec>,
    pub arrangement: Arrangement,
}

impl ChartIR {
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.panels.iter().flat_map(|p| p.values()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Structural invariants every renderable program satisfies.
    pub fn validate(&self) -> Result<(), ChartError> {
        if self.panels.is_empty() {
            return Err(ChartError::InvalidIr("no panels".into()));
        }
        if self.canvas.width_px == 0 || self.canvas.height_px == 0 {
            return Err(ChartError::InvalidIr("canvas must have positive size".into()));
        }
        let (rows, cols) = self.arrangement.shape(self.panels.len());
        if rows == 0 || cols == 0 || rows * cols < self.panels.len() {
            return Err(ChartError::InvalidIr(format!(
                "a {rows}x{cols} grid cannot hold {} panels",
                self.panels.len()
            )));
        }
        for (i, p) in self.panels.iter().enumerate() {
            validate_panel(i + 1, p)?;
        }
        Ok(())
    }
}

fn validate_panel(index: usize, p: &PanelSpec) -> Result<(), ChartError> {
    let invalid = |detail: String| ChartError::InvalidSeries { index, detail };
    if !p.kind.is_known() {
        return Err(ChartError::UnrenderableKind {
            index,
            kind: p.kind.as_str().to_string(),
        });
    }
    if p.series.is_empty() || p.series.iter().all(|s| s.points.is_empty()) {
        return Err(ChartError::EmptySeries { index });
    }
    if p.values().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite value".into()));
    }
    match p.kind {
        ChartKind::Pie | ChartKind::StackedBar if p.values().any(|v| v < 0.0) => {
            return Err(invalid(format!("{} values must be non-negative", p.kind)));
        }
        ChartKind::StackedBar | ChartKind::GroupedBar if p.series.len() < 2 => {
            return Err(invalid(format!("{} needs at least two series", p.kind)));
        }
        ChartKind::Line | ChartKind::Area => {
            if let Some(s) = p.series.iter().find(|s| s.points.len() < 2) {
                return Err(invalid(format!("series `{}` needs at least two points", s.name)));
            }
        }
        _ => {}
    }
    Ok(())
}
