use std::fmt;

use serde::{Deserialize, Serialize};

use super::compile::resolve_placement;
use super::layout::{layout, LayoutedFigure};
use super::overlap::detect_overlaps;
use super::svg::render_svg;
use super::{Arrangement, ChartIR};
use crate::metadata::{extract_numbers, MetadataDoc, VALUE_TOLERANCE};

/// The mechanical judge checklist. The set is fixed and reported in this
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    SubchartCount,
    SubchartType,
    AxisLabels,
    StatsCoverage,
    Arrangement,
    TitleSummary,
    ValueLabels,
    LayoutFeasible,
    SpacingBound,
    NoOverlaps,
    NoExtraAxes,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::SubchartCount,
        CheckId::SubchartType,
        CheckId::AxisLabels,
        CheckId::StatsCoverage,
        CheckId::Arrangement,
        CheckId::TitleSummary,
        CheckId::ValueLabels,
        CheckId::LayoutFeasible,
        CheckId::SpacingBound,
        CheckId::NoOverlaps,
        CheckId::NoExtraAxes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::SubchartCount => "subchart_count",
            CheckId::SubchartType => "subchart_type",
            CheckId::AxisLabels => "axis_labels",
            CheckId::StatsCoverage => "stats_coverage",
            CheckId::Arrangement => "arrangement",
            CheckId::TitleSummary => "title_summary",
            CheckId::ValueLabels => "value_labels",
            CheckId::LayoutFeasible => "layout_feasible",
            CheckId::SpacingBound => "spacing_bound",
            CheckId::NoOverlaps => "no_overlaps",
            CheckId::NoExtraAxes => "no_extra_axes",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: CheckId,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ConstraintReport {
    fn from_checks(checks: Vec<CheckResult>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        ConstraintReport { checks, passed }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passing_count(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn get(&self, id: CheckId) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn result(id: CheckId, failures: Vec<String>, ok: &str) -> CheckResult {
    if failures.is_empty() {
        CheckResult {
            id,
            passed: true,
            detail: ok.to_string(),
        }
    } else {
        CheckResult {
            id,
            passed: false,
            detail: failures.join("; "),
        }
    }
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Checks that depend only on the program and the metadata.
fn data_checks(ir: &ChartIR, doc: &MetadataDoc) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let (want, got) = (doc.subcharts.len(), ir.panels.len());
    checks.push(result(
        CheckId::SubchartCount,
        if want == got { vec![] } else { vec![format!("expected {want}, found {got}")] },
        &format!("{want} panel(s)"),
    ));

    let type_failures = doc
        .subcharts
        .iter()
        .zip(&ir.panels)
        .enumerate()
        .filter(|(_, (s, p))| s.kind.key() != p.kind.key())
        .map(|(i, (s, p))| format!("index {}: expected {}, found {}", i + 1, s.kind, p.kind))
        .collect();
    checks.push(result(CheckId::SubchartType, type_failures, "kinds match"));

    let mut axis_failures = Vec::new();
    for (i, (s, p)) in doc.subcharts.iter().zip(&ir.panels).enumerate() {
        if !s.kind.is_cartesian() {
            continue;
        }
        for (axis, want, got) in [("x", &s.axis.x_label, &p.x_label), ("y", &s.axis.y_label, &p.y_label)] {
            if let Some(want) = want.as_deref().filter(|w| !w.trim().is_empty()) {
                if got.as_deref().map(norm) != Some(norm(want)) {
                    axis_failures.push(format!("index {}: {axis} label should be `{want}`", i + 1));
                }
            }
        }
    }
    checks.push(result(CheckId::AxisLabels, axis_failures, "axis labels carried over"));

    let mut have = ir.values();
    let mut missing = Vec::new();
    for v in extract_numbers(doc) {
        match have.iter().position(|h| (h - v).abs() <= VALUE_TOLERANCE) {
            Some(i) => {
                have.remove(i);
            }
            None => missing.push(v),
        }
    }
    checks.push(result(
        CheckId::StatsCoverage,
        if missing.is_empty() {
            vec![]
        } else {
            vec![format!(
                "missing value(s) {}",
                missing.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
            )]
        },
        "every statistic is plotted",
    ));

    let expected = resolve_placement(doc).arrangement;
    let n = ir.panels.len();
    let consistent = n <= 1
        || match (expected, ir.arrangement) {
            (Arrangement::Column, Arrangement::Column) | (Arrangement::Row, Arrangement::Row) => true,
            (Arrangement::Column, Arrangement::Grid { cols, .. }) => cols == 1,
            (Arrangement::Row, Arrangement::Grid { rows, .. }) => rows == 1,
            (Arrangement::Grid { .. }, Arrangement::Grid { .. }) => true,
            _ => false,
        };
    checks.push(result(
        CheckId::Arrangement,
        if consistent {
            vec![]
        } else {
            vec![format!("placement phrases call for {expected:?}, program uses {:?}", ir.arrangement)]
        },
        "arrangement follows placement",
    ));

    let mut ts = Vec::new();
    if !doc.title.trim().is_empty() && ir.figure_title.trim().is_empty() {
        ts.push("figure title is missing".to_string());
    }
    if !doc.summary.trim().is_empty() && ir.figure_summary.trim().is_empty() {
        ts.push("figure summary is missing".to_string());
    }
    checks.push(result(CheckId::TitleSummary, ts, "title and summary present"));

    let hidden: Vec<String> = ir
        .panels
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.show_value_labels)
        .map(|(i, _)| format!("index {} hides its data values", i + 1))
        .collect();
    checks.push(result(CheckId::ValueLabels, hidden, "data values shown"));
    checks
}

fn axis_count(svg: &str) -> Vec<String> {
    let Ok(doc) = roxmltree::Document::parse(svg) else {
        return vec!["rendered SVG does not parse".into()];
    };
    let mut failures = Vec::new();
    for g in doc
        .descendants()
        .filter(|n| n.has_tag_name("g") && n.attribute("class") == Some("panel"))
    {
        let count = |axis: &str| {
            g.descendants()
                .filter(|n| n.has_tag_name("line"))
                .filter(|n| n.attribute("class").is_some_and(|c| c.split_whitespace().any(|t| t == axis)))
                .count()
        };
        let (x, y) = (count("x-axis"), count("y-axis"));
        let want = if g.attribute("data-kind") == Some("pie") { 0 } else { 1 };
        if x != want || y != want {
            failures.push(format!(
                "{} draws {x} x-axis and {y} y-axis line(s), expected {want} of each",
                g.attribute("id").unwrap_or("panel")
            ));
        }
    }
    failures
}

/// Runs the full mechanical checklist against an already laid-out figure.
pub fn check_constraints(ir: &ChartIR, doc: &MetadataDoc, figure: &LayoutedFigure) -> ConstraintReport {
    let mut checks = data_checks(ir, doc);

    let mut geometry = Vec::new();
    for (i, a) in figure.panels.iter().enumerate() {
        if !figure.canvas.contains(&a.outer, 1e-6) {
            geometry.push(format!("panel {} leaves the canvas", i + 1));
        }
        for (j, b) in figure.panels.iter().enumerate().skip(i + 1) {
            if a.outer.intersects(&b.outer, 1e-6) {
                geometry.push(format!("panels {} and {} overlap", i + 1, j + 1));
            }
        }
    }
    checks.push(result(CheckId::LayoutFeasible, geometry, "panels fit the canvas"));

    checks.push(result(
        CheckId::SpacingBound,
        if figure.spacing_ok() {
            vec![]
        } else {
            vec![format!(
                "vertical spacing {:.4} is not below 1/(rows-1) = {:.4}",
                figure.normalized_spacing,
                LayoutedFigure::spacing_bound(figure.rows).unwrap_or(f64::INFINITY)
            )]
        },
        "vertical spacing within bound",
    ));

    let svg = render_svg(figure, ir);
    let overlaps: Vec<String> = detect_overlaps(figure, &svg)
        .iter()
        .map(|v| format!("{} overlaps {}", v.first, v.second))
        .collect();
    checks.push(result(CheckId::NoOverlaps, overlaps, "no overlapping text"));
    checks.push(result(CheckId::NoExtraAxes, axis_count(&svg), "one axis pair per Cartesian panel"));
    ConstraintReport::from_checks(checks)
}

/// Lays the program out and checks it; an invalid or infeasible program
/// fails every geometric check with the layout error as detail.
pub fn check_ir(ir: &ChartIR, doc: &MetadataDoc) -> ConstraintReport {
    match layout(ir) {
        Ok(fig) => check_constraints(ir, doc, &fig),
        Err(e) => {
            let mut checks = data_checks(ir, doc);
            for id in [CheckId::LayoutFeasible, CheckId::SpacingBound, CheckId::NoOverlaps, CheckId::NoExtraAxes] {
                checks.push(CheckResult {
                    id,
                    passed: false,
                    detail: if id == CheckId::LayoutFeasible {
                        e.to_string()
                    } else {
                        "not checked: layout failed".into()
                    },
                });
            }
            ConstraintReport::from_checks(checks)
        }
    }
}
