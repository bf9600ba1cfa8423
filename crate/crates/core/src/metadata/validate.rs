use serde::{Deserialize, Serialize};

use super::MetadataDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FindingCode {
    NoSubcharts,
    UnknownKind,
    EmptyAxis,
    NoStatistics,
    EmptyPlacement,
    PositiveDimensions,
    EmptyTitle,
    EmptySummary,
    MissingDimensions,
    /// The text could not be parsed at all; used by callers that validate
    /// raw model output.
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub path: String,
    pub code: FindingCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    pub is_valid: bool,
}

impl ValidationReport {
    pub fn from_findings(errors: Vec<Finding>, warnings: Vec<Finding>) -> Self {
        let is_valid = errors.is_empty();
        ValidationReport { errors, warnings, is_valid }
    }

    /// Report for text that produced no document.
    pub fn parse_failure(message: impl Into<String>) -> Self {
        Self::from_findings(
            vec![Finding {
                path: String::new(),
                code: FindingCode::ParseError,
                message: message.into(),
            }],
            Vec::new(),
        )
    }

    pub fn has(&self, code: FindingCode) -> bool {
        self.errors.iter().chain(&self.warnings).any(|f| f.code == code)
    }
}

fn finding(path: impl Into<String>, code: FindingCode, message: impl Into<String>) -> Finding {
    Finding {
        path: path.into(),
        code,
        message: message.into(),
    }
}

/// Mechanical version of the annotation checklist: count, kinds, axes,
/// statistics, placement, dimensions.
///
/// Axes are only required for Cartesian kinds; a pie has none to describe.
pub fn validate(doc: &MetadataDoc) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if doc.title.trim().is_empty() {
        warnings.push(finding("title", FindingCode::EmptyTitle, "title is empty"));
    }
    if doc.summary.trim().is_empty() {
        warnings.push(finding("summary", FindingCode::EmptySummary, "summary is empty"));
    }
    if doc.subcharts.is_empty() {
        errors.push(finding("", FindingCode::NoSubcharts, "document has no subcharts"));
    }

    for (i, sub) in doc.subcharts.iter().enumerate() {
        let base = format!("subchart_{}", i + 1);
        if !sub.kind.is_known() {
            errors.push(finding(
                format!("{base}.kind"),
                FindingCode::UnknownKind,
                format!("unrecognized chart kind `{}`", sub.kind.as_str()),
            ));
        }
        if sub.kind.is_cartesian() && sub.axis.raw.trim().is_empty() {
            errors.push(finding(format!("{base}.axis"), FindingCode::EmptyAxis, "axis description is empty"));
        }
        if sub.stats.value_count() == 0 {
            errors.push(finding(
                format!("{base}.stats"),
                FindingCode::NoStatistics,
                "no numeric statistic found",
            ));
        }
        if sub.position_chart.trim().is_empty() {
            errors.push(finding(
                format!("{base}.position_chart"),
                FindingCode::EmptyPlacement,
                "placement phrase is empty",
            ));
        }
        let d = &sub.dimensions;
        if d.width_px == Some(0) || d.height_px == Some(0) {
            errors.push(finding(
                format!("{base}.dimensions"),
                FindingCode::PositiveDimensions,
                format!("dimensions must be positive, got `{}`", d.raw),
            ));
        } else if d.size().is_none() {
            warnings.push(finding(
                format!("{base}.dimensions"),
                FindingCode::MissingDimensions,
                "no numeric width and height",
            ));
        }
    }
    ValidationReport::from_findings(errors, warnings)
}
