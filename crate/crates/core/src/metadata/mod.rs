//! Infographic metadata: the structured description that sits between the
//! input text and the chart program.
//!
//! A [`MetadataDoc`] holds a title, a summary and an ordered list of
//! [`Subchart`]s. Documents are read from strict JSON (the canonical format)
//! or from the labelled-sentence prose that annotation models tend to emit,
//! and are always written back in canonical JSON.

mod kind;
pub mod numbers;
mod parse;
mod prose;
mod serialize;
pub mod stats;
mod validate;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use kind::ChartKind;
pub use parse::{parse_metadata, parse_metadata_value};
pub use serialize::{metadata_text, serialize_metadata, to_value};
pub use validate::{validate, Finding, FindingCode, ValidationReport};

/// Unit tag recorded for values written with a percent sign.
pub const PERCENT_UNIT: &str = "percent";

/// Absolute tolerance when two statistics are compared.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetadataError {
    #[error("no parseable metadata object: {0}")]
    MalformedDocument(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("subchart index {0} appears more than once")]
    DuplicateSubchartIndex(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetadataDoc {
    pub title: String,
    pub summary: String,
    pub subcharts: Vec<Subchart>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Subchart {
    pub kind: ChartKind,
    pub axis: AxisSpec,
    pub stats: StatBlock,
    /// Heading or title shown with the subchart.
    pub text: String,
    /// Placement relative to the other subcharts, e.g. "below the first subchart".
    pub position_chart: String,
    pub position_chart_text: Option<String>,
    pub background: String,
    pub dimensions: Dimensions,
    pub fonts: String,
    pub alignment: Alignment,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AxisSpec {
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub x_units: Option<String>,
    pub y_units: Option<String>,
    /// The description as it was given.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatBlock {
    pub series: Vec<StatSeries>,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatSeries {
    pub category: String,
    pub values: Vec<StatValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatValue {
    pub label: String,
    pub value: f64,
    /// `Some("percent")` when the source carried a percent sign.
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dimensions {
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Horizontal,
    Vertical,
    #[default]
    Unspecified,
}

impl MetadataDoc {
    /// Every statistic in every subchart, ascending.
    pub fn extract_numbers(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .subcharts
            .iter()
            .flat_map(|s| s.stats.values().map(|v| v.value))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Free-function form of [`MetadataDoc::extract_numbers`].
pub fn extract_numbers(doc: &MetadataDoc) -> Vec<f64> {
    doc.extract_numbers()
}

impl StatBlock {
    pub fn from_text(raw: &str) -> StatBlock {
        StatBlock {
            series: stats::parse_stat_text(raw),
            raw: raw.to_string(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &StatValue> {
        self.series.iter().flat_map(|s| s.values.iter())
    }

    pub fn value_count(&self) -> usize {
        self.series.iter().map(|s| s.values.len()).sum()
    }
}

impl Alignment {
    pub fn parse(text: &str) -> Alignment {
        let t = text.to_lowercase();
        if t.contains("horizontal") {
            Alignment::Horizontal
        } else if t.contains("vertical") {
            Alignment::Vertical
        } else {
            Alignment::Unspecified
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Horizontal => "horizontal",
            Alignment::Vertical => "vertical",
            Alignment::Unspecified => "unspecified",
        }
    }
}

fn axis_intro_re(axis: char) -> Regex {
    Regex::new(&format!(
        r"(?i)(?:\b{axis}[- ]?axis\b(?:\s+(?:label\s+)?(?:represents|shows|displays|is|indicates|denotes|lists|measures|has|contains|covers))?\s*:?\s*|(?:^|[\s;,(])\b{axis}\s*[:=]\s*)"
    ))
    .unwrap()
}

fn x_intro() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| axis_intro_re('x'))
}

fn y_intro() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| axis_intro_re('y'))
}

impl AxisSpec {
    /// Parses labels and units out of a free-text axis description. Labels
    /// are always substrings of `raw`.
    pub fn from_text(raw: &str) -> AxisSpec {
        let x_label = axis_label(raw, x_intro());
        let y_label = axis_label(raw, y_intro());
        AxisSpec {
            x_units: x_label.as_deref().and_then(units_of),
            y_units: y_label.as_deref().and_then(units_of),
            x_label,
            y_label,
            raw: raw.to_string(),
        }
    }
}

fn axis_label(raw: &str, intro: &Regex) -> Option<String> {
    for m in intro.find_iter(raw) {
        let rest = &raw[m.end()..];
        // Require either a verb/colon in the intro or text right after it.
        let intro_text = m.as_str().trim_end();
        let has_link = intro_text.ends_with(':')
            || intro_text.ends_with('=')
            || !intro_text.to_lowercase().ends_with("axis");
        if !has_link {
            continue;
        }
        let end = label_end(rest);
        let label = rest[..end].trim().trim_end_matches('.').trim();
        if label.is_empty() {
            continue;
        }
        let lower = label.to_lowercase();
        if ["not specified", "unspecified", "not labeled", "not labelled", "unlabeled", "none", "n/a"]
            .iter()
            .any(|p| lower.starts_with(p))
        {
            return None;
        }
        return Some(label.to_string());
    }
    None
}

fn label_end(rest: &str) -> usize {
    let bytes = rest.as_bytes();
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b';' | b'\n' => return i,
            b',' if depth <= 0 => {
                let tail = rest[i + 1..].trim_start().to_lowercase();
                if tail.starts_with("and ") || tail.starts_with("while ") || tail.starts_with("with the ") {
                    return i;
                }
                if tail.starts_with('x') || tail.starts_with('y') {
                    let mut chars = tail.chars().skip(1);
                    if matches!(chars.next(), Some(':' | '=' | '-' | ' ')) {
                        return i;
                    }
                }
            }
            b'.' if depth <= 0 => {
                let after = &rest[i + 1..];
                if after.is_empty() {
                    return i;
                }
                let mut it = after.chars();
                if it.next().is_some_and(char::is_whitespace) {
                    let next = after.trim_start().chars().next();
                    if next.is_none_or(|c| c.is_uppercase()) {
                        return i;
                    }
                }
            }
            _ => {}
        }
    }
    rest.len()
}

fn units_of(label: &str) -> Option<String> {
    let open = label.rfind('(')?;
    let close = label[open..].find(')')? + open;
    let inner = label[open + 1..close].trim();
    (!inner.is_empty() && inner.chars().count() <= 20 && !inner.contains(',')).then(|| inner.to_string())
}

fn px_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(?:px|pixels?)\b").unwrap())
}

fn wxh_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(?:px)?\s*[x×]\s*(\d+(?:\.\d+)?)").unwrap())
}

fn to_px(s: &str) -> Option<u32> {
    s.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0 && *v < u32::MAX as f64).map(|v| v.round() as u32)
}

impl Dimensions {
    /// Reads pixel sizes from text such as "510px width and 45px height" or
    /// "612 x 420". With two pixel values the first is the width and the
    /// second the height, in reading order.
    pub fn from_text(raw: &str) -> Dimensions {
        let mut dims = Dimensions {
            width_px: None,
            height_px: None,
            raw: raw.to_string(),
        };
        if let Some(c) = wxh_re().captures(raw) {
            dims.width_px = to_px(&c[1]);
            dims.height_px = to_px(&c[2]);
            return dims;
        }
        let found: Vec<_> = px_re().captures_iter(raw).collect();
        match found.len() {
            0 => {}
            1 => {
                let m = found[0].get(0).unwrap();
                let window_start = m.start().saturating_sub(12);
                let window_end = (m.end() + 12).min(raw.len());
                let ctx = raw
                    .get(window_start..window_end)
                    .unwrap_or(raw)
                    .to_lowercase();
                let value = to_px(&found[0][1]);
                if ctx.contains("height") || ctx.contains("tall") || ctx.contains("high") {
                    dims.height_px = value;
                } else {
                    dims.width_px = value;
                }
            }
            _ => {
                dims.width_px = to_px(&found[0][1]);
                dims.height_px = to_px(&found[1][1]);
            }
        }
        dims
    }

    pub fn size(&self) -> Option<(u32, u32)> {
        Some((self.width_px?, self.height_px?))
    }
}

impl Serialize for MetadataDoc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        to_value(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetadataDoc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        parse_metadata_value(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_prose() {
        let a = AxisSpec::from_text(
            "The axes are not specified for the X-axis, and the Y-axis represents U.S. adults.",
        );
        assert_eq!(a.x_label, None);
        assert_eq!(a.y_label.as_deref(), Some("U.S. adults"));

        let a = AxisSpec::from_text("The X-axis represents percentage, and the Y-axis represents categories.");
        assert_eq!(a.x_label.as_deref(), Some("percentage"));
        assert_eq!(a.y_label.as_deref(), Some("categories"));

        let a = AxisSpec::from_text(
            "The X-axis is not specified, and the Y-axis represents science knowledge categories for Republicans (High, Medium, Low).",
        );
        assert_eq!(a.x_label, None);
        assert_eq!(
            a.y_label.as_deref(),
            Some("science knowledge categories for Republicans (High, Medium, Low)")
        );
        assert_eq!(a.y_units, None);
    }

    #[test]
    fn axis_short_forms_and_units() {
        let a = AxisSpec::from_text("x: Year, y: Share of adults (%)");
        assert_eq!(a.x_label.as_deref(), Some("Year"));
        assert_eq!(a.y_label.as_deref(), Some("Share of adults (%)"));
        assert_eq!(a.y_units.as_deref(), Some("%"));
        assert_eq!(AxisSpec::from_text("").x_label, None);
    }

    #[test]
    fn dimensions_forms() {
        let d = Dimensions::from_text("510px width and 45px height");
        assert_eq!(d.size(), Some((510, 45)));
        assert_eq!(Dimensions::from_text("612 x 420").size(), Some((612, 420)));
        let d = Dimensions::from_text("0px width");
        assert_eq!((d.width_px, d.height_px), (Some(0), None));
        let d = Dimensions::from_text("height of 300 pixels");
        assert_eq!((d.width_px, d.height_px), (None, Some(300)));
        assert_eq!(Dimensions::from_text("unknown").size(), None);
    }

    #[test]
    fn alignment_parse() {
        assert_eq!(Alignment::parse("Horizontal"), Alignment::Horizontal);
        assert_eq!(Alignment::parse("vertical stack"), Alignment::Vertical);
        assert_eq!(Alignment::parse(""), Alignment::Unspecified);
    }
}
