use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Value};

use super::stats::stat_block_from_json;
use super::{
    prose, Alignment, AxisSpec, ChartKind, Dimensions, MetadataDoc, MetadataError, Subchart,
};
use crate::jsonx::{self, value_text, Entries};

fn subchart_key_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^sub_?chart_?(\d+)$").unwrap())
}

fn norm_key(k: &str) -> String {
    k.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

/// Parses serialized metadata.
///
/// Strict JSON is tried first: the outermost object embedded in the text is
/// extracted, so code fences and chatter around it are tolerated. Text with
/// no JSON object falls back to the labelled-sentence prose reader.
pub fn parse_metadata(text: &str) -> Result<MetadataDoc, MetadataError> {
    match jsonx::outermost_object(text) {
        Some(span) => {
            let entries: Entries = serde_json::from_str(span)
                .map_err(|e| MetadataError::MalformedDocument(e.to_string()))?;
            from_entries(entries)
        }
        None => prose::parse_prose(text),
    }
}

/// Parses metadata already decoded as JSON: an object, or a string holding
/// a serialized document.
pub fn parse_metadata_value(v: &Value) -> Result<MetadataDoc, MetadataError> {
    match v {
        Value::String(s) => parse_metadata(s),
        Value::Object(map) => from_entries(Entries(map.iter().map(|(k, v)| (k.clone(), v.clone())).collect())),
        other => Err(MetadataError::MalformedDocument(format!("expected an object, found {other}"))),
    }
}

fn from_entries(entries: Entries) -> Result<MetadataDoc, MetadataError> {
    let mut title = None;
    let mut summary = None;
    let mut indexed: BTreeMap<u32, Value> = BTreeMap::new();
    let mut list: Option<Vec<Value>> = None;

    for (key, value) in &entries.0 {
        let k = norm_key(key);
        if k == "title" {
            title = Some(value_text(value));
        } else if k == "summary" {
            summary = Some(value_text(value));
        } else if k == "subcharts" {
            if let Value::Array(items) = value {
                list = Some(items.clone());
            }
        } else if let Some(c) = subchart_key_re().captures(&k) {
            let idx: u32 = c[1]
                .parse()
                .map_err(|_| MetadataError::MalformedDocument(format!("bad subchart key `{key}`")))?;
            if idx == 0 {
                return Err(MetadataError::MalformedDocument(
                    "subchart numbering starts at subchart_1".into(),
                ));
            }
            if indexed.insert(idx, value.clone()).is_some() {
                return Err(MetadataError::DuplicateSubchartIndex(idx));
            }
        }
    }

    // A single wrapper object such as {"metadata": {...}}.
    if title.is_none() && indexed.is_empty() && list.is_none() && entries.0.len() == 1 {
        if let Value::Object(inner) = &entries.0[0].1 {
            return parse_metadata_value(&Value::Object(inner.clone()));
        }
    }

    let title = title.ok_or_else(|| MetadataError::MissingField("title".into()))?;
    let summary = summary.ok_or_else(|| MetadataError::MissingField("summary".into()))?;

    let raw_subcharts: Vec<Value> = match list {
        Some(items) if indexed.is_empty() => items,
        _ => {
            if indexed.is_empty() {
                return Err(MetadataError::MissingField("subchart_1".into()));
            }
            let max = *indexed.keys().next_back().unwrap();
            if let Some(gap) = (1..=max).find(|i| !indexed.contains_key(i)) {
                return Err(MetadataError::MissingField(format!("subchart_{gap}")));
            }
            indexed.into_values().collect()
        }
    };
    if raw_subcharts.is_empty() {
        return Err(MetadataError::MissingField("subchart_1".into()));
    }

    let subcharts = raw_subcharts.iter().map(subchart_from_value).collect();
    Ok(MetadataDoc {
        title,
        summary,
        subcharts,
    })
}

fn subchart_from_value(v: &Value) -> Subchart {
    match v {
        Value::Object(map) => subchart_from_map(map),
        Value::String(s) => prose::parse_section(s),
        other => prose::parse_section(&value_text(other)),
    }
}

fn subchart_from_map(map: &Map<String, Value>) -> Subchart {
    let mut sub = Subchart::default();
    let mut kind_seen = false;
    for (key, value) in map {
        match norm_key(key).as_str() {
            "kind" | "type" | "chart_type" | "chart_kind" => {
                sub.kind = ChartKind::normalize(&value_text(value));
                kind_seen = true;
            }
            "axis" | "axes" => sub.axis = axis_from_json(value),
            "stats" | "statistics" | "data" => sub.stats = stat_block_from_json(value),
            "text" | "title" | "heading" => sub.text = value_text(value),
            "position_chart" | "position" | "chart_position" => sub.position_chart = value_text(value),
            "position_chart_text" | "text_position" | "position_text" => {
                sub.position_chart_text = Some(value_text(value))
            }
            "background" => sub.background = value_text(value),
            "dimensions" | "dimension" | "size" => sub.dimensions = dimensions_from_json(value),
            "fonts" | "font" => sub.fonts = value_text(value),
            "alignment" => sub.alignment = Alignment::parse(&value_text(value)),
            "summary" | "subchart_summary" => sub.summary = value_text(value),
            _ => {}
        }
    }
    if !kind_seen {
        sub.kind = ChartKind::Unknown(String::new());
    }
    sub
}

fn opt_text(map: &Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter()
        .find_map(|k| map.iter().find(|(mk, _)| norm_key(mk) == *k).map(|(_, v)| v))
        .map(value_text)
        .filter(|s| !s.is_empty())
}

fn axis_from_json(v: &Value) -> AxisSpec {
    match v {
        Value::Object(map) if map.contains_key("raw") => AxisSpec {
            x_label: map.get("x_label").and_then(Value::as_str).map(str::to_string),
            y_label: map.get("y_label").and_then(Value::as_str).map(str::to_string),
            x_units: map.get("x_units").and_then(Value::as_str).map(str::to_string),
            y_units: map.get("y_units").and_then(Value::as_str).map(str::to_string),
            raw: value_text(&map["raw"]),
        },
        Value::Object(map) => {
            let raw = value_text(v);
            let x_label = opt_text(map, &["x", "x_label", "x_axis", "xaxis"]);
            let y_label = opt_text(map, &["y", "y_label", "y_axis", "yaxis"]);
            let parsed = AxisSpec::from_text(&raw);
            AxisSpec {
                x_units: opt_text(map, &["x_units", "x_unit"]).or(parsed.x_units),
                y_units: opt_text(map, &["y_units", "y_unit"]).or(parsed.y_units),
                x_label: x_label.or(parsed.x_label),
                y_label: y_label.or(parsed.y_label),
                raw,
            }
        }
        other => AxisSpec::from_text(&value_text(other)),
    }
}

fn dimensions_from_json(v: &Value) -> Dimensions {
    let px = |v: &Value| -> Option<u32> {
        match v {
            Value::Number(n) => n.as_f64().filter(|x| x.is_finite() && *x >= 0.0).map(|x| x.round() as u32),
            Value::String(s) => super::numbers::scan_numbers(s)
                .first()
                .filter(|t| t.value >= 0.0)
                .map(|t| t.value.round() as u32),
            _ => None,
        }
    };
    match v {
        Value::Object(map) if map.contains_key("raw") => Dimensions {
            width_px: map.get("width_px").and_then(px),
            height_px: map.get("height_px").and_then(px),
            raw: value_text(&map["raw"]),
        },
        Value::Object(map) => {
            let find = |keys: &[&str]| {
                keys.iter()
                    .find_map(|k| map.iter().find(|(mk, _)| norm_key(mk) == *k).map(|(_, v)| v))
                    .and_then(px)
            };
            Dimensions {
                width_px: find(&["width", "width_px", "w"]),
                height_px: find(&["height", "height_px", "h"]),
                raw: value_text(v),
            }
        }
        other => Dimensions::from_text(&value_text(other)),
    }
}
