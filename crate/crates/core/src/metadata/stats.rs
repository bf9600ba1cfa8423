//! Statistics block parsing: prose "label: value" lists and loosely shaped
//! JSON objects both end up as ordered series of labelled values.

use serde_json::{Map, Value};

use super::numbers::scan_numbers;
use super::{StatBlock, StatSeries, StatValue, PERCENT_UNIT};

/// Parses prose such as
/// `High: Yes: 40%, No: 59%; Low: Yes: 48%, No: 51%`.
///
/// Groups are separated by `;` or newlines. Inside a group, items are
/// separated by `, `. A first item with two colons names the group's
/// category. Groups without a category are merged into one series.
pub fn parse_stat_text(text: &str) -> Vec<StatSeries> {
    let mut out: Vec<StatSeries> = Vec::new();
    for group in text.split([';', '\n']) {
        let items = split_items(group);
        let mut category: Option<String> = None;
        let mut values = Vec::new();
        let mut carried_label = String::new();
        for (idx, item) in items.iter().enumerate() {
            let item = strip_conjunction(item.trim());
            if item.is_empty() {
                continue;
            }
            let parts: Vec<&str> = item.split(':').collect();
            let (label, value_part) = if parts.len() >= 3 && idx == 0 {
                category = Some(clean_label(parts[0]));
                (parts[1..parts.len() - 1].join(":"), parts[parts.len() - 1])
            } else if parts.len() >= 2 {
                (parts[..parts.len() - 1].join(":"), parts[parts.len() - 1])
            } else {
                (String::new(), item)
            };
            let tokens = scan_numbers(value_part);
            let Some(tok) = (if parts.len() >= 2 { tokens.first() } else { tokens.last() }) else {
                if parts.len() == 1 {
                    carried_label = clean_label(item);
                } else if idx == 0 && parts.len() == 2 && category.is_none() {
                    // "Category:" header with its values following
                    category = Some(clean_label(parts[0]));
                }
                continue;
            };
            let mut label = if parts.len() >= 2 {
                clean_label(&label)
            } else {
                let mut rest = String::new();
                rest.push_str(&value_part[..tok.start]);
                rest.push_str(&value_part[tok.end..]);
                clean_label(&rest)
            };
            if !carried_label.is_empty() {
                label = if label.is_empty() {
                    std::mem::take(&mut carried_label)
                } else {
                    format!("{} {}", std::mem::take(&mut carried_label), label)
                };
            }
            values.push(StatValue {
                label,
                value: tok.value,
                unit: tok.percent.then(|| PERCENT_UNIT.to_string()),
            });
        }
        if values.is_empty() {
            continue;
        }
        match category {
            Some(category) => out.push(StatSeries { category, values }),
            None => match out.last_mut() {
                Some(last) if last.category.is_empty() => last.values.extend(values),
                _ => out.push(StatSeries {
                    category: String::new(),
                    values,
                }),
            },
        }
    }
    out
}

fn split_items(group: &str) -> Vec<&str> {
    let mut items = Vec::new();
    let mut start = 0;
    let bytes = group.as_bytes();
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth -= 1,
            b',' if depth <= 0 && bytes.get(i + 1).is_none_or(|n| n.is_ascii_whitespace()) => {
                items.push(&group[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(&group[start..]);
    items
}

fn strip_conjunction(item: &str) -> &str {
    for prefix in ["and ", "And ", "& "] {
        if let Some(rest) = item.strip_prefix(prefix) {
            return rest.trim_start();
        }
    }
    item
}

fn clean_label(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '-' || c == '*')
        .trim()
        .to_string()
}

/// Builds a statistics block from any JSON value a model might emit.
pub fn stat_block_from_json(v: &Value) -> StatBlock {
    if let Some(block) = canonical_block(v) {
        return block;
    }
    let raw = match v {
        Value::String(s) => s.clone(),
        other => crate::jsonx::value_text(other),
    };
    StatBlock {
        series: series_from_json(v),
        raw,
    }
}

fn canonical_block(v: &Value) -> Option<StatBlock> {
    let map = v.as_object()?;
    if map.keys().any(|k| k != "raw" && k != "series") {
        return None;
    }
    let raw = map.get("raw").and_then(Value::as_str)?.to_string();
    let mut series = Vec::new();
    for s in map.get("series")?.as_array()? {
        let s = s.as_object()?;
        let category = s.get("category").and_then(Value::as_str).unwrap_or("").to_string();
        let mut values = Vec::new();
        for item in s.get("values")?.as_array()? {
            let item = item.as_object()?;
            values.push(StatValue {
                label: item.get("label").and_then(Value::as_str).unwrap_or("").to_string(),
                value: item.get("value")?.as_f64()?,
                unit: item.get("unit").and_then(Value::as_str).map(str::to_string),
            });
        }
        series.push(StatSeries { category, values });
    }
    Some(StatBlock { series, raw })
}

fn series_from_json(v: &Value) -> Vec<StatSeries> {
    match v {
        Value::String(s) => parse_stat_text(s),
        Value::Number(_) => point("", v)
            .map(|p| vec![StatSeries { category: String::new(), values: vec![p] }])
            .unwrap_or_default(),
        Value::Array(items) => {
            let mut out = Vec::new();
            let mut loose = Vec::new();
            for item in items {
                match item {
                    Value::Object(map) if labelled_point(map).is_some() => {
                        loose.push(labelled_point(map).unwrap())
                    }
                    Value::Number(_) => loose.extend(point("", item)),
                    other => out.extend(series_from_json(other)),
                }
            }
            if !loose.is_empty() {
                out.insert(0, StatSeries { category: String::new(), values: loose });
            }
            out
        }
        Value::Object(map) => {
            let mut out = Vec::new();
            let mut loose = Vec::new();
            for (key, val) in map {
                match val {
                    Value::Number(_) => loose.extend(point(key, val)),
                    Value::String(s) if s.contains(':') => {
                        let mut values = Vec::new();
                        for series in parse_stat_text(s) {
                            values.extend(series.values);
                        }
                        if !values.is_empty() {
                            out.push(StatSeries { category: clean_label(key), values });
                        }
                    }
                    Value::String(_) => loose.extend(point(key, val)),
                    Value::Object(inner) => {
                        if let Some(p) = labelled_point(inner) {
                            loose.push(StatValue { label: clean_label(key), ..p });
                            continue;
                        }
                        let mut values = Vec::new();
                        flatten_points(inner, "", &mut values);
                        if !values.is_empty() {
                            out.push(StatSeries { category: clean_label(key), values });
                        }
                    }
                    Value::Array(_) => {
                        let mut values = Vec::new();
                        for series in series_from_json(val) {
                            values.extend(series.values);
                        }
                        if !values.is_empty() {
                            out.push(StatSeries { category: clean_label(key), values });
                        }
                    }
                    _ => {}
                }
            }
            if !loose.is_empty() {
                out.insert(0, StatSeries { category: String::new(), values: loose });
            }
            out
        }
        _ => Vec::new(),
    }
}

fn flatten_points(map: &Map<String, Value>, prefix: &str, out: &mut Vec<StatValue>) {
    for (key, val) in map {
        let label = if prefix.is_empty() {
            clean_label(key)
        } else {
            format!("{prefix} / {}", clean_label(key))
        };
        match val {
            Value::Object(inner) => flatten_points(inner, &label, out),
            Value::Array(items) => {
                for item in items {
                    out.extend(point(&label, item));
                }
            }
            other => out.extend(point(&label, other)),
        }
    }
}

fn labelled_point(map: &Map<String, Value>) -> Option<StatValue> {
    let value = map.get("value").or_else(|| map.get("percent")).or_else(|| map.get("count"))?;
    let label = ["label", "name", "category", "x"]
        .iter()
        .find_map(|k| map.get(*k))
        .map(crate::jsonx::value_text)
        .unwrap_or_default();
    let mut p = point(&label, value)?;
    if map.contains_key("percent") || map.get("unit").and_then(Value::as_str).is_some_and(is_percent_word) {
        p.unit = Some(PERCENT_UNIT.to_string());
    }
    Some(p)
}

fn is_percent_word(s: &str) -> bool {
    let s = s.trim().to_lowercase();
    s == "%" || s == "percent" || s == "percentage"
}

fn point(label: &str, v: &Value) -> Option<StatValue> {
    match v {
        Value::Number(n) => n.as_f64().filter(|x| x.is_finite()).map(|value| StatValue {
            label: clean_label(label),
            value,
            unit: None,
        }),
        Value::String(s) => scan_numbers(s).first().map(|t| StatValue {
            label: clean_label(label),
            value: t.value,
            unit: t.percent.then(|| PERCENT_UNIT.to_string()),
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn flat(series: &[StatSeries]) -> Vec<(String, String, f64)> {
        series
            .iter()
            .flat_map(|s| s.values.iter().map(move |v| (s.category.clone(), v.label.clone(), v.value)))
            .collect()
    }

    #[test]
    fn two_value_sentence() {
        let s = parse_stat_text(
            "Can be used to produce any conclusion the researcher wants: 35%, and Generally produces accurate conclusions: 63%",
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].category, "");
        assert_eq!(s[0].values[0].label, "Can be used to produce any conclusion the researcher wants");
        assert_eq!(s[0].values[0].value, 35.0);
        assert_eq!(s[0].values[0].unit.as_deref(), Some("percent"));
        assert_eq!(s[0].values[1].label, "Generally produces accurate conclusions");
        assert_eq!(s[0].values[1].value, 63.0);
    }

    #[test]
    fn categorized_groups() {
        let s = parse_stat_text("High: Yes: 40%, No: 59%; Low: Yes: 48%, No: 51%");
        assert_eq!(
            flat(&s),
            [
                ("High".into(), "Yes".into(), 40.0),
                ("High".into(), "No".into(), 59.0),
                ("Low".into(), "Yes".into(), 48.0),
                ("Low".into(), "No".into(), 51.0),
            ]
        );
    }

    #[test]
    fn unlabeled_and_carried_labels() {
        let s = parse_stat_text("Republicans, 40%, Democrats 14%");
        assert_eq!(
            flat(&s),
            [("".into(), "Republicans".into(), 40.0), ("".into(), "Democrats".into(), 14.0)]
        );
        assert_eq!(flat(&parse_stat_text("1,200 respondents")), [("".into(), "respondents".into(), 1200.0)]);
        assert!(parse_stat_text("no numbers here").is_empty());
    }

    #[test]
    fn json_shapes() {
        let v = json!({"Republicans": {"Yes": "40%", "No": 59}, "Total": 12});
        let b = stat_block_from_json(&v);
        assert_eq!(
            flat(&b.series),
            [
                ("".into(), "Total".into(), 12.0),
                ("Republicans".into(), "Yes".into(), 40.0),
                ("Republicans".into(), "No".into(), 59.0),
            ]
        );
        let arr = json!([{"label": "A", "value": 3}, {"label": "B", "value": 4.5}]);
        assert_eq!(
            flat(&stat_block_from_json(&arr).series),
            [("".into(), "A".into(), 3.0), ("".into(), "B".into(), 4.5)]
        );
        assert_eq!(flat(&stat_block_from_json(&json!([1, 2])).series).len(), 2);
        assert_eq!(stat_block_from_json(&json!({"x": "Yes: 5, No: 6"})).series[0].values.len(), 2);
    }

    #[test]
    fn canonical_block_roundtrips() {
        let v = json!({"raw": "r", "series": [{"category": "c", "values": [{"label": "l", "value": 1.5, "unit": "percent"}]}]});
        let b = stat_block_from_json(&v);
        assert_eq!(b.raw, "r");
        assert_eq!(b.series[0].values[0].unit.as_deref(), Some("percent"));
    }
}
