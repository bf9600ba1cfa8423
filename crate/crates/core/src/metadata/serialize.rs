use serde_json::{json, Map, Value};

use super::{AxisSpec, Dimensions, MetadataDoc, StatBlock, Subchart};

/// Canonical JSON value: `title`, `summary`, then `subchart_1..n`, each with
/// its fields in schema order. Optional parts are omitted rather than nulled.
pub fn to_value(doc: &MetadataDoc) -> Value {
    let mut root = Map::new();
    root.insert("title".into(), Value::String(doc.title.clone()));
    root.insert("summary".into(), Value::String(doc.summary.clone()));
    for (i, sub) in doc.subcharts.iter().enumerate() {
        root.insert(format!("subchart_{}", i + 1), subchart_value(sub));
    }
    Value::Object(root)
}

/// Pretty-printed canonical form; stable across runs.
pub fn serialize_metadata(doc: &MetadataDoc) -> String {
    serde_json::to_string_pretty(&to_value(doc)).expect("metadata values are always serializable")
}

fn subchart_value(sub: &Subchart) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), Value::String(sub.kind.as_str().to_string()));
    m.insert("axis".into(), axis_value(&sub.axis));
    m.insert("stats".into(), stats_value(&sub.stats));
    m.insert("text".into(), Value::String(sub.text.clone()));
    m.insert("position_chart".into(), Value::String(sub.position_chart.clone()));
    if let Some(t) = &sub.position_chart_text {
        m.insert("position_chart_text".into(), Value::String(t.clone()));
    }
    m.insert("background".into(), Value::String(sub.background.clone()));
    m.insert("dimensions".into(), dimensions_value(&sub.dimensions));
    m.insert("fonts".into(), Value::String(sub.fonts.clone()));
    m.insert("alignment".into(), Value::String(sub.alignment.as_str().to_string()));
    m.insert("summary".into(), Value::String(sub.summary.clone()));
    Value::Object(m)
}

fn axis_value(a: &AxisSpec) -> Value {
    let mut m = Map::new();
    m.insert("raw".into(), Value::String(a.raw.clone()));
    for (k, v) in [
        ("x_label", &a.x_label),
        ("y_label", &a.y_label),
        ("x_units", &a.x_units),
        ("y_units", &a.y_units),
    ] {
        if let Some(v) = v {
            m.insert(k.into(), Value::String(v.clone()));
        }
    }
    Value::Object(m)
}

fn stats_value(s: &StatBlock) -> Value {
    let series: Vec<Value> = s
        .series
        .iter()
        .map(|ser| {
            let values: Vec<Value> = ser
                .values
                .iter()
                .map(|v| {
                    let mut m = Map::new();
                    m.insert("label".into(), Value::String(v.label.clone()));
                    m.insert("value".into(), json!(v.value));
                    if let Some(u) = &v.unit {
                        m.insert("unit".into(), Value::String(u.clone()));
                    }
                    Value::Object(m)
                })
                .collect();
            json!({"category": ser.category, "values": values})
        })
        .collect();
    json!({"raw": s.raw, "series": series})
}

fn dimensions_value(d: &Dimensions) -> Value {
    let mut m = Map::new();
    m.insert("raw".into(), Value::String(d.raw.clone()));
    if let Some(w) = d.width_px {
        m.insert("width_px".into(), json!(w));
    }
    if let Some(h) = d.height_px {
        m.insert("height_px".into(), json!(h));
    }
    Value::Object(m)
}

/// The human-readable text of a document, one field per line, in canonical
/// order. Used for word and sentence statistics.
pub fn metadata_text(doc: &MetadataDoc) -> String {
    let mut fields: Vec<&str> = vec![&doc.title, &doc.summary];
    for sub in &doc.subcharts {
        fields.push(sub.kind.as_str());
        fields.push(&sub.axis.raw);
        fields.push(&sub.stats.raw);
        fields.push(&sub.text);
        fields.push(&sub.position_chart);
        if let Some(t) = &sub.position_chart_text {
            fields.push(t);
        }
        fields.push(&sub.background);
        fields.push(&sub.dimensions.raw);
        fields.push(&sub.fonts);
        if sub.alignment != super::Alignment::Unspecified {
            fields.push(sub.alignment.as_str());
        }
        fields.push(&sub.summary);
    }
    fields.retain(|f| !f.trim().is_empty());
    fields.join("\n")
}

#[cfg(test)]
mod tests {
    use super::super::{parse_metadata, ChartKind};
    use super::*;

    fn doc() -> MetadataDoc {
        parse_metadata(
            r#"{"title":"T","summary":"S","subchart_1":{"kind":"donut","stats":"A: 1%, B: 2"},
                "subchart_2":{"kind":"bar","axis":"x: Year","dimensions":"510px width and 45px height"}}"#,
        )
        .unwrap()
    }

    #[test]
    fn key_order_and_uniqueness() {
        let text = serialize_metadata(&doc());
        let keys: Vec<String> = serde_json::from_str::<Map<String, Value>>(&text).unwrap().keys().cloned().collect();
        assert_eq!(keys, ["title", "summary", "subchart_1", "subchart_2"]);
        assert_eq!(text.matches("\"subchart_2\"").count(), 1);
        let sub_keys: Vec<String> = to_value(&doc())["subchart_1"].as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            sub_keys,
            ["kind", "axis", "stats", "text", "position_chart", "background", "dimensions", "fonts", "alignment", "summary"]
        );
    }

    #[test]
    fn roundtrip_is_identity_and_idempotent() {
        let d = doc();
        let once = serialize_metadata(&d);
        let back = parse_metadata(&once).unwrap();
        assert_eq!(back, d);
        assert_eq!(serialize_metadata(&back), once);
        assert_eq!(back.subcharts[0].kind, ChartKind::Unknown("donut".into()));
        assert!(once.contains("\"donut\""));
    }

    #[test]
    fn text_skips_empty_fields() {
        let t = metadata_text(&doc());
        assert!(t.starts_with("T\nS\ndonut\n"));
        assert!(!t.contains("\n\n"));
    }
}
