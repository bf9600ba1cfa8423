//! Offline human review: records go out as editable JSONL with a checklist
//! per record and come back validated, with a per-field diff.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Checklist, CurationError, DatasetRecord, ReviewStatus};
use crate::metadata::{parse_metadata_value, to_value, validate};

/// Bumped whenever the review line layout changes.
pub const REVIEW_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewLine {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub image_ref: String,
    pub input_text: String,
    /// Canonical metadata object, edited in place by the reviewer.
    pub metadata: Value,
    pub status: ReviewStatus,
    pub checklist: Checklist,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDiff {
    pub id: String,
    /// Changed metadata paths such as `title` or `subchart_2.stats`, plus
    /// `input_text`, `status`, `checklist` and `note` when those moved.
    pub changed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportReport {
    pub records: Vec<DatasetRecord>,
    /// One entry per record with at least one change.
    pub diffs: Vec<RecordDiff>,
}

impl ImportReport {
    pub fn changed_records(&self) -> usize {
        self.diffs.len()
    }
}

pub fn review_lines(records: &[DatasetRecord]) -> Vec<ReviewLine> {
    records
        .iter()
        .map(|r| ReviewLine {
            schema_version: REVIEW_SCHEMA_VERSION,
            id: r.id.clone(),
            image_ref: r.image_ref.clone(),
            input_text: r.input_text.clone(),
            metadata: to_value(&r.metadata),
            status: r.review.status,
            checklist: r.review.checklist,
            note: r.review.note.clone(),
        })
        .collect()
}

/// JSONL text for the reviewer, one record per line.
pub fn review_export_text(records: &[DatasetRecord]) -> String {
    review_lines(records)
        .iter()
        .map(|l| serde_json::to_string(l).expect("review lines serialize") + "\n")
        .collect()
}

/// Metadata paths whose canonical values differ. Subchart objects are
/// compared field by field; a subchart present on one side only is
/// reported by its key alone.
pub fn metadata_diff(before: &Value, after: &Value) -> Vec<String> {
    let empty = serde_json::Map::new();
    let (a, b) = (before.as_object().unwrap_or(&empty), after.as_object().unwrap_or(&empty));
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let mut out = Vec::new();
    for k in keys {
        match (a.get(k), b.get(k)) {
            (Some(Value::Object(x)), Some(Value::Object(y))) if k.starts_with("subchart_") => {
                let fields: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
                out.extend(fields.into_iter().filter(|f| x.get(*f) != y.get(*f)).map(|f| format!("{k}.{f}")));
            }
            (x, y) if x != y => out.push(k.clone()),
            _ => {}
        }
    }
    // Natural order: subchart_10 after subchart_9.
    out.sort_by_key(|p| {
        let (head, tail) = p.split_once('.').unwrap_or((p, ""));
        let n = head.strip_prefix("subchart_").and_then(|d| d.parse::<u32>().ok());
        (n.is_some(), n.unwrap_or(0), head.to_string(), tail.to_string())
    });
    out
}

/// Reads reviewer output against the records that were exported.
///
/// Every line must carry the current schema version and name an exported
/// record. Edited metadata must parse and validate, and a verified or
/// corrected record must have every checklist item ticked. Records absent
/// from the file come back unchanged.
pub fn review_import_text(text: &str, originals: &[DatasetRecord]) -> Result<ImportReport, CurationError> {
    let index: BTreeMap<&str, usize> = originals.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut records = originals.to_vec();
    let mut diffs = BTreeMap::new();
    for (n, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line_no = n + 1;
        let value: Value = serde_json::from_str(raw).map_err(|e| CurationError::BadRecord { line: line_no, message: e.to_string() })?;
        let found = value.get("schema_version").and_then(Value::as_u64);
        if found != Some(REVIEW_SCHEMA_VERSION as u64) {
            return Err(CurationError::SchemaVersionMismatch { line: line_no, expected: REVIEW_SCHEMA_VERSION, found });
        }
        let line: ReviewLine =
            serde_json::from_value(value).map_err(|e| CurationError::BadRecord { line: line_no, message: e.to_string() })?;
        let &i = index.get(line.id.as_str()).ok_or_else(|| CurationError::UnknownRecord(line.id.clone()))?;
        let invalid = |errors: Vec<String>| CurationError::InvalidEditedMetadata { id: line.id.clone(), errors };
        let doc = parse_metadata_value(&line.metadata).map_err(|e| invalid(vec![e.to_string()]))?;
        let report = validate(&doc);
        if !report.is_valid {
            return Err(invalid(report.errors.iter().map(|f| format!("{}: {}", f.path, f.message)).collect()));
        }
        if line.status.is_approved() && !line.checklist.all_checked() {
            return Err(invalid(vec![format!(
                "status {} requires every checklist item, unchecked: {}",
                line.status.as_str(),
                line.checklist.unchecked().join(", ")
            )]));
        }
        let old = &records[i];
        let mut changed = metadata_diff(&to_value(&old.metadata), &to_value(&doc));
        if old.input_text != line.input_text {
            changed.push("input_text".into());
        }
        if old.review.status != line.status {
            changed.push("status".into());
        }
        if old.review.checklist != line.checklist {
            changed.push("checklist".into());
        }
        if old.review.note != line.note {
            changed.push("note".into());
        }
        let r = &mut records[i];
        r.metadata = doc;
        r.input_text = line.input_text;
        r.review.status = line.status;
        r.review.checklist = line.checklist;
        r.review.note = line.note;
        if !changed.is_empty() {
            diffs.insert(i, RecordDiff { id: line.id, changed });
        }
    }
    Ok(ImportReport { records, diffs: diffs.into_values().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::Review;
    use crate::metadata::parse_metadata;

    fn record() -> DatasetRecord {
        let path = format!("{}/fixtures/example_1.txt", env!("CARGO_MANIFEST_DIR"));
        DatasetRecord {
            id: "r1".into(),
            image_ref: "img-1".into(),
            input_text: "Some passage.".into(),
            metadata: parse_metadata(&std::fs::read_to_string(path).unwrap()).unwrap(),
            review: Review::default(),
            split: None,
        }
    }

    fn edit(text: &str, f: impl Fn(&mut Value)) -> String {
        text.lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                f(&mut v);
                serde_json::to_string(&v).unwrap() + "\n"
            })
            .collect()
    }

    #[test]
    fn untouched_round_trip() {
        let recs = vec![record()];
        let report = review_import_text(&review_export_text(&recs), &recs).unwrap();
        assert!(report.diffs.is_empty());
        assert_eq!(report.records, recs);
    }

    #[test]
    fn corrected_stat_is_reported() {
        let recs = vec![record()];
        let text = edit(&review_export_text(&recs), |v| {
            let raw = v["metadata"]["subchart_2"]["stats"]["raw"].as_str().unwrap().replace("59%", "63%");
            v["metadata"]["subchart_2"]["stats"] = Value::String(raw);
            v["status"] = "corrected".into();
            for item in ["count", "types", "axes", "statistics", "positions"] {
                v["checklist"][item] = true.into();
            }
        });
        let report = review_import_text(&text, &recs).unwrap();
        let d = &report.diffs[0];
        assert!(d.changed.contains(&"subchart_2.stats".to_string()), "{:?}", d.changed);
        assert!(d.changed.iter().all(|c| !c.starts_with("subchart_1") && !c.starts_with("subchart_3")));
        assert_eq!(report.records[0].review.status, ReviewStatus::Corrected);
    }

    #[test]
    fn approval_needs_a_full_checklist() {
        let recs = vec![record()];
        let text = edit(&review_export_text(&recs), |v| {
            v["status"] = "verified".into();
            v["checklist"]["count"] = true.into();
        });
        let err = review_import_text(&text, &recs).unwrap_err();
        assert!(matches!(err, CurationError::InvalidEditedMetadata { ref id, .. } if id == "r1"), "{err}");
    }

    #[test]
    fn version_and_validity_checks() {
        let recs = vec![record()];
        let text = edit(&review_export_text(&recs), |v| v["schema_version"] = 0.into());
        assert!(matches!(review_import_text(&text, &recs), Err(CurationError::SchemaVersionMismatch { found: Some(0), .. })));
        let text = edit(&review_export_text(&recs), |v| v["metadata"]["subchart_1"]["stats"] = "nothing".into());
        assert!(matches!(review_import_text(&text, &recs), Err(CurationError::InvalidEditedMetadata { .. })));
    }

    #[test]
    fn diff_orders_subcharts_naturally() {
        let a = serde_json::json!({"title": "a", "subchart_2": {"kind": "bar"}, "subchart_10": {"kind": "bar"}});
        let b = serde_json::json!({"title": "b", "subchart_2": {"kind": "pie"}, "subchart_10": {"kind": "pie"}, "subchart_11": {}});
        assert_eq!(metadata_diff(&a, &b), ["title", "subchart_2.kind", "subchart_10.kind", "subchart_11"]);
    }
}
