//! Building a text/metadata dataset from chart sources: complexity
//! filtering, leak-checked passage synthesis, metadata drafts, offline
//! review, preference pairs, splits and summary statistics.

pub mod leak;
pub mod prefs;
pub mod review;
pub mod stats;

use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{bindings, CompletionRequest, Gateway, GatewayError, TemplateId, DEFAULT_TEMPERATURE};
use crate::metadata::numbers::{numbers_in, same_value};
use crate::metadata::{parse_metadata, MetadataDoc};
use crate::reply::yes_no;
use crate::seed::derive_seed;

pub use leak::{Leak, LeakCategory, LeakScanner};
pub use prefs::{build_preference_pair, Generation, PreferenceRecord};
pub use review::{metadata_diff, review_export_text, review_import_text, ImportReport, RecordDiff, ReviewLine, REVIEW_SCHEMA_VERSION};
pub use stats::{count_sentences, dataset_stats, DatasetStats, STATS_LABELS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurationError {
    #[error("curation configuration: {0}")]
    InvalidConfig(String),
    #[error("record `{0}`: image_ref is empty")]
    EmptyImageRef(String),
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("record `{id}`: every passage leaked after {attempts} attempt(s): {last:?}")]
    LeakCheckExhausted { id: String, attempts: u32, last: Vec<String> },
    #[error("record `{id}`: draft metadata does not parse: {message}")]
    UnparseableDraft { id: String, message: String },
    #[error("review file line {line}: schema version {found:?}, expected {expected}")]
    SchemaVersionMismatch { line: usize, expected: u32, found: Option<u64> },
    #[error("record `{id}`: edited metadata rejected: {}", errors.join("; "))]
    InvalidEditedMetadata { id: String, errors: Vec<String> },
    #[error("review file names unknown record `{0}`")]
    UnknownRecord(String),
    #[error("record `{id}`: a generation does not parse: {message}")]
    UnparseableGeneration { id: String, message: String },
    #[error("record `{0}`: both generations are identical")]
    IdenticalOutputs(String),
    #[error("record `{id}`: judge reply names no option: {reply:?}")]
    UnparseableJudgeReply { id: String, reply: String },
    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    /// Backend for classification and synthesis.
    pub backend: String,
    pub model: String,
    pub temperature: f64,
    pub judge_backend: String,
    pub judge_model: String,
    pub judge_temperature: f64,
    /// Few-shot block for the complexity prompt.
    pub labelled_examples: String,
    pub text_examples: Option<String>,
    pub metadata_examples: Option<String>,
    /// Passage attempts before a record is flagged.
    pub max_text_attempts: u32,
    /// Names that must not appear in synthesized passages.
    pub source_names: Vec<String>,
    pub t_low: f64,
    pub t_high: f64,
    pub pairs_per_record: u32,
    pub split_seed: u64,
    /// Keep unreviewed and rejected records out of every split.
    pub strict_review: bool,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            backend: "curator".into(),
            model: "curator".into(),
            temperature: DEFAULT_TEMPERATURE,
            judge_backend: "judge".into(),
            judge_model: "judge".into(),
            judge_temperature: 0.0,
            labelled_examples: String::new(),
            text_examples: None,
            metadata_examples: None,
            max_text_attempts: 3,
            source_names: vec!["Pew Research Center".into()],
            t_low: 0.2,
            t_high: 0.9,
            pairs_per_record: 1,
            split_seed: 0,
            strict_review: true,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), CurationError> {
        if self.max_text_attempts == 0 {
            return Err(CurationError::InvalidConfig("max_text_attempts must be >= 1".into()));
        }
        if self.t_low == self.t_high {
            return Err(CurationError::InvalidConfig("t_low and t_high must differ".into()));
        }
        for t in [self.temperature, self.judge_temperature, self.t_low, self.t_high] {
            if !t.is_finite() || t < 0.0 {
                return Err(CurationError::InvalidConfig(format!("temperature {t} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub id: String,
    /// Opaque reference to the chart image or a textual description of it.
    pub image_ref: String,
    #[serde(default)]
    pub provenance: String,
}

impl SourceRecord {
    pub fn check(&self) -> Result<(), CurationError> {
        if self.image_ref.trim().is_empty() {
            return Err(CurationError::EmptyImageRef(self.id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    #[default]
    Unreviewed,
    Verified,
    Corrected,
    Rejected,
}

impl ReviewStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewStatus::Unreviewed => "unreviewed",
            ReviewStatus::Verified => "verified",
            ReviewStatus::Corrected => "corrected",
            ReviewStatus::Rejected => "rejected",
        }
    }

    /// Verified or corrected.
    pub fn is_approved(self) -> bool {
        matches!(self, ReviewStatus::Verified | ReviewStatus::Corrected)
    }
}

/// The reviewer's per-record checks: subchart count, kinds, axes,
/// statistics, and subchart and text positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checklist {
    pub count: bool,
    pub types: bool,
    pub axes: bool,
    pub statistics: bool,
    pub positions: bool,
}

impl Checklist {
    pub fn items(&self) -> [(&'static str, bool); 5] {
        [
            ("count", self.count),
            ("types", self.types),
            ("axes", self.axes),
            ("statistics", self.statistics),
            ("positions", self.positions),
        ]
    }

    pub fn all_checked(&self) -> bool {
        self.items().iter().all(|(_, v)| *v)
    }

    pub fn unchecked(&self) -> Vec<&'static str> {
        self.items().into_iter().filter(|(_, v)| !v).map(|(k, _)| k).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Review {
    pub status: ReviewStatus,
    pub checklist: Checklist,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(default)]
    pub image_ref: String,
    #[serde(default)]
    pub input_text: String,
    pub metadata: MetadataDoc,
    #[serde(default)]
    pub review: Review,
    #[serde(default)]
    pub split: Option<Split>,
}

/// Asks whether the source is a multi-panel, information-dense chart.
/// A reply that is neither yes nor no counts as not complex.
pub fn classify_complexity(record: &SourceRecord, cfg: &CurationConfig, gw: &Gateway, seed: u64) -> Result<bool, CurationError> {
    record.check()?;
    let b = bindings([("infographic", record.image_ref.as_str()), ("labelled_examples", cfg.labelled_examples.as_str())]);
    let req = CompletionRequest::from_template(cfg.model.clone(), TemplateId::ComplexityFilter, b)?
        .with_temperature(cfg.temperature)
        .with_image(Some(record.image_ref.clone()))
        .with_seed(Some(derive_seed(seed, &["classify", &record.id])));
    let reply = gw.complete(&cfg.backend, &req)?.text;
    Ok(yes_no(&reply).unwrap_or_else(|| {
        log::warn!("record {}: unreadable complexity reply {reply:?}, treated as not complex", record.id);
        false
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Statistics of the metadata that appear nowhere in the passage.
    pub missing: Vec<f64>,
    pub passed: bool,
}

/// Statistics of `doc` absent from the numbers in `text`.
pub fn stat_coverage(text: &str, doc: &MetadataDoc) -> Coverage {
    let found = numbers_in(text);
    let missing: Vec<f64> = doc
        .extract_numbers()
        .into_iter()
        .filter(|v| !found.iter().any(|f| same_value(*f, *v)))
        .collect();
    Coverage { passed: missing.is_empty(), missing }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizedText {
    pub text: String,
    pub attempts: u32,
    /// Leaks found in each rejected attempt, in order.
    pub rejected: Vec<Vec<String>>,
    pub coverage: Option<Coverage>,
}

fn retry_note(leaks: &[Leak]) -> String {
    let terms: Vec<&str> = leaks.iter().map(|l| l.matched.as_str()).collect();
    format!(
        "\n\nThe previous description was rejected because it used: {}. Rewrite it without those terms.",
        terms.join(", ")
    )
}

/// Writes a plain passage describing the source, retrying while the reply
/// leaks chart vocabulary, panel counts or source names.
///
/// Accepted text is stored verbatim. With `metadata`, the result also
/// reports which statistics the passage failed to mention.
pub fn synthesize_text(
    record: &SourceRecord,
    metadata: Option<&MetadataDoc>,
    cfg: &CurationConfig,
    gw: &Gateway,
    seed: u64,
) -> Result<SynthesizedText, CurationError> {
    record.check()?;
    let scanner = LeakScanner::new(&cfg.source_names);
    let mut rejected: Vec<Vec<String>> = Vec::new();
    let mut last_leaks: Vec<Leak> = Vec::new();
    for attempt in 1..=cfg.max_text_attempts {
        let mut b = bindings([("infographic", record.image_ref.as_str())]);
        if let Some(ex) = &cfg.text_examples {
            b.insert("examples".into(), format!("\n\n{ex}"));
        }
        if !last_leaks.is_empty() {
            b.insert("retry_note".into(), retry_note(&last_leaks));
        }
        let req = CompletionRequest::from_template(cfg.model.clone(), TemplateId::TextSynthesis, b)?
            .with_temperature(cfg.temperature)
            .with_image(Some(record.image_ref.clone()))
            .with_seed(Some(derive_seed(seed, &["synth_text", &record.id, &attempt.to_string()])));
        let text = gw.complete(&cfg.backend, &req)?.text;
        let leaks = scanner.scan(&text);
        if leaks.is_empty() {
            return Ok(SynthesizedText {
                coverage: metadata.map(|d| stat_coverage(&text, d)),
                text,
                attempts: attempt,
                rejected,
            });
        }
        log::info!("record {}: attempt {attempt} leaked {:?}", record.id, leaks);
        rejected.push(leaks.iter().map(|l| l.matched.clone()).collect());
        last_leaks = leaks;
    }
    Err(CurationError::LeakCheckExhausted {
        id: record.id.clone(),
        attempts: cfg.max_text_attempts,
        last: rejected.pop().unwrap_or_default(),
    })
}

/// Drafts metadata for a source. The draft starts unreviewed.
pub fn synthesize_metadata(record: &SourceRecord, cfg: &CurationConfig, gw: &Gateway, seed: u64) -> Result<DatasetRecord, CurationError> {
    record.check()?;
    let mut b = bindings([("source", record.image_ref.as_str())]);
    if let Some(ex) = &cfg.metadata_examples {
        b.insert("examples".into(), format!("\n\n{ex}"));
    }
    let req = CompletionRequest::from_template(cfg.model.clone(), TemplateId::MetadataSynthesis, b)?
        .with_temperature(cfg.temperature)
        .with_image(Some(record.image_ref.clone()))
        .with_seed(Some(derive_seed(seed, &["synth_meta", &record.id])));
    let reply = gw.complete(&cfg.backend, &req)?.text;
    let metadata = parse_metadata(&reply)
        .map_err(|e| CurationError::UnparseableDraft { id: record.id.clone(), message: e.to_string() })?;
    Ok(DatasetRecord {
        id: record.id.clone(),
        image_ref: record.image_ref.clone(),
        input_text: String::new(),
        metadata,
        review: Review::default(),
        split: None,
    })
}

/// 80:5:15 bucket from a seeded hash of the id.
pub fn assign_split(id: &str, seed: u64) -> Split {
    match derive_seed(seed, &["split", id]) % 100 {
        0..=79 => Split::Train,
        80..=84 => Split::Val,
        _ => Split::Test,
    }
}

/// Sets every record's split. In strict mode unreviewed and rejected
/// records get none, so they can never reach training.
pub fn apply_splits(records: &mut [DatasetRecord], seed: u64, strict: bool) {
    for r in records {
        let eligible = !strict || r.review.status.is_approved();
        r.split = eligible.then(|| assign_split(&r.id, seed));
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CurationError {
    CurationError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes `contents` through a temporary file in the same directory and
/// renames it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CurationError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(contents).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("records serialize") + "\n").collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CurationError> {
    write_atomic(path, to_jsonl(items).as_bytes())
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, CurationError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CurationError::BadRecord { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CurationError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_jsonl(&text)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::ScriptedMock;

    fn source(id: &str) -> SourceRecord {
        SourceRecord { id: id.into(), image_ref: format!("charts/{id}.png"), provenance: String::new() }
    }

    fn gw(pairs: &[(&str, &str)]) -> Gateway {
        Gateway::new(2).with_backend("curator", Arc::new(ScriptedMock::from_pairs(pairs.iter().copied())))
    }

    #[test]
    fn complexity_replies() {
        let cfg = CurationConfig::default();
        let cases = [("Yes — multiple subcharts", true), ("No", false), ("Perhaps", false)];
        for (reply, want) in cases {
            assert_eq!(classify_complexity(&source("a"), &cfg, &gw(&[("*", reply)]), 0).unwrap(), want, "{reply}");
        }
        let empty = SourceRecord { image_ref: " ".into(), ..source("b") };
        assert_eq!(classify_complexity(&empty, &cfg, &gw(&[("*", "Yes")]), 0), Err(CurationError::EmptyImageRef("b".into())));
    }

    #[test]
    fn clean_passage_is_kept_verbatim() {
        let cfg = CurationConfig::default();
        let passage = "  Roughly 35% of Republicans and 63% of Democrats trust scientists.\n";
        let doc = parse_metadata(r#"{"title":"t","summary":"s","subchart_1":{"kind":"bar","stats":"R: 35%, D: 63%"}}"#).unwrap();
        let out = synthesize_text(&source("a"), Some(&doc), &cfg, &gw(&[("*", passage)]), 0).unwrap();
        assert_eq!(out.text, passage);
        assert_eq!(out.attempts, 1);
        assert!(out.coverage.unwrap().passed);
    }

    #[test]
    fn leaky_backend_exhausts_retries() {
        let cfg = CurationConfig::default();
        let err = synthesize_text(&source("a"), None, &cfg, &gw(&[("*", "As shown in the bar chart, most agree.")]), 0).unwrap_err();
        assert!(matches!(err, CurationError::LeakCheckExhausted { ref id, attempts: 3, .. } if id == "a"), "{err}");
    }

    #[test]
    fn retry_recovers_after_a_leak() {
        let cfg = CurationConfig::default();
        let rec = source("a");
        let first = CompletionRequest::from_template(
            cfg.model.clone(),
            TemplateId::TextSynthesis,
            bindings([("infographic", rec.image_ref.as_str())]),
        )
        .unwrap()
        .with_image(Some(rec.image_ref.clone()));
        let g = gw(&[(first.fingerprint().as_str(), "The pie shows 40%."), ("*", "Forty percent agree.")]);
        let out = synthesize_text(&rec, None, &cfg, &g, 0).unwrap();
        assert_eq!((out.attempts, out.text.as_str()), (2, "Forty percent agree."));
        assert_eq!(out.rejected, [vec!["pie".to_string()]]);
    }

    #[test]
    fn drafts() {
        let cfg = CurationConfig::default();
        let path = format!("{}/fixtures/example_1.txt", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(path).unwrap();
        let d = synthesize_metadata(&source("a"), &cfg, &gw(&[("*", &text)]), 0).unwrap();
        assert_eq!(d.metadata.subcharts.len(), 3);
        assert_eq!(d.review.status, ReviewStatus::Unreviewed);
        assert!(matches!(
            synthesize_metadata(&source("a"), &cfg, &gw(&[("*", "%%%")]), 0),
            Err(CurationError::UnparseableDraft { .. })
        ));
    }

    #[test]
    fn split_ratio_and_strictness() {
        let mut counts = [0usize; 3];
        for i in 0..20_000 {
            counts[assign_split(&format!("rec-{i}"), 11) as usize] += 1;
        }
        let share = |c: usize| c as f64 / 20_000.0;
        assert!((share(counts[0]) - 0.80).abs() < 0.01, "{counts:?}");
        assert!((share(counts[1]) - 0.05).abs() < 0.01, "{counts:?}");
        assert!((share(counts[2]) - 0.15).abs() < 0.01, "{counts:?}");
        assert_eq!(assign_split("x", 1), assign_split("x", 1));

        let doc = parse_metadata(r#"{"title":"t","summary":"s","subchart_1":{"kind":"pie","stats":"A: 1"}}"#).unwrap();
        let mut recs: Vec<DatasetRecord> = ["a", "b"]
            .iter()
            .map(|id| DatasetRecord { id: id.to_string(), image_ref: String::new(), input_text: String::new(), metadata: doc.clone(), review: Review::default(), split: None })
            .collect();
        recs[1].review.status = ReviewStatus::Verified;
        apply_splits(&mut recs, 0, true);
        assert_eq!(recs[0].split, None);
        assert!(recs[1].split.is_some());
    }

    #[test]
    fn atomic_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/sources.jsonl");
        let recs = vec![source("a"), source("b")];
        write_jsonl(&path, &recs).unwrap();
        assert_eq!(read_jsonl::<SourceRecord>(&path).unwrap(), recs);
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
