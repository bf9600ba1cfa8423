//! Scoring generated metadata against gold metadata.
//!
//! Corpus figures are macro means over pairs (percent-scaled where they are
//! accuracies); pooled micro figures are reported alongside. RSE is a single
//! aggregate over all pairs rather than a mean.

mod metrics;
mod rouge;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use metrics::{
    correct_subcharts, rse_of_counts, stat_matches, subchart_summary_rouge, subchart_summary_rouge_with,
    type_matches, StatMatching, SummaryAggregation,
};
pub use rouge::{lcs_len, rouge_l, rouge_l_with, tokenize, RougeVariant};

use crate::metadata::{parse_metadata_value, MetadataDoc};

/// Flag set on a pair whose prediction could not be parsed.
pub const FLAG_UNPARSEABLE_PRED: &str = "unparseable_pred";
/// Flag set when subchart summaries could not be compared.
pub const FLAG_NO_SUBCHARTS: &str = "no_subcharts";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("gold metadata for `{id}` does not parse: {message}")]
    BadGold { id: String, message: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("prediction and gold ids differ (only in pred: {only_pred:?}; only in gold: {only_gold:?})")]
    IdMismatch { only_pred: Vec<String>, only_gold: Vec<String> },
    #[error("no pairs to evaluate")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub id: String,
    pub gold: MetadataDoc,
    pub pred: MetadataDoc,
    /// Why the prediction was replaced by an empty document, if it was.
    pub pred_error: Option<String>,
}

fn empty_doc() -> MetadataDoc {
    MetadataDoc { title: String::new(), summary: String::new(), subcharts: Vec::new() }
}

impl EvalPair {
    pub fn new(id: impl Into<String>, gold: MetadataDoc, pred: MetadataDoc) -> Self {
        EvalPair { id: id.into(), gold, pred, pred_error: None }
    }

    /// Builds a pair from raw JSON. Gold must parse; a prediction that does
    /// not is scored as an empty document.
    pub fn from_values(id: &str, gold: &Value, pred: &Value) -> Result<Self, EvalError> {
        let gold = parse_metadata_value(gold).map_err(|e| EvalError::BadGold { id: id.to_string(), message: e.to_string() })?;
        Ok(match parse_metadata_value(pred) {
            Ok(pred) => EvalPair::new(id, gold, pred),
            Err(e) => EvalPair { id: id.to_string(), gold, pred: empty_doc(), pred_error: Some(e.to_string()) },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub rouge: RougeVariant,
    pub subchart_summary: SummaryAggregation,
    pub stat_matching: StatMatching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub id: String,
    pub gold_subcharts: usize,
    pub pred_subcharts: usize,
    pub correct_subcharts: usize,
    pub type_matches: usize,
    pub gold_stats: usize,
    pub pred_stats: usize,
    pub stat_matches: usize,
    /// Fractions in [0,1].
    pub subchart_accuracy: f64,
    pub subchart_type_accuracy: f64,
    pub statistical_accuracy: f64,
    pub count_exact: bool,
    pub title_rouge_l: f64,
    pub summary_rouge_l: f64,
    pub subchart_summary_rouge_l: f64,
    pub flags: Vec<String>,
}

/// Share of `hit` in `total`; an empty gold side is perfect only against an
/// empty prediction.
fn ratio(hit: usize, total: usize, pred_len: usize) -> f64 {
    if total == 0 {
        return if pred_len == 0 { 1.0 } else { 0.0 };
    }
    hit as f64 / total as f64
}

pub fn score_pair(pair: &EvalPair, opts: &EvalOptions) -> PairMetrics {
    let (pred, gold) = (&pair.pred, &pair.gold);
    let mut flags = Vec::new();
    if pair.pred_error.is_some() {
        flags.push(FLAG_UNPARSEABLE_PRED.to_string());
    }
    let correct = correct_subcharts(pred, gold);
    let types = type_matches(pred, gold);
    let (p_nums, g_nums) = (pred.extract_numbers(), gold.extract_numbers());
    let stats = stat_matches(&p_nums, &g_nums, opts.stat_matching);
    let sub_rouge = subchart_summary_rouge_with(pred, gold, opts.subchart_summary, opts.rouge).unwrap_or_else(|| {
        flags.push(FLAG_NO_SUBCHARTS.to_string());
        0.0
    });
    let (np, ng) = (pred.subcharts.len(), gold.subcharts.len());
    PairMetrics {
        id: pair.id.clone(),
        gold_subcharts: ng,
        pred_subcharts: np,
        correct_subcharts: correct,
        type_matches: types,
        gold_stats: g_nums.len(),
        pred_stats: p_nums.len(),
        stat_matches: stats,
        subchart_accuracy: ratio(correct, ng, np),
        subchart_type_accuracy: ratio(types, ng, np),
        statistical_accuracy: ratio(stats, g_nums.len(), p_nums.len()),
        count_exact: np == ng,
        title_rouge_l: rouge_l_with(&pred.title, &gold.title, opts.rouge),
        summary_rouge_l: rouge_l_with(&pred.summary, &gold.summary, opts.rouge),
        subchart_summary_rouge_l: sub_rouge,
        flags,
    }
}

/// Pooled counts: total hits over total gold items, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroMetrics {
    pub subchart_accuracy: f64,
    pub subchart_type_accuracy: f64,
    pub statistical_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_pairs: usize,
    pub options: EvalOptions,
    /// Percent.
    pub subchart_accuracy: f64,
    pub rse: f64,
    pub title_rouge_l: f64,
    pub summary_rouge_l: f64,
    pub subchart_summary_rouge_l: f64,
    /// Percent.
    pub subchart_type_accuracy: f64,
    /// Percent.
    pub statistical_accuracy: f64,
    /// Percent of pairs whose subchart counts agree exactly.
    pub subchart_count_exact: f64,
    pub micro: MicroMetrics,
    /// Ids of pairs carrying any flag, in input order.
    pub flagged: Vec<String>,
    pub per_pair: Vec<PairMetrics>,
}

impl MetricsReport {
    /// The seven headline values in table order.
    pub fn headline(&self) -> [f64; 7] {
        [
            self.subchart_accuracy,
            self.rse,
            self.title_rouge_l,
            self.summary_rouge_l,
            self.subchart_type_accuracy,
            self.subchart_summary_rouge_l,
            self.statistical_accuracy,
        ]
    }
}

/// Pairs per worker thread before splitting pays off.
const PARALLEL_CHUNK: usize = 64;

fn score_all(pairs: &[EvalPair], opts: &EvalOptions) -> Vec<PairMetrics> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    if pairs.len() <= PARALLEL_CHUNK || workers == 1 {
        return pairs.iter().map(|p| score_pair(p, opts)).collect();
    }
    let chunk = pairs.len().div_ceil(workers).max(PARALLEL_CHUNK);
    // Chunks are joined in input order so the output never depends on
    // scheduling.
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|p| score_pair(p, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scoring thread panicked")).collect()
    })
}

pub fn evaluate_corpus(pairs: &[EvalPair], opts: &EvalOptions) -> Result<MetricsReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let per_pair = score_all(pairs, opts);
    let n = per_pair.len() as f64;
    let mean = |f: fn(&PairMetrics) -> f64| per_pair.iter().map(f).sum::<f64>() / n;
    let pooled = |hit: fn(&PairMetrics) -> usize, total: fn(&PairMetrics) -> usize| {
        let t: usize = per_pair.iter().map(total).sum();
        let h: usize = per_pair.iter().map(hit).sum();
        if t == 0 {
            100.0
        } else {
            100.0 * h as f64 / t as f64
        }
    };
    let counts: Vec<(usize, usize)> = per_pair.iter().map(|p| (p.pred_subcharts, p.gold_subcharts)).collect();
    Ok(MetricsReport {
        n_pairs: per_pair.len(),
        options: *opts,
        subchart_accuracy: 100.0 * mean(|p| p.subchart_accuracy),
        rse: rse_of_counts(&counts),
        title_rouge_l: mean(|p| p.title_rouge_l),
        summary_rouge_l: mean(|p| p.summary_rouge_l),
        subchart_summary_rouge_l: mean(|p| p.subchart_summary_rouge_l),
        subchart_type_accuracy: 100.0 * mean(|p| p.subchart_type_accuracy),
        statistical_accuracy: 100.0 * mean(|p| p.statistical_accuracy),
        subchart_count_exact: 100.0 * mean(|p| if p.count_exact { 1.0 } else { 0.0 }),
        micro: MicroMetrics {
            subchart_accuracy: pooled(|p| p.correct_subcharts, |p| p.gold_subcharts),
            subchart_type_accuracy: pooled(|p| p.type_matches, |p| p.gold_subcharts),
            statistical_accuracy: pooled(|p| p.stat_matches, |p| p.gold_stats),
        },
        flagged: per_pair.iter().filter(|p| !p.flags.is_empty()).map(|p| p.id.clone()).collect(),
        per_pair,
    })
}

pub const TABLE_COLUMNS: [&str; 8] = [
    "Model Configuration",
    "Subchart Accuracy",
    "RSE",
    "Title Rouge-L",
    "Summary Rouge-L",
    "Subchart Type Accuracy",
    "Subchart Summary Rouge-L",
    "Statistical Accuracy",
];

/// Pipe-separated comparison table, one row per labelled report.
pub fn format_table(rows: &[(&str, &MetricsReport)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, r)| {
            let [acc, rse, title, summary, types, sub, stats] = r.headline();
            vec![
                label.to_string(),
                format!("{acc:.2}"),
                format!("{rse:.4}"),
                format!("{title:.4}"),
                format!("{summary:.4}"),
                format!("{types:.2}"),
                format!("{sub:.4}"),
                format!("{stats:.2}"),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..TABLE_COLUMNS.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([TABLE_COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(&TABLE_COLUMNS.map(String::from));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(&rule));
    for r in &body {
        out.push_str(&line(r));
    }
    out
}

pub const RATING_COLUMNS: [&str; 3] = ["Readability Score", "Visual Appeal Score", "Data Accuracy and Alignment Score"];

/// Blank human-rating sheet as CSV: one row per (item, model), each score a
/// 1-5 rating left for the rater.
pub fn rating_sheet(item_ids: &[String], models: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = ["id", "Model"].into_iter().chain(RATING_COLUMNS).chain(["notes"]).collect();
    w.write_record(&header).expect("in-memory write");
    for id in item_ids {
        for m in models {
            w.write_record([id.as_str(), m.as_str(), "", "", "", ""]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Deserialize)]
struct PairLine {
    id: Value,
    gold: Value,
    pred: Value,
}

#[derive(Debug, Deserialize)]
struct DocLine {
    id: Value,
    #[serde(alias = "pred", alias = "gold")]
    metadata: Value,
}

fn id_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Reads `{id, gold, pred}` lines.
pub fn read_pairs_jsonl(text: &str) -> Result<Vec<EvalPair>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in jsonl_lines(text) {
        let rec: PairLine =
            serde_json::from_str(l).map_err(|e| EvalError::BadRecord { line, message: e.to_string() })?;
        let id = id_text(&rec.id);
        if !seen.insert(id.clone()) {
            return Err(EvalError::DuplicateId(id));
        }
        out.push(EvalPair::from_values(&id, &rec.gold, &rec.pred)?);
    }
    Ok(out)
}

/// Reads `{id, metadata}` lines (the metadata key may also be spelt `pred`
/// or `gold`), keeping the raw JSON.
pub fn read_docs_jsonl(text: &str) -> Result<Vec<(String, Value)>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in jsonl_lines(text) {
        let rec: DocLine =
            serde_json::from_str(l).map_err(|e| EvalError::BadRecord { line, message: e.to_string() })?;
        let id = id_text(&rec.id);
        if !seen.insert(id.clone()) {
            return Err(EvalError::DuplicateId(id));
        }
        out.push((id, rec.metadata));
    }
    Ok(out)
}

/// Joins predictions to gold by id, in gold order. Any id present on one
/// side only is an error listing the symmetric difference.
pub fn join_by_id(pred: Vec<(String, Value)>, gold: Vec<(String, Value)>) -> Result<Vec<EvalPair>, EvalError> {
    let pred: BTreeMap<String, Value> = pred.into_iter().collect();
    let gold_ids: BTreeSet<&String> = gold.iter().map(|(id, _)| id).collect();
    let only_pred: Vec<String> = pred.keys().filter(|k| !gold_ids.contains(k)).cloned().collect();
    let only_gold: Vec<String> = gold_ids.iter().filter(|k| !pred.contains_key(**k)).map(|k| k.to_string()).collect();
    if !only_pred.is_empty() || !only_gold.is_empty() {
        return Err(EvalError::IdMismatch { only_pred, only_gold });
    }
    gold.iter().map(|(id, g)| EvalPair::from_values(id, g, &pred[id])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::parse_metadata;
    use serde_json::json;

    fn fixture(n: u32) -> MetadataDoc {
        let path = format!("{}/fixtures/example_{n}.txt", env!("CARGO_MANIFEST_DIR"));
        parse_metadata(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn perfect_prediction_fixed_point() {
        let pairs: Vec<EvalPair> = (1..=3).map(|n| EvalPair::new(n.to_string(), fixture(n), fixture(n))).collect();
        let r = evaluate_corpus(&pairs, &EvalOptions::default()).unwrap();
        assert_eq!(r.headline(), [100.0, 0.0, 1.0, 1.0, 100.0, 1.0, 100.0]);
        assert_eq!(r.subchart_count_exact, 100.0);
        assert!(r.flagged.is_empty());
    }

    #[test]
    fn unparseable_prediction_scores_zero_and_is_flagged() {
        let gold = json!({"title": "Trust", "summary": "Most trust", "subchart_1": {"kind": "bar", "stats": "A: 1, B: 2"}});
        let good = EvalPair::from_values("a", &gold, &gold).unwrap();
        let bad = EvalPair::from_values("b", &gold, &json!(42)).unwrap();
        let r = evaluate_corpus(&[good, bad], &EvalOptions::default()).unwrap();
        assert_eq!(r.flagged, ["b"]);
        let b = &r.per_pair[1];
        assert!(b.flags.contains(&FLAG_UNPARSEABLE_PRED.to_string()));
        assert_eq!((b.subchart_accuracy, b.statistical_accuracy, b.title_rouge_l), (0.0, 0.0, 0.0));
        assert_eq!(r.subchart_accuracy, 50.0);
        assert_eq!(r.rse, 0.5f64.sqrt());
    }

    #[test]
    fn two_pair_corpus_matches_hand_computation() {
        // Pair a: gold bar,bar,pie with stats 10,20,30; pred bar,line with 10,30.
        // Pair b: gold one line with 5,6; pred identical.
        let a_gold = json!({"title": "Energy use rises", "summary": "Use rose sharply",
            "subchart_1": {"kind": "bar", "stats": "X: 10", "summary": "x grew"},
            "subchart_2": {"kind": "bar", "stats": "Y: 20", "summary": "y fell"},
            "subchart_3": {"kind": "pie", "stats": "Z: 30", "summary": "z held"}});
        let a_pred = json!({"title": "Energy use", "summary": "Use fell",
            "subchart_1": {"kind": "bar", "stats": "X: 10", "summary": "x grew fast"},
            "subchart_2": {"kind": "line", "stats": "Z: 30", "summary": "nothing"}});
        let b = json!({"title": "T", "summary": "S", "subchart_1": {"kind": "line", "stats": "P: 5, Q: 6", "summary": "up"}});
        let pairs = vec![
            EvalPair::from_values("a", &a_gold, &a_pred).unwrap(),
            EvalPair::from_values("b", &b, &b).unwrap(),
        ];
        let r = evaluate_corpus(&pairs, &EvalOptions::default()).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-9;
        assert!(close(r.subchart_accuracy, 100.0 * (1.0 / 3.0 + 1.0) / 2.0));
        assert!(close(r.rse, (1.0f64 / 2.0).sqrt()));
        assert!(close(r.title_rouge_l, (2.0 / 3.0 + 1.0) / 2.0));
        assert!(close(r.summary_rouge_l, (1.0 / 3.0 + 1.0) / 2.0));
        assert!(close(r.subchart_type_accuracy, 100.0 * (1.0 / 3.0 + 1.0) / 2.0));
        assert!(close(r.subchart_summary_rouge_l, 1.0));
        assert!(close(r.statistical_accuracy, 100.0 * (2.0 / 3.0 + 1.0) / 2.0));
        assert!(close(r.micro.statistical_accuracy, 100.0 * 4.0 / 5.0));
        assert!(close(r.micro.subchart_accuracy, 100.0 * 2.0 / 4.0));
        assert_eq!(r.subchart_count_exact, 50.0);
    }

    #[test]
    fn join_reports_symmetric_difference() {
        let m = json!({"title": "", "summary": ""});
        let err = join_by_id(
            vec![("a".into(), m.clone()), ("c".into(), m.clone())],
            vec![("a".into(), m.clone()), ("b".into(), m)],
        )
        .unwrap_err();
        assert_eq!(err, EvalError::IdMismatch { only_pred: vec!["c".into()], only_gold: vec!["b".into()] });
    }

    #[test]
    fn jsonl_readers() {
        let text = "{\"id\": 1, \"gold\": {\"title\": \"a\", \"summary\": \"\", \"subchart_1\": {\"kind\": \"pie\"}}, \"pred\": \"not metadata {\"}\n\n";
        let pairs = read_pairs_jsonl(text).unwrap();
        assert_eq!(pairs[0].id, "1");
        assert!(pairs[0].pred_error.is_some());
        let docs = read_docs_jsonl("{\"id\":\"x\",\"pred\":{}}\n{\"id\":\"x\",\"pred\":{}}").unwrap_err();
        assert_eq!(docs, EvalError::DuplicateId("x".into()));
    }

    #[test]
    fn table_and_sheet_headers() {
        let pairs = vec![EvalPair::new("1", fixture(1), fixture(1))];
        let r = evaluate_corpus(&pairs, &EvalOptions::default()).unwrap();
        let t = format_table(&[("mock", &r)]);
        let header: Vec<&str> = t.lines().next().unwrap().split('|').map(str::trim).filter(|s| !s.is_empty()).collect();
        assert_eq!(header, TABLE_COLUMNS);
        assert!(t.lines().nth(2).unwrap().contains("100.00"));
        let sheet = rating_sheet(&["1".into(), "2".into()], &["base".into()]);
        assert_eq!(sheet.lines().count(), 3);
        assert!(sheet.starts_with("id,Model,Readability Score,Visual Appeal Score,Data Accuracy and Alignment Score,notes"));
    }
}
