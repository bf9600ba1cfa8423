//! Text to metadata: several generator configurations each propose a
//! document, mechanical heuristics score them, and a ranker picks one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{bindings, CompletionRequest, Gateway, GatewayError, TemplateId, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use crate::metadata::numbers::{numbers_in, same_value};
use crate::metadata::{parse_metadata, serialize_metadata, validate, MetadataDoc, ValidationReport};
use crate::reply::option_choice;
use crate::seed::derive_seed;

/// Options the ranker prompt can present.
pub const RANKER_OPTIONS: usize = 3;
/// Filler for unused ranker option slots.
const EMPTY_OPTION: &str = "(no candidate)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub label: String,
    pub backend: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            label: "generator".into(),
            backend: "generator".into(),
            model: "generator".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

/// Relative weights of the heuristic signals. The score divides by their
/// sum, so only ratios matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicWeights {
    pub parsed: f64,
    pub known_kinds: f64,
    pub stats_present: f64,
    pub stats_grounded: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        HeuristicWeights { parsed: 0.4, known_kinds: 0.2, stats_present: 0.2, stats_grounded: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub generators: Vec<GeneratorConfig>,
    /// Backend serving the ranker; without one the heuristic decides.
    pub ranker_backend: Option<String>,
    pub ranker_model: String,
    pub ranker_temperature: f64,
    pub weights: HeuristicWeights,
    /// Worked examples appended to the generation prompt.
    pub examples: Option<String>,
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            generators: vec![GeneratorConfig::default()],
            ranker_backend: None,
            ranker_model: "ranker".into(),
            ranker_temperature: DEFAULT_TEMPERATURE,
            weights: HeuristicWeights::default(),
            examples: None,
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<(), MetagenError> {
        if self.generators.is_empty() {
            return Err(MetagenError::InvalidConfig("at least one generator is required".into()));
        }
        for g in &self.generators {
            if !g.temperature.is_finite() || g.temperature < 0.0 {
                return Err(MetagenError::InvalidConfig(format!("generator `{}`: temperature must be >= 0", g.label)));
            }
        }
        let w = self.weights;
        let all = [w.parsed, w.known_kinds, w.stats_present, w.stats_grounded];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) || all.iter().sum::<f64>() <= 0.0 {
            return Err(MetagenError::InvalidConfig("heuristic weights must be >= 0 with a positive sum".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetagenError {
    #[error("metadata stage configuration: {0}")]
    InvalidConfig(String),
    #[error("every generator call failed: {0:?}")]
    AllBackendsFailed(Vec<String>),
    #[error("no candidate produced parseable metadata")]
    NoViableCandidate,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Signals {
    pub parsed: bool,
    pub known_kinds: bool,
    pub stats_present: bool,
    pub stats_grounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMetadata {
    pub label: String,
    /// Model output; absent when the call itself failed.
    pub raw_text: Option<String>,
    pub error: Option<String>,
    pub doc: Option<MetadataDoc>,
    pub validation: ValidationReport,
    pub signals: Signals,
    pub heuristic_score: f64,
}

impl CandidateMetadata {
    /// Candidate built from a model reply.
    pub fn from_reply(label: impl Into<String>, raw: String) -> Self {
        let (doc, validation, error) = match parse_metadata(&raw) {
            Ok(d) => {
                let v = validate(&d);
                (Some(d), v, None)
            }
            Err(e) => (None, ValidationReport::parse_failure(e.to_string()), Some(e.to_string())),
        };
        CandidateMetadata {
            label: label.into(),
            raw_text: Some(raw),
            error,
            doc,
            validation,
            signals: Signals::default(),
            heuristic_score: 0.0,
        }
    }

    fn failed_call(label: impl Into<String>, err: &GatewayError) -> Self {
        CandidateMetadata {
            label: label.into(),
            raw_text: None,
            error: Some(err.to_string()),
            doc: None,
            validation: ValidationReport::parse_failure(format!("call failed: {err}")),
            signals: Signals::default(),
            heuristic_score: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    LlmRanker,
    HeuristicFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    pub chosen_index: usize,
    pub method: RankMethod,
    /// Candidate indices shown to the ranker as options 1..=3.
    pub presented: Vec<usize>,
    pub rationale_text: Option<String>,
    /// Why the ranker's answer was not used, when it was not.
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAudit {
    pub candidates: Vec<CandidateMetadata>,
    pub decision: RankDecision,
}

fn generation_request(input_text: &str, g: &GeneratorConfig, examples: Option<&str>, seed: Option<u64>) -> Result<CompletionRequest, GatewayError> {
    let mut b = bindings([("source", input_text)]);
    if let Some(ex) = examples {
        b.insert("examples".into(), format!("\n\n{ex}"));
    }
    Ok(CompletionRequest::from_template(g.model.clone(), TemplateId::MetadataSynthesis, b)?
        .with_temperature(g.temperature)
        .with_max_tokens(g.max_tokens)
        .with_seed(seed.map(|s| derive_seed(s, &["generator", &g.label]))))
}

/// One candidate per generator, in configuration order. Calls run
/// concurrently, bounded by the gateway's in-flight limit.
pub fn generate_candidates(
    input_text: &str,
    configs: &[GeneratorConfig],
    examples: Option<&str>,
    gw: &Gateway,
    seed: Option<u64>,
) -> Result<Vec<CandidateMetadata>, MetagenError> {
    if configs.is_empty() {
        return Err(MetagenError::InvalidConfig("at least one generator is required".into()));
    }
    let outcomes: Vec<Result<String, GatewayError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|g| {
                s.spawn(move || {
                    let req = generation_request(input_text, g, examples, seed)?;
                    gw.complete(&g.backend, &req).map(|c| c.text)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
    });
    let mut failures = Vec::new();
    let candidates: Vec<CandidateMetadata> = configs
        .iter()
        .zip(outcomes)
        .map(|(g, out)| match out {
            Ok(text) => CandidateMetadata::from_reply(&g.label, text),
            Err(e) => {
                log::warn!("generator `{}` failed: {e}", g.label);
                failures.push(format!("{}: {e}", g.label));
                CandidateMetadata::failed_call(&g.label, &e)
            }
        })
        .collect();
    if failures.len() == candidates.len() {
        return Err(MetagenError::AllBackendsFailed(failures));
    }
    Ok(candidates)
}

/// Signals for one document. Grounding asks that every statistic occur as
/// a number somewhere in the input text.
pub fn signals(doc: Option<&MetadataDoc>, input_text: &str) -> Signals {
    let Some(doc) = doc else { return Signals::default() };
    let text_numbers = numbers_in(input_text);
    Signals {
        parsed: !doc.subcharts.is_empty(),
        known_kinds: doc.subcharts.iter().all(|s| s.kind.is_known()),
        stats_present: doc.subcharts.iter().all(|s| s.stats.value_count() > 0),
        stats_grounded: doc
            .subcharts
            .iter()
            .flat_map(|s| s.stats.values())
            .all(|v| text_numbers.iter().any(|t| same_value(*t, v.value))),
    }
}

pub fn heuristic_score(s: Signals, w: &HeuristicWeights) -> f64 {
    let total = w.parsed + w.known_kinds + w.stats_present + w.stats_grounded;
    if total <= 0.0 || !s.parsed {
        return 0.0;
    }
    let hit = |on: bool, weight: f64| if on { weight } else { 0.0 };
    (hit(s.parsed, w.parsed)
        + hit(s.known_kinds, w.known_kinds)
        + hit(s.stats_present, w.stats_present)
        + hit(s.stats_grounded, w.stats_grounded))
        / total
}

pub fn heuristic_prefilter(candidates: &mut [CandidateMetadata], input_text: &str, weights: &HeuristicWeights) {
    for c in candidates {
        c.signals = signals(c.doc.as_ref(), input_text);
        c.heuristic_score = heuristic_score(c.signals, weights);
    }
}

/// Highest score among parseable candidates, lowest index among ties.
fn heuristic_choice(candidates: &[CandidateMetadata]) -> Option<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.doc.is_some())
        .fold(None, |best: Option<(usize, f64)>, (i, c)| match best {
            Some((_, s)) if s >= c.heuristic_score => best,
            _ => Some((i, c.heuristic_score)),
        })
        .map(|(i, _)| i)
}

/// Up to three parseable candidates with the best scores, in index order.
fn presented(candidates: &[CandidateMetadata]) -> Vec<usize> {
    let mut viable: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].doc.is_some()).collect();
    viable.sort_by(|&a, &b| candidates[b].heuristic_score.total_cmp(&candidates[a].heuristic_score).then(a.cmp(&b)));
    viable.truncate(RANKER_OPTIONS);
    viable.sort_unstable();
    viable
}

pub fn rank(
    input_text: &str,
    candidates: &[CandidateMetadata],
    cfg: &StageConfig,
    gw: Option<&Gateway>,
    seed: Option<u64>,
) -> Result<RankDecision, MetagenError> {
    let fallback_idx = heuristic_choice(candidates).ok_or(MetagenError::NoViableCandidate)?;
    let shown = presented(candidates);
    let fallback = |reason: String| RankDecision {
        chosen_index: fallback_idx,
        method: RankMethod::HeuristicFallback,
        presented: shown.clone(),
        rationale_text: None,
        fallback_reason: Some(reason),
    };
    let (Some(backend), Some(gw)) = (cfg.ranker_backend.as_deref(), gw) else {
        return Ok(fallback("no ranker backend configured".into()));
    };
    let mut b = bindings([("input_text", input_text.to_string())]);
    for slot in 0..RANKER_OPTIONS {
        let text = shown
            .get(slot)
            .and_then(|&i| candidates[i].doc.as_ref())
            .map(serialize_metadata)
            .unwrap_or_else(|| EMPTY_OPTION.to_string());
        b.insert(format!("option_{}", slot + 1), text);
    }
    let req = CompletionRequest::from_template(cfg.ranker_model.clone(), TemplateId::Ranker, b)?
        .with_temperature(cfg.ranker_temperature)
        .with_seed(seed.map(|s| derive_seed(s, &["ranker"])));
    let reply = match gw.complete(backend, &req) {
        Ok(c) => c.text,
        Err(e) => {
            log::warn!("ranker call failed: {e}");
            return Ok(fallback(format!("ranker call failed: {e}")));
        }
    };
    match option_choice(&reply, shown.len()) {
        Some(n) => Ok(RankDecision {
            chosen_index: shown[n - 1],
            method: RankMethod::LlmRanker,
            presented: shown,
            rationale_text: Some(reply),
            fallback_reason: None,
        }),
        None => {
            let mut d = fallback("ranker reply names no presented option".into());
            d.rationale_text = Some(reply);
            Ok(d)
        }
    }
}

/// Generate, score and rank; returns the chosen document with the audit.
pub fn generate_metadata(
    input_text: &str,
    cfg: &StageConfig,
    gw: &Gateway,
    seed: Option<u64>,
) -> Result<(MetadataDoc, StageAudit), MetagenError> {
    cfg.validate()?;
    let mut candidates = generate_candidates(input_text, &cfg.generators, cfg.examples.as_deref(), gw, seed)?;
    heuristic_prefilter(&mut candidates, input_text, &cfg.weights);
    let decision = rank(input_text, &candidates, cfg, Some(gw), seed)?;
    let doc = candidates[decision.chosen_index].doc.clone().ok_or(MetagenError::NoViableCandidate)?;
    Ok((doc, StageAudit { candidates, decision }))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::{ChatBackend, Completion, ScriptedMock};

    const GOLD: &str = r#"{"title":"Trust in science","summary":"Most trust scientists",
        "subchart_1":{"kind":"bar","axis":"x: party; y: percent","stats":"Republicans: 35, Democrats: 63",
        "position_chart":"the only chart","dimensions":"510 x 300"}}"#;
    const TEXT: &str = "About 35 percent of Republicans and 63 percent of Democrats trust scientists.";

    struct Down;
    impl ChatBackend for Down {
        fn complete(&self, _: &CompletionRequest) -> Result<Completion, GatewayError> {
            Err(GatewayError::Transport { detail: "connection refused".into(), attempts: 1 })
        }
        fn is_mock(&self) -> bool {
            true
        }
    }

    fn generator(label: &str) -> GeneratorConfig {
        GeneratorConfig { label: label.into(), backend: label.into(), model: label.into(), ..GeneratorConfig::default() }
    }

    fn gw(replies: &[(&str, &str)]) -> Gateway {
        replies.iter().fold(Gateway::new(4), |g, (name, reply)| {
            g.with_backend(*name, Arc::new(ScriptedMock::from_pairs([("*", *reply)])))
        })
    }

    fn cfg(labels: &[&str]) -> StageConfig {
        StageConfig { generators: labels.iter().map(|l| generator(l)).collect(), ..StageConfig::default() }
    }

    #[test]
    fn one_candidate_per_config_in_order() {
        let two = r#"{"title":"t","summary":"s","subchart_1":{"kind":"pie","stats":"A: 1"},"subchart_2":{"kind":"line","stats":"B: 2"}}"#;
        let g = gw(&[("a", GOLD), ("b", two), ("c", "I could not read that")]);
        let c = generate_candidates(TEXT, &cfg(&["a", "b", "c"]).generators, None, &g, Some(1)).unwrap();
        assert_eq!(c.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(c[0].validation.is_valid);
        assert_eq!(c[1].doc.as_ref().unwrap().subcharts.len(), 2);
        assert!(c[2].doc.is_none() && c[2].raw_text.is_some());
    }

    #[test]
    fn all_backends_down() {
        let g = Gateway::new(2).with_backend("a", Arc::new(Down)).with_backend("b", Arc::new(Down));
        let err = generate_candidates(TEXT, &cfg(&["a", "b"]).generators, None, &g, None).unwrap_err();
        assert!(matches!(err, MetagenError::AllBackendsFailed(v) if v.len() == 2));
        // One live backend is enough; the dead one still yields a candidate.
        let g = Gateway::new(2).with_backend("a", Arc::new(Down)).with_backend("b", Arc::new(ScriptedMock::from_pairs([("*", GOLD)])));
        let c = generate_candidates(TEXT, &cfg(&["a", "b"]).generators, None, &g, None).unwrap();
        assert!(c[0].raw_text.is_none() && c[0].error.is_some());
    }

    #[test]
    fn heuristic_examples() {
        let w = HeuristicWeights::default();
        let gold = parse_metadata(GOLD).unwrap();
        assert_eq!(heuristic_score(signals(Some(&gold), TEXT), &w), 1.0);
        assert_eq!(heuristic_score(signals(None, TEXT), &w), 0.0);
        let mut off = gold.clone();
        off.subcharts[0].stats.series[0].values[0].value = 99.0;
        let s = heuristic_score(signals(Some(&off), TEXT), &w);
        assert!((s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ranker_paths() {
        let docs = [GOLD, GOLD, GOLD].map(|t| CandidateMetadata::from_reply("x", t.to_string()));
        let mut c = docs.to_vec();
        heuristic_prefilter(&mut c, TEXT, &HeuristicWeights::default());
        let mut stage = StageConfig { ranker_backend: Some("ranker".into()), ..StageConfig::default() };

        let g = gw(&[("ranker", "Option 2")]);
        let d = rank(TEXT, &c, &stage, Some(&g), None).unwrap();
        assert_eq!((d.chosen_index, d.method), (1, RankMethod::LlmRanker));

        let g = gw(&[("ranker", "the best is clearly the 3rd")]);
        let d = rank(TEXT, &c, &stage, Some(&g), None).unwrap();
        assert_eq!((d.chosen_index, d.method), (0, RankMethod::HeuristicFallback));

        stage.ranker_backend = None;
        c[0].heuristic_score = 0.8;
        c[1].heuristic_score = 0.8;
        c[2].heuristic_score = 0.4;
        let d = rank(TEXT, &c, &stage, None, None).unwrap();
        assert_eq!((d.chosen_index, d.method), (0, RankMethod::HeuristicFallback));
    }

    #[test]
    fn ranker_sees_top_three_in_index_order() {
        let mut c: Vec<CandidateMetadata> = (0..5).map(|_| CandidateMetadata::from_reply("x", GOLD.to_string())).collect();
        for (cand, s) in c.iter_mut().zip([0.2, 0.9, 0.5, 0.9, 0.7]) {
            cand.heuristic_score = s;
        }
        assert_eq!(presented(&c), [1, 3, 4]);
        let stage = StageConfig { ranker_backend: Some("ranker".into()), ..StageConfig::default() };
        let d = rank(TEXT, &c, &stage, Some(&gw(&[("ranker", "Option 3")])), None).unwrap();
        assert_eq!(d.chosen_index, 4);
    }

    #[test]
    fn composition_prefers_the_grounded_document() {
        let corrupt = r#"{"title":"t","summary":"s","subchart_1":{"kind":"sparkle","stats":"none"}}"#;
        let g = gw(&[("a", corrupt), ("b", GOLD), ("c", "no object here")]);
        let (doc, audit) = generate_metadata(TEXT, &cfg(&["a", "b", "c"]), &g, Some(3)).unwrap();
        assert_eq!(doc, parse_metadata(GOLD).unwrap());
        assert_eq!(audit.decision.chosen_index, 1);

        let g = gw(&[("a", "just prose"), ("b", "more prose")]);
        assert_eq!(generate_metadata(TEXT, &cfg(&["a", "b"]), &g, None).unwrap_err(), MetagenError::NoViableCandidate);
    }

    #[test]
    fn audits_are_reproducible() {
        let g = gw(&[("a", GOLD), ("b", GOLD)]);
        let run = || serde_json::to_string(&generate_metadata(TEXT, &cfg(&["a", "b"]), &g, Some(9)).unwrap().1).unwrap();
        assert_eq!(run(), run());
    }
}
