//! Preference pairs: two generations of the same prompt at different
//! temperatures, ordered by a judge model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CurationConfig, CurationError};
use crate::gateway::{bindings, CompletionRequest, Gateway, TemplateId};
use crate::metadata::{parse_metadata, serialize_metadata};
use crate::reply::option_choice;
use crate::seed::{derive_seed, sha256_hex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub temperature: f64,
    pub text: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub id: String,
    pub prompt_text: String,
    pub chosen: String,
    pub rejected: String,
    pub judge_model: String,
    /// Temperatures that produced the chosen and the rejected text.
    pub temperatures: (f64, f64),
    /// Which generation (0 = low temperature, 1 = high) was shown as
    /// option 1 and option 2.
    pub option_order: [usize; 2],
    pub judge_reply: String,
    /// Both generations, low temperature first.
    pub generations: [Generation; 2],
}

impl PreferenceRecord {
    /// True when chosen and rejected are the two recorded generations,
    /// byte for byte, and differ.
    pub fn is_consistent(&self) -> bool {
        let hashes = [&self.generations[0].sha256, &self.generations[1].sha256];
        let (c, r) = (sha256_hex(&self.chosen), sha256_hex(&self.rejected));
        c != r
            && hashes.contains(&&c)
            && hashes.contains(&&r)
            && self.generations.iter().all(|g| sha256_hex(&g.text) == g.sha256)
    }
}

fn generation_request(input_text: &str, cfg: &CurationConfig, temperature: f64, seed: u64) -> Result<CompletionRequest, CurationError> {
    let mut b = bindings([("source", input_text)]);
    if let Some(ex) = &cfg.metadata_examples {
        b.insert("examples".into(), format!("\n\n{ex}"));
    }
    Ok(CompletionRequest::from_template(cfg.model.clone(), TemplateId::MetadataSynthesis, b)?
        .with_temperature(temperature)
        .with_seed(Some(seed)))
}

/// Builds one preference pair for `input_text`.
///
/// The option order shown to the judge is a fair coin drawn from `seed`.
/// Unparseable generations, identical generations and judge replies that
/// name no option discard the pair.
pub fn build_preference_pair(
    id: &str,
    input_text: &str,
    cfg: &CurationConfig,
    gw: &Gateway,
    seed: u64,
) -> Result<PreferenceRecord, CurationError> {
    let (t_low, t_high) = (cfg.t_low, cfg.t_high);
    if t_low == t_high {
        return Err(CurationError::InvalidConfig("preference temperatures must differ".into()));
    }
    let mut generations = Vec::with_capacity(2);
    for (slot, t) in [t_low, t_high].into_iter().enumerate() {
        let req = generation_request(input_text, cfg, t, derive_seed(seed, &["generation", &slot.to_string()]))?;
        let text = gw.complete(&cfg.backend, &req)?.text;
        generations.push(Generation { temperature: t, sha256: sha256_hex(&text), text });
    }
    let docs = generations
        .iter()
        .map(|g| parse_metadata(&g.text))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CurationError::UnparseableGeneration { id: id.to_string(), message: e.to_string() })?;
    if serialize_metadata(&docs[0]) == serialize_metadata(&docs[1]) {
        return Err(CurationError::IdenticalOutputs(id.to_string()));
    }

    let swap = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["option_order"])).gen_bool(0.5);
    let option_order = if swap { [1, 0] } else { [0, 1] };
    let b = bindings([
        ("input_text", input_text.to_string()),
        ("metadata1", generations[option_order[0]].text.clone()),
        ("metadata2", generations[option_order[1]].text.clone()),
    ]);
    let req = CompletionRequest::from_template(cfg.judge_model.clone(), TemplateId::PreferenceJudge, b)?
        .with_temperature(cfg.judge_temperature)
        .with_seed(Some(derive_seed(seed, &["judge"])));
    let reply = gw.complete(&cfg.judge_backend, &req)?.text;
    let Some(option) = option_choice(&reply, 2) else {
        log::warn!("record {id}: judge reply names no option, pair discarded");
        return Err(CurationError::UnparseableJudgeReply { id: id.to_string(), reply });
    };
    let winner = option_order[option - 1];
    let loser = 1 - winner;
    let [g0, g1]: [Generation; 2] = generations.try_into().expect("two generations");
    let gens = [g0, g1];
    Ok(PreferenceRecord {
        id: id.to_string(),
        prompt_text: input_text.to_string(),
        chosen: gens[winner].text.clone(),
        rejected: gens[loser].text.clone(),
        judge_model: cfg.judge_model.clone(),
        temperatures: (gens[winner].temperature, gens[loser].temperature),
        option_order,
        judge_reply: reply,
        generations: gens,
    })
}
