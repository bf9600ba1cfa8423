//! Versioned prompt catalog. Bodies are asset files; `{{name}}` marks a
//! required binding and `{{?name}}` an optional one that renders empty when
//! unbound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::GatewayError;

pub const CATALOG_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    ComplexityFilter,
    TextSynthesis,
    MetadataSynthesis,
    PreferenceJudge,
    Ranker,
    Coder,
    Judge,
    Generic,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::ComplexityFilter,
        TemplateId::TextSynthesis,
        TemplateId::MetadataSynthesis,
        TemplateId::PreferenceJudge,
        TemplateId::Ranker,
        TemplateId::Coder,
        TemplateId::Judge,
        TemplateId::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ComplexityFilter => "complexity_filter",
            TemplateId::TextSynthesis => "text_synthesis",
            TemplateId::MetadataSynthesis => "metadata_synthesis",
            TemplateId::PreferenceJudge => "preference_judge",
            TemplateId::Ranker => "ranker",
            TemplateId::Coder => "coder",
            TemplateId::Judge => "judge",
            TemplateId::Generic => "generic",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateId::ComplexityFilter => include_str!("../../prompts/v1/complexity_filter.txt"),
            TemplateId::TextSynthesis => include_str!("../../prompts/v1/text_synthesis.txt"),
            TemplateId::MetadataSynthesis => include_str!("../../prompts/v1/metadata_synthesis.txt"),
            TemplateId::PreferenceJudge => include_str!("../../prompts/v1/preference_judge.txt"),
            TemplateId::Ranker => include_str!("../../prompts/v1/ranker.txt"),
            TemplateId::Coder => include_str!("../../prompts/v1/coder.txt"),
            TemplateId::Judge => include_str!("../../prompts/v1/judge.txt"),
            TemplateId::Generic => include_str!("../../prompts/v1/generic.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub required_bindings: BTreeSet<String>,
    pub optional_bindings: BTreeSet<String>,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{(\??)([a-z_0-9]+)\}\}").unwrap())
}

pub fn template(id: TemplateId) -> PromptTemplate {
    let body = id.body();
    let mut required_bindings = BTreeSet::new();
    let mut optional_bindings = BTreeSet::new();
    for c in placeholder_re().captures_iter(body) {
        if c[1].is_empty() {
            required_bindings.insert(c[2].to_string());
        } else {
            optional_bindings.insert(c[2].to_string());
        }
    }
    PromptTemplate {
        id,
        body,
        required_bindings,
        optional_bindings,
    }
}

impl PromptTemplate {
    /// Substitutes in one pass; bound values are never re-scanned, so a
    /// value containing `{{x}}` is inserted literally.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        if let Some(missing) = self.required_bindings.iter().find(|k| !bindings.contains_key(*k)) {
            return Err(GatewayError::MissingBinding(missing.clone()));
        }
        Ok(placeholder_re()
            .replace_all(self.body, |c: &Captures| bindings.get(&c[2]).cloned().unwrap_or_default())
            .into_owned())
    }
}

pub fn render_prompt(id: TemplateId, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
    template(id).render(bindings)
}

/// Builds a binding map from string pairs.
pub fn bindings<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranker_contains_options_verbatim() {
        let out = render_prompt(
            TemplateId::Ranker,
            &bindings([("input_text", "TXT"), ("option_1", "{\"a\":1}"), ("option_2", "B-opt"), ("option_3", "C-opt")]),
        )
        .unwrap();
        for needle in ["Input_text_clean: TXT.", "{\"a\":1}", "B-opt", "C-opt"] {
            assert!(out.contains(needle), "{needle}");
        }
        assert!(!placeholder_re().is_match(&out));
    }

    #[test]
    fn coder_contains_metadata_once() {
        let out = render_prompt(TemplateId::Coder, &bindings([("metadata", "META-BLOB")])).unwrap();
        assert_eq!(out.matches("META-BLOB").count(), 1);
        assert!(!out.contains("{{"));
    }

    #[test]
    fn judge_missing_code() {
        let err = render_prompt(TemplateId::Judge, &bindings([("metadata", "m")])).unwrap_err();
        assert_eq!(err, GatewayError::MissingBinding("code".into()));
    }

    #[test]
    fn bound_values_are_not_rescanned() {
        let out = render_prompt(TemplateId::Generic, &bindings([("instruction", "{{input}}"), ("input", "x")])).unwrap();
        assert_eq!(out, "{{input}}\n\nx\n");
    }

    #[test]
    fn binding_sets() {
        let t = template(TemplateId::TextSynthesis);
        assert_eq!(t.required_bindings, BTreeSet::from(["infographic".to_string()]));
        assert!(t.optional_bindings.contains("retry_note"));
        for id in TemplateId::ALL {
            assert_eq!(id.as_str().parse::<TemplateId>().unwrap(), id);
        }
    }
}
