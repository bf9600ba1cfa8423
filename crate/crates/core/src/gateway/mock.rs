use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{rough_tokens, ChatBackend, Completion, CompletionRequest, GatewayError, Usage};

/// A canned reply: either bare text or text with explicit usage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Text(String),
    Full {
        text: String,
        #[serde(default)]
        usage: Option<Usage>,
    },
}

impl ScriptEntry {
    fn text(&self) -> &str {
        match self {
            ScriptEntry::Text(t) | ScriptEntry::Full { text: t, .. } => t,
        }
    }
}

impl From<&str> for ScriptEntry {
    fn from(s: &str) -> Self {
        ScriptEntry::Text(s.to_string())
    }
}

/// Offline backend answering from a fixed script.
///
/// Keys are tried in order: the exact request fingerprint, then
/// `template:<id>@<temperature>`, then `template:<id>`, then `*`. The reply
/// is a pure function of the request, so repeated runs are identical.
#[derive(Debug, Clone)]
pub struct ScriptedMock {
    script: BTreeMap<String, ScriptEntry>,
}

impl ScriptedMock {
    pub fn new(script: BTreeMap<String, ScriptEntry>) -> Self {
        ScriptedMock { script }
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        ScriptedMock::new(pairs.into_iter().map(|(k, v)| (k.into(), ScriptEntry::Text(v.into()))).collect())
    }

    pub fn lookup_keys(req: &CompletionRequest) -> Vec<String> {
        let mut keys = vec![req.fingerprint()];
        if let Some(tag) = &req.template {
            keys.push(format!("template:{}@{}", tag.id, req.temperature));
            keys.push(format!("template:{}", tag.id));
        }
        keys.push("*".to_string());
        keys
    }
}

impl ChatBackend for ScriptedMock {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, GatewayError> {
        let keys = Self::lookup_keys(req);
        let entry = keys
            .iter()
            .find_map(|k| self.script.get(k))
            .ok_or_else(|| GatewayError::NoScriptEntry(keys[0].clone()))?;
        let usage = match entry {
            ScriptEntry::Full { usage: Some(u), .. } => *u,
            _ => Usage {
                prompt_tokens: req.messages.iter().map(|m| rough_tokens(&m.content)).sum(),
                completion_tokens: rough_tokens(entry.text()),
            },
        };
        Ok(Completion {
            text: entry.text().to_string(),
            model_id: req.model_id.clone(),
            usage,
            latency_ms: 0,
        })
    }

    fn is_mock(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::super::{bindings, ChatMessage, TemplateId};
    use super::*;

    #[test]
    fn exact_fingerprint_echo() {
        let req = CompletionRequest::new("m", vec![ChatMessage::user("X")]);
        let mock = ScriptedMock::from_pairs([(req.fingerprint(), "ok")]);
        let c = mock.complete(&req).unwrap();
        assert_eq!(c.text, "ok");
        assert_eq!(mock.complete(&req).unwrap(), c);
    }

    #[test]
    fn unknown_request() {
        let mock = ScriptedMock::from_pairs([("nothing", "x")]);
        let req = CompletionRequest::new("m", vec![ChatMessage::user("X")]);
        assert_eq!(mock.complete(&req).unwrap_err(), GatewayError::NoScriptEntry(req.fingerprint()));
    }

    #[test]
    fn fallback_key_order() {
        let req = CompletionRequest::from_template("m", TemplateId::Generic, bindings([("instruction", "i"), ("input", "x")]))
            .unwrap()
            .with_temperature(0.2);
        let mock = ScriptedMock::from_pairs([("template:generic@0.2", "cold"), ("template:generic", "any"), ("*", "star")]);
        assert_eq!(mock.complete(&req).unwrap().text, "cold");
        assert_eq!(mock.complete(&req.clone().with_temperature(0.9)).unwrap().text, "any");
        let plain = CompletionRequest::new("m", vec![ChatMessage::user("q")]);
        assert_eq!(mock.complete(&plain).unwrap().text, "star");
    }

    #[test]
    fn entries_deserialize_both_shapes() {
        let s: BTreeMap<String, ScriptEntry> =
            serde_json::from_str(r#"{"a": "t", "b": {"text": "u", "usage": {"prompt_tokens": 1, "completion_tokens": 2}}}"#)
                .unwrap();
        assert_eq!(s["a"], ScriptEntry::Text("t".into()));
        assert!(matches!(&s["b"], ScriptEntry::Full { usage: Some(_), .. }));
    }
}
