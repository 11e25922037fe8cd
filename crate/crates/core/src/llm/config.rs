use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, LlmError, MockBackend, MockReply, MockRule, RemoteBackend};

/// Backends declared by name, e.g.
///
/// ```toml
/// [backends.gpt35]
/// kind = "remote"
/// endpoint = "https://api.openai.com/v1/chat/completions"
/// model = "gpt-3.5-turbo"
/// api_key_env = "OPENAI_API_KEY"
///
/// [backends.offline]
/// kind = "mock"
/// [[backends.offline.rules]]
/// contains = ["Generate Cypher"]
/// reply = "MATCH (n:Formula) RETURN n.name LIMIT 3"
/// [[backends.offline.rules]]
/// digest = true
/// ```
///
/// The names `golden` and `replay` resolve to built-in scripts unless the
/// file overrides them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    #[serde(default)]
    pub backends: BTreeMap<String, BackendConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Remote {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the API key.
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
    Mock {
        #[serde(default)]
        rules: Vec<MockRuleConfig>,
        #[serde(default)]
        latency_ms: u64,
    },
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

/// One scripted rule; exactly one of `reply`, `digest` or `fail` is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRuleConfig {
    #[serde(default)]
    pub contains: Vec<String>,
    #[serde(default)]
    pub reply: Option<String>,
    #[serde(default)]
    pub digest: bool,
    /// `"timeout"` or `"remote"`.
    #[serde(default)]
    pub fail: Option<String>,
    #[serde(default)]
    pub times: Option<usize>,
}

impl MockRuleConfig {
    fn to_rule(&self) -> Result<MockRule, LlmError> {
        let reply = match (&self.reply, self.digest, &self.fail) {
            (Some(t), false, None) => MockReply::Text(t.clone()),
            (None, true, None) => MockReply::Digest,
            (None, false, Some(kind)) => MockReply::Fail(match kind.as_str() {
                "timeout" => LlmError::Timeout,
                "remote" => LlmError::RemoteError {
                    status: Some(500),
                    message: "scripted failure".into(),
                },
                other => return Err(LlmError::Config(format!("unknown failure kind {other:?}"))),
            }),
            _ => {
                return Err(LlmError::Config(
                    "a mock rule needs exactly one of reply, digest or fail".into(),
                ))
            }
        };
        Ok(MockRule {
            contains: self.contains.clone(),
            reply,
            times: self.times,
        })
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        match self {
            BackendConfig::Remote {
                endpoint,
                model,
                timeout_secs,
                ..
            } => {
                if endpoint.trim().is_empty() || model.trim().is_empty() {
                    return Err(LlmError::Config(
                        "remote backends need an endpoint and a model".into(),
                    ));
                }
                if !(*timeout_secs > 0.0 && timeout_secs.is_finite()) {
                    return Err(LlmError::Config("timeout must be positive".into()));
                }
                Ok(())
            }
            BackendConfig::Mock { rules, .. } => {
                rules.iter().try_for_each(|r| r.to_rule().map(|_| ()))
            }
        }
    }

    pub fn build(&self, name: &str) -> Result<Arc<dyn ChatBackend>, LlmError> {
        self.validate()?;
        Ok(match self {
            BackendConfig::Remote {
                endpoint,
                model,
                api_key_env,
                timeout_secs,
                max_retries,
            } => Arc::new(RemoteBackend::new(
                name,
                endpoint.clone(),
                model.clone(),
                api_key_env.clone(),
                Duration::from_secs_f64(*timeout_secs),
                *max_retries,
            )?),
            BackendConfig::Mock { rules, latency_ms } => {
                let rules = rules
                    .iter()
                    .map(MockRuleConfig::to_rule)
                    .collect::<Result<_, _>>()?;
                let mut m = MockBackend::new(name, rules);
                if *latency_ms > 0 {
                    m = m.with_latency(Duration::from_millis(*latency_ms));
                }
                Arc::new(m)
            }
        })
    }
}

impl LlmConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, LlmError> {
        let cfg: LlmConfig = toml::from_str(text).map_err(|e| LlmError::Config(e.to_string()))?;
        for (name, b) in &cfg.backends {
            b.validate()
                .map_err(|e| LlmError::Config(format!("backend {name:?}: {e}")))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Instantiate a declared backend, falling back to the built-in scripts.
    pub fn backend(&self, name: &str) -> Result<Arc<dyn ChatBackend>, LlmError> {
        if let Some(b) = self.backends.get(name) {
            return b.build(name);
        }
        match name {
            "golden" => Ok(Arc::new(crate::eval::golden_backend())),
            "replay" => Ok(Arc::new(crate::pipeline::replay_backend())),
            _ => Err(LlmError::Config(format!("no backend named {name:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, CompletionParams};

    const SAMPLE: &str = r#"
[backends.gpt35]
kind = "remote"
endpoint = "https://example.invalid/v1/chat/completions"
model = "gpt-3.5-turbo"
api_key_env = "OPENAI_API_KEY"

[backends.offline]
kind = "mock"
latency_ms = 1
[[backends.offline.rules]]
contains = ["Generate Cypher"]
reply = "MATCH (n:Formula) RETURN n.name LIMIT 3"
times = 1
[[backends.offline.rules]]
fail = "timeout"
times = 1
[[backends.offline.rules]]
digest = true
"#;

    #[test]
    fn parses_both_kinds() {
        let cfg = LlmConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.backends.len(), 2);
        match &cfg.backends["gpt35"] {
            BackendConfig::Remote {
                timeout_secs,
                max_retries,
                ..
            } => {
                assert_eq!((*timeout_secs, *max_retries), (60.0, 2));
            }
            other => panic!("{other:?}"),
        }
        let m = cfg.backend("offline").unwrap();
        let p = CompletionParams::default();
        let q = [ChatMessage::user("Generate Cypher please")];
        assert_eq!(
            m.complete(&q, &p).unwrap(),
            "MATCH (n:Formula) RETURN n.name LIMIT 3"
        );
        assert_eq!(m.complete(&q, &p), Err(LlmError::Timeout));
        cfg.backend("gpt35").unwrap();
    }

    #[test]
    fn literal_secrets_are_refused() {
        let text = "[backends.x]\nkind = \"remote\"\nendpoint = \"http://h\"\nmodel = \"m\"\napi_key = \"sk-123\"\n";
        assert!(LlmConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn remote_requires_endpoint_and_positive_timeout() {
        let no_model = "[backends.x]\nkind = \"remote\"\nendpoint = \"http://h\"\nmodel = \"\"\n";
        assert!(LlmConfig::from_toml_str(no_model).is_err());
        let zero = "[backends.x]\nkind = \"remote\"\nendpoint = \"http://h\"\nmodel = \"m\"\ntimeout_secs = 0\n";
        assert!(LlmConfig::from_toml_str(zero).is_err());
    }

    #[test]
    fn ambiguous_mock_rule_rejected() {
        let text =
            "[backends.x]\nkind = \"mock\"\n[[backends.x.rules]]\nreply = \"a\"\ndigest = true\n";
        assert!(LlmConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn builtins_resolve_and_unknown_names_fail() {
        let cfg = LlmConfig::default();
        assert_eq!(cfg.backend("golden").unwrap().name(), "golden");
        assert_eq!(cfg.backend("replay").unwrap().name(), "replay");
        assert!(cfg.backend("nope").is_err());
    }
}
