use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// Server settings, read from TOML and then overridden by `TOPOKG_*`
/// environment variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    /// Outstanding chat jobs (queued plus running) before requests get 429.
    pub queue_capacity: usize,
    pub workers: usize,
    pub backend: String,
    /// TOML file declaring LLM backends; built-in scripts only when unset.
    pub llm_config: Option<PathBuf>,
    /// Graph snapshot.
    pub graph: Option<PathBuf>,
    /// Materials JSONL, used when no snapshot is given.
    pub materials: Option<PathBuf>,
    pub index: Option<PathBuf>,
    /// Bundled data set used for whatever the paths above leave out:
    /// "demo" or "replay".
    pub fixture: String,
    pub sessions_file: Option<PathBuf>,
    pub session_limit: usize,
    pub job_timeout_secs: f64,
    pub trace_limit: usize,
    pub recommended_questions: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:8000".into(),
            queue_capacity: 64,
            workers: 2,
            backend: "golden".into(),
            llm_config: None,
            graph: None,
            materials: None,
            index: None,
            fixture: "demo".into(),
            sessions_file: None,
            session_limit: 100,
            job_timeout_secs: 120.0,
            trace_limit: 1000,
            recommended_questions: default_questions(),
        }
    }
}

fn default_questions() -> Vec<String> {
    vec![
        topokg_core::fixtures::REPLAY_QUESTION.to_string(),
        "Which space group does Bi2Se3 belong to?".into(),
        "List topological insulators whose SOC gap exceeds 0.1 eV.".into(),
        "How many phonon Weyl points does TaAs have?".into(),
        "Which materials crystallize in space group P6_3/mmc?".into(),
    ]
}

impl ServerConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let cfg: ServerConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.queue_capacity == 0 {
            bail!("queue_capacity must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.session_limit == 0 {
            bail!("session_limit must be at least 1");
        }
        if !(self.job_timeout_secs > 0.0 && self.job_timeout_secs.is_finite()) {
            bail!("job_timeout_secs must be positive");
        }
        if !matches!(self.fixture.as_str(), "demo" | "replay") {
            bail!(
                "fixture must be \"demo\" or \"replay\", got {:?}",
                self.fixture
            );
        }
        Ok(())
    }

    /// Apply `TOPOKG_LISTEN`, `TOPOKG_QUEUE_CAPACITY`, `TOPOKG_WORKERS`,
    /// `TOPOKG_BACKEND`, `TOPOKG_LLM_CONFIG`, `TOPOKG_GRAPH`,
    /// `TOPOKG_MATERIALS` and `TOPOKG_INDEX`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        if let Some(v) = lookup("TOPOKG_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = lookup("TOPOKG_QUEUE_CAPACITY") {
            self.queue_capacity = v.parse().context("TOPOKG_QUEUE_CAPACITY")?;
        }
        if let Some(v) = lookup("TOPOKG_WORKERS") {
            self.workers = v.parse().context("TOPOKG_WORKERS")?;
        }
        if let Some(v) = lookup("TOPOKG_BACKEND") {
            self.backend = v;
        }
        for (key, slot) in [
            ("TOPOKG_LLM_CONFIG", &mut self.llm_config),
            ("TOPOKG_GRAPH", &mut self.graph),
            ("TOPOKG_MATERIALS", &mut self.materials),
            ("TOPOKG_INDEX", &mut self.index),
        ] {
            if let Some(v) = lookup(key) {
                *slot = Some(PathBuf::from(v));
            }
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = ServerConfig::from_toml_str("workers = 4\nbackend = \"replay\"").unwrap();
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.queue_capacity, 64);
        assert_eq!(cfg.session_limit, 100);
        assert_eq!(cfg.backend, "replay");
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ServerConfig::from_toml_str("queue_capacity = 0").is_err());
        assert!(ServerConfig::from_toml_str("fixture = \"full\"").is_err());
        assert!(ServerConfig::from_toml_str("listen_addr = \"x\"").is_err());
    }

    #[test]
    fn env_overrides_file() {
        let mut cfg = ServerConfig::default();
        cfg.apply_env(|k| match k {
            "TOPOKG_WORKERS" => Some("3".into()),
            "TOPOKG_GRAPH" => Some("/tmp/g.snap".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.graph.as_deref(), Some(Path::new("/tmp/g.snap")));
        assert!(cfg
            .apply_env(|k| (k == "TOPOKG_WORKERS").then(|| "two".into()))
            .is_err());
    }
}
