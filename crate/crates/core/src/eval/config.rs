//! Batch run configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::DEFAULT_BUCKET_EDGES;
use super::EvalError;
use crate::backend::{CompletionParams, RemoteConfig};
use crate::orchestrator::{Limits, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Llm,
    Oracle,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Llm => "llm",
            PolicyKind::Oracle => "oracle",
        }
    }
}

/// Either `path`, or `size` (plus an optional `seed`, defaulting to the run
/// seed) for a generated catalog.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSource {
    pub path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub size: Option<usize>,
}

/// Either `path`, or `count` (plus an optional `seed`) for generated goals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSource {
    pub path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Remote {
        #[serde(default)]
        remote: RemoteConfig,
    },
    Replay {
        transcript: PathBuf,
    },
    /// Remote calls, recorded to the transcript.
    Record {
        transcript: PathBuf,
        #[serde(default)]
        remote: RemoteConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    pub policy: PolicyKind,
    pub worker_count: usize,
    pub output_dir: PathBuf,
    /// Template directory; the built-in set when absent.
    pub templates: Option<PathBuf>,
    pub bucket_edges: Vec<usize>,
    pub catalog: CatalogSource,
    pub goals: GoalSource,
    pub limits: Limits,
    pub completion: CompletionParams,
    pub backend: Option<BackendConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            mode: Mode::Ash,
            policy: PolicyKind::Llm,
            worker_count: 1,
            output_dir: PathBuf::from("out"),
            templates: None,
            bucket_edges: DEFAULT_BUCKET_EDGES.to_vec(),
            catalog: CatalogSource::default(),
            goals: GoalSource::default(),
            limits: Limits::default(),
            completion: CompletionParams::default(),
            backend: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that can be checked without touching the network.
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.worker_count == 0 {
            return bad("worker_count must be >= 1".into());
        }
        self.limits.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        self.completion.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        super::report::check_edges(&self.bucket_edges).map_err(|e| EvalError::Config(e.to_string()))?;
        match (&self.catalog.path, self.catalog.size) {
            (Some(_), Some(_)) => return bad("catalog: give either path or size, not both".into()),
            (None, None) => return bad("catalog: path or size is required".into()),
            (None, Some(0)) => return bad("catalog: size must be >= 1".into()),
            _ => {}
        }
        match (&self.goals.path, self.goals.count) {
            (Some(_), Some(_)) => return bad("goals: give either path or count, not both".into()),
            (None, None) => return bad("goals: path or count is required".into()),
            _ => {}
        }
        for p in [&self.catalog.path, &self.goals.path, &self.templates].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        let needs_backend = self.policy == PolicyKind::Llm || self.mode.summarizes();
        match &self.backend {
            None if needs_backend => {
                bad(format!("mode {} with policy {} needs a [backend] section", self.mode, self.policy.as_str()))
            }
            Some(BackendConfig::Replay { transcript }) if !transcript.exists() => {
                bad(format!("transcript {} does not exist", transcript.display()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 3
            mode = "act-ash"
            policy = "oracle"
            worker_count = 4
            [catalog]
            size = 50
            [goals]
            count = 10
            [limits]
            max_steps = 15
            [backend]
            kind = "remote"
            [backend.remote]
            base_url = "http://localhost:9"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::ActAsh);
        assert_eq!(cfg.limits.max_steps, 15);
        assert_eq!(cfg.limits.max_invalid_streak, 5);
        assert!(matches!(cfg.backend, Some(BackendConfig::Remote { .. })));
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        let base = RunConfig {
            catalog: CatalogSource { size: Some(5), ..Default::default() },
            goals: GoalSource { count: Some(2), ..Default::default() },
            policy: PolicyKind::Oracle,
            mode: Mode::Act,
            ..RunConfig::default()
        };
        base.validate().unwrap();
        let mut c = base.clone();
        c.worker_count = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.mode = Mode::Ash;
        assert!(c.validate().is_err(), "summarizing mode without backend");
        let mut c = base.clone();
        c.goals.path = Some("/nonexistent/g.json".into());
        c.goals.count = None;
        assert!(c.validate().is_err());
    }
}
