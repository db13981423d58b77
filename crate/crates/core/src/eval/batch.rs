use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use super::config::{BackendConfig, PolicyKind, RunConfig};
use super::log::{write_trajectory_log, TRAJECTORY_FILE};
use super::report::{aggregate, write_report, AggregateReport};
use super::EvalError;
use crate::backend::{
    CompletionBackend, CompletionParams, RecordingBackend, RemoteBackend, ReplayBackend, TranscriptStore,
};
use crate::env::{generate_catalog, generate_goals, load_catalog, load_goals, Catalog, GoalSpec};
use crate::orchestrator::{run_episode, Episode, Limits, LlmPolicy, Mode, OraclePolicy, Policy, Summarizer};
use crate::prompting::TemplateSet;

/// Everything a batch needs, resolved and shared read-only across workers.
#[derive(Clone)]
pub struct Batch {
    pub catalog: Arc<Catalog>,
    pub goals: Vec<GoalSpec>,
    pub mode: Mode,
    pub policy: PolicyKind,
    pub limits: Limits,
    pub templates: Arc<TemplateSet>,
    pub backend: Option<Arc<dyn CompletionBackend>>,
    pub params: CompletionParams,
    pub worker_count: usize,
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn CompletionBackend>, EvalError> {
    let cfg_err = |e: crate::backend::BackendError| EvalError::Config(e.to_string());
    Ok(match cfg {
        BackendConfig::Remote { remote } => Arc::new(RemoteBackend::new(remote).map_err(cfg_err)?),
        BackendConfig::Replay { transcript } => Arc::new(ReplayBackend::open(transcript).map_err(cfg_err)?),
        BackendConfig::Record { transcript, remote } => {
            let inner: Arc<dyn CompletionBackend> = Arc::new(RemoteBackend::new(remote).map_err(cfg_err)?);
            let store = Arc::new(TranscriptStore::open_record(transcript).map_err(cfg_err)?);
            Arc::new(RecordingBackend::new(inner, store))
        }
    })
}

impl Batch {
    /// Loads or generates the catalog and goals, templates and backend.
    pub fn from_config(cfg: &RunConfig) -> Result<Batch, EvalError> {
        cfg.validate()?;
        let catalog = match (&cfg.catalog.path, cfg.catalog.size) {
            (Some(p), _) => load_catalog(p).map_err(|e| EvalError::Config(e.to_string()))?,
            (None, Some(n)) => generate_catalog(cfg.catalog.seed.unwrap_or(cfg.seed), n),
            (None, None) => unreachable!("validated"),
        };
        let goals = match (&cfg.goals.path, cfg.goals.count) {
            (Some(p), _) => load_goals(p).map_err(|e| EvalError::Config(e.to_string()))?,
            (None, Some(n)) => generate_goals(&catalog, cfg.goals.seed.unwrap_or(cfg.seed), n)
                .map_err(|e| EvalError::Config(e.to_string()))?,
            (None, None) => unreachable!("validated"),
        };
        let templates = match &cfg.templates {
            Some(dir) => TemplateSet::load_dir(dir).map_err(|e| EvalError::Config(e.to_string()))?,
            None => TemplateSet::builtin(),
        };
        let backend = cfg.backend.as_ref().map(build_backend).transpose()?;
        Ok(Batch {
            catalog: Arc::new(catalog),
            goals,
            mode: cfg.mode,
            policy: cfg.policy,
            limits: cfg.limits,
            templates: Arc::new(templates),
            backend,
            params: cfg.completion.clone(),
            worker_count: cfg.worker_count,
        })
    }

    /// Runs goal `index` with a fresh policy, environment and summary cache.
    pub fn run_one(&self, index: usize) -> Episode {
        let goal = &self.goals[index];
        let mut policy: Box<dyn Policy> = match (self.policy, &self.backend) {
            (PolicyKind::Oracle, _) => Box::new(OraclePolicy::new(&self.catalog, goal)),
            (PolicyKind::Llm, Some(b)) => {
                Box::new(LlmPolicy::new(self.mode, self.templates.clone(), b.clone(), self.params.clone()))
            }
            (PolicyKind::Llm, None) => {
                Box::new(|_: &GoalSpec, _: &[_], _: &_| -> Result<_, crate::orchestrator::OrchestratorError> {
                    Err(crate::orchestrator::OrchestratorError::Policy("llm policy without a backend".into()))
                })
            }
        };
        let mut summarizer = self
            .backend
            .as_ref()
            .filter(|_| self.mode.summarizes())
            .map(|b| Summarizer::new(self.templates.clone(), b.clone(), self.params.clone()));
        let mut ep = run_episode(&self.catalog, goal, self.mode, policy.as_mut(), summarizer.as_mut(), &self.limits);
        ep.goal_id = index;
        ep
    }

    /// All goals in order, on up to `worker_count` threads.
    pub fn run(&self) -> Vec<Episode> {
        let n = self.goals.len();
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Episode>>> = Mutex::new(vec![None; n]);
        thread::scope(|s| {
            for _ in 0..self.worker_count.clamp(1, n.max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let ep = self.run_one(i);
                    slots.lock().expect("poisoned")[i] = Some(ep);
                });
            }
        });
        slots.into_inner().expect("poisoned").into_iter().map(|e| e.expect("every slot filled")).collect()
    }
}

/// Runs every goal, then writes the trajectory log and report files into
/// `config.output_dir`.
pub fn run_batch(config: &RunConfig) -> Result<(Vec<Episode>, AggregateReport), EvalError> {
    let batch = Batch::from_config(config)?;
    let episodes = batch.run();
    let report = aggregate(&episodes, &config.bucket_edges)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| EvalError::io(&config.output_dir, e))?;
    write_trajectory_log(&episodes, &config.output_dir.join(TRAJECTORY_FILE))?;
    write_report(&report, &episodes, &config.output_dir)?;
    Ok((episodes, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::config::{CatalogSource, GoalSource};

    #[test]
    fn oracle_batch_keeps_goal_order() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            mode: Mode::Act,
            policy: PolicyKind::Oracle,
            worker_count: 3,
            output_dir: dir.path().to_path_buf(),
            catalog: CatalogSource { size: Some(60), seed: Some(2), path: None },
            goals: GoalSource { count: Some(10), seed: Some(2), path: None },
            ..RunConfig::default()
        };
        let (eps, report) = run_batch(&cfg).unwrap();
        assert_eq!(eps.iter().map(|e| e.goal_id).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
        assert_eq!(report.success_rate_pct, 100.0);
        assert_eq!(report.avg_score, 100.0);
        for f in [TRAJECTORY_FILE, "report.json", "episodes.csv", "buckets.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }
}
