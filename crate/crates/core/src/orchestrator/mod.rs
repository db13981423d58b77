//! Episode loop.
//!
//! At every step the current observation is (in summarizing modes) condensed
//! by a stateless summarizer call over `(goal, previous action, observation)`
//! and appended to the actor-visible history; the policy then picks the next
//! action from that history alone. Think steps get the `OK.` response and are
//! never summarized.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::backend::BackendError;
use crate::env::{self, Catalog, EnvError, GoalSpec, Observation};
use crate::prompting::{parse_actor_output, HistoryEntry, PromptError};

mod oracle;
mod policy;
mod summarizer;

pub use crate::prompting::Mode;
pub use oracle::OraclePolicy;
pub use policy::{Decision, LlmPolicy, Policy};
pub use summarizer::{summarize, Summarizer, Summary, SummaryCache};

/// Consecutive unparseable completions that end an episode.
pub const MAX_UNPARSEABLE: usize = 3;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("no product found for query {query:?}")]
    NoProductFound { query: String },
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("{0}")]
    Policy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_steps: usize,
    pub max_invalid_streak: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: 20, max_invalid_streak: 5 }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.max_steps == 0 || self.max_invalid_streak == 0 {
            return Err(OrchestratorError::InvalidLimits(format!(
                "max_steps and max_invalid_streak must be >= 1 (got {} and {})",
                self.max_steps, self.max_invalid_streak
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    /// The observation the action responded to.
    pub raw_observation: String,
    pub summarized_observation: Option<String>,
    pub action: Action,
    pub valid: bool,
    pub summarizer_prompt_digest: Option<String>,
    pub actor_prompt_digest: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Purchased,
    StepLimit,
    InvalidStreak,
    PolicyError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Purchased => "Purchased",
            Termination::StepLimit => "StepLimit",
            Termination::InvalidStreak => "InvalidStreak",
            Termination::PolicyError => "PolicyError",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// Position of the goal in its goal list.
    pub goal_id: usize,
    pub goal: GoalSpec,
    pub mode: Mode,
    pub limits: Limits,
    pub steps: Vec<StepRecord>,
    /// Observation returned by the last step (the Done page on purchase).
    pub final_observation: Option<String>,
    pub termination: Termination,
    pub score: f64,
    pub step_count: usize,
    /// Set for `PolicyError` terminations.
    pub error: Option<String>,
}

impl Episode {
    pub fn is_success(&self) -> bool {
        self.score == 1.0
    }

    /// True when the last `n` actions exist and were all invalid.
    pub fn ends_with_invalid_run(&self, n: usize) -> bool {
        self.steps.len() >= n && self.steps[self.steps.len() - n..].iter().all(|s| !s.valid)
    }
}

/// Runs one episode. Failures never escape: they end the episode with
/// `Termination::PolicyError` and a message in `Episode::error`.
///
/// `summarizer` is required for summarizing modes and ignored otherwise.
pub fn run_episode(
    catalog: &Catalog,
    goal: &GoalSpec,
    mode: Mode,
    policy: &mut dyn Policy,
    summarizer: Option<&mut Summarizer>,
    limits: &Limits,
) -> Episode {
    run_episode_observed(catalog, goal, mode, policy, summarizer, limits, &mut |_| {})
}

/// `run_episode` that also reports each step as soon as it is taken.
pub fn run_episode_observed(
    catalog: &Catalog,
    goal: &GoalSpec,
    mode: Mode,
    policy: &mut dyn Policy,
    summarizer: Option<&mut Summarizer>,
    limits: &Limits,
    observer: &mut dyn FnMut(&StepRecord),
) -> Episode {
    let mut ep = Episode {
        goal_id: 0,
        goal: goal.clone(),
        mode,
        limits: *limits,
        steps: Vec::new(),
        final_observation: None,
        termination: Termination::PolicyError,
        score: 0.0,
        step_count: 0,
        error: None,
    };
    let result = drive(&mut ep, catalog, goal, mode, policy, summarizer, limits, observer);
    if let Err(e) = result {
        ep.termination = Termination::PolicyError;
        ep.error = Some(e.to_string());
    }
    ep.step_count = ep.steps.len();
    if ep.termination != Termination::Purchased {
        ep.score = 0.0;
    }
    ep
}

#[allow(clippy::too_many_arguments)]
fn drive(
    ep: &mut Episode,
    catalog: &Catalog,
    goal: &GoalSpec,
    mode: Mode,
    policy: &mut dyn Policy,
    mut summarizer: Option<&mut Summarizer>,
    limits: &Limits,
    observer: &mut dyn FnMut(&StepRecord),
) -> Result<(), OrchestratorError> {
    limits.validate()?;
    if mode.summarizes() && summarizer.is_none() {
        return Err(OrchestratorError::Policy(format!("mode {mode} requires a summarizer")));
    }
    let (mut state, mut page) = env::reset(catalog, goal);
    // What the last step returned; differs from `page` after a think step.
    let mut shown: Observation = page.clone();
    let mut shown_is_think = false;
    let mut prev: Option<Action> = None;
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut streak = 0;

    loop {
        let (summary, summary_digest) = match summarizer.as_deref_mut() {
            Some(s) if mode.summarizes() && !shown_is_think => {
                let out = s.summarize(goal, prev.as_ref(), &shown)?;
                (Some(out.observation.text), Some(out.prompt_digest))
            }
            _ => (None, None),
        };
        history.push(HistoryEntry {
            action: prev.clone(),
            observation_text: summary.clone().unwrap_or_else(|| shown.text.clone()),
        });

        let mut unparseable = 0;
        let (action, actor_digest) = loop {
            let decision = policy.decide(goal, &history, &page)?;
            match parse_actor_output(&decision.raw) {
                Ok(a) => break (a, decision.prompt_digest),
                Err(e) => {
                    unparseable += 1;
                    if unparseable >= MAX_UNPARSEABLE {
                        return Err(OrchestratorError::Policy(format!(
                            "{MAX_UNPARSEABLE} consecutive unparseable outputs; last: {e}"
                        )));
                    }
                }
            }
        };

        let outcome = env::step(&state, &action, catalog, goal)?;
        ep.steps.push(StepRecord {
            index: ep.steps.len(),
            raw_observation: shown.text.clone(),
            summarized_observation: summary,
            action: action.clone(),
            valid: outcome.valid,
            summarizer_prompt_digest: summary_digest,
            actor_prompt_digest: actor_digest,
        });
        observer(ep.steps.last().expect("just pushed"));
        ep.final_observation = Some(outcome.observation.text.clone());

        if outcome.done {
            ep.termination = Termination::Purchased;
            ep.score = outcome.score.unwrap_or(0.0);
            return Ok(());
        }
        streak = if outcome.valid { 0 } else { streak + 1 };
        if streak >= limits.max_invalid_streak {
            ep.termination = Termination::InvalidStreak;
            return Ok(());
        }
        if ep.steps.len() >= limits.max_steps {
            ep.termination = Termination::StepLimit;
            return Ok(());
        }

        shown_is_think = action.is_think();
        if !shown_is_think {
            page = outcome.observation.clone();
        }
        shown = outcome.observation;
        state = outcome.next_state;
        prev = Some(action);
    }
}
