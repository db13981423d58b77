use std::sync::Arc;

use crate::backend::{digest, CompletionBackend, CompletionParams};
use crate::env::{GoalSpec, Observation};
use crate::prompting::{build_actor_prompt, HistoryEntry, Mode, TemplateSet};

use super::OrchestratorError;

/// A raw action string plus the digest of the prompt that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub raw: String,
    pub prompt_digest: Option<String>,
}

impl Decision {
    pub fn raw(raw: impl Into<String>) -> Self {
        Decision { raw: raw.into(), prompt_digest: None }
    }
}

/// Chooses the next action. `history` is the actor-visible history ending
/// with the current (possibly summarized) observation; `page` is the current
/// raw page, which think steps do not replace.
pub trait Policy {
    fn decide(
        &mut self,
        goal: &GoalSpec,
        history: &[HistoryEntry],
        page: &Observation,
    ) -> Result<Decision, OrchestratorError>;
}

impl<F> Policy for F
where
    F: FnMut(&GoalSpec, &[HistoryEntry], &Observation) -> Result<Decision, OrchestratorError>,
{
    fn decide(
        &mut self,
        goal: &GoalSpec,
        history: &[HistoryEntry],
        page: &Observation,
    ) -> Result<Decision, OrchestratorError> {
        self(goal, history, page)
    }
}

/// Actor prompt rendered from the history, answered by a completion backend.
pub struct LlmPolicy {
    mode: Mode,
    templates: Arc<TemplateSet>,
    backend: Arc<dyn CompletionBackend>,
    params: CompletionParams,
}

impl LlmPolicy {
    pub fn new(
        mode: Mode,
        templates: Arc<TemplateSet>,
        backend: Arc<dyn CompletionBackend>,
        params: CompletionParams,
    ) -> Self {
        LlmPolicy { mode, templates, backend, params }
    }
}

impl Policy for LlmPolicy {
    fn decide(
        &mut self,
        goal: &GoalSpec,
        history: &[HistoryEntry],
        _page: &Observation,
    ) -> Result<Decision, OrchestratorError> {
        let prompt = build_actor_prompt(goal, history, &self.templates, self.mode)?;
        let d = digest(&prompt, &self.params);
        let raw = self.backend.complete(&prompt, &self.params)?;
        Ok(Decision { raw, prompt_digest: Some(d) })
    }
}
