use std::collections::HashMap;
use std::sync::Arc;

use crate::action::Action;
use crate::backend::{digest, CompletionBackend, CompletionParams};
use crate::env::{GoalSpec, Observation};
use crate::prompting::{build_summarizer_prompt, parse_summary, SummarizedObservation, TemplateSet};

use super::OrchestratorError;

/// Summaries keyed by summarizer prompt digest.
pub type SummaryCache = HashMap<String, SummarizedObservation>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub observation: SummarizedObservation,
    pub prompt_digest: String,
    pub cache_hit: bool,
}

/// Condenses one observation. Cached entries are returned verbatim; misses
/// call the backend and are cached only when the completion parses.
pub fn summarize(
    goal: &GoalSpec,
    prev_action: Option<&Action>,
    obs: &Observation,
    templates: &TemplateSet,
    backend: &dyn CompletionBackend,
    params: &CompletionParams,
    cache: &mut SummaryCache,
) -> Result<Summary, OrchestratorError> {
    let prompt = build_summarizer_prompt(goal, prev_action, obs, templates)?;
    let d = digest(&prompt, params);
    if let Some(hit) = cache.get(&d) {
        return Ok(Summary { observation: hit.clone(), prompt_digest: d, cache_hit: true });
    }
    let completion = backend.complete(&prompt, params)?;
    let text = parse_summary(&completion)?;
    let observation = SummarizedObservation::new(text, goal, prev_action, obs);
    cache.insert(d.clone(), observation.clone());
    Ok(Summary { observation, prompt_digest: d, cache_hit: false })
}

/// Summarizer bound to a backend, with its own cache.
pub struct Summarizer {
    templates: Arc<TemplateSet>,
    backend: Arc<dyn CompletionBackend>,
    params: CompletionParams,
    cache: SummaryCache,
    backend_calls: usize,
}

impl Summarizer {
    pub fn new(templates: Arc<TemplateSet>, backend: Arc<dyn CompletionBackend>, params: CompletionParams) -> Self {
        Summarizer { templates, backend, params, cache: SummaryCache::new(), backend_calls: 0 }
    }

    pub fn summarize(
        &mut self,
        goal: &GoalSpec,
        prev_action: Option<&Action>,
        obs: &Observation,
    ) -> Result<Summary, OrchestratorError> {
        let out = summarize(goal, prev_action, obs, &self.templates, &*self.backend, &self.params, &mut self.cache)?;
        if !out.cache_hit {
            self.backend_calls += 1;
        }
        Ok(out)
    }

    pub fn backend_calls(&self) -> usize {
        self.backend_calls
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use crate::env::{generate_catalog, goals::generate_goals, reset};
    use crate::prompting::PromptError;

    fn summarizer(backend: Arc<ScriptedBackend>) -> Summarizer {
        Summarizer::new(Arc::new(TemplateSet::builtin()), backend, CompletionParams::default())
    }

    #[test]
    fn cache_keys_on_prev_action() {
        let c = generate_catalog(1, 20);
        let g = generate_goals(&c, 1, 1).unwrap().remove(0);
        let (_, obs) = reset(&c, &g);
        let backend = Arc::new(ScriptedBackend::responder(|_| "Summary: search page".into()));
        let mut s = summarizer(backend.clone());
        let a = s.summarize(&g, None, &obs).unwrap();
        let b = s.summarize(&g, None, &obs).unwrap();
        assert!(!a.cache_hit && b.cache_hit);
        assert_eq!(a.observation, b.observation);
        assert_eq!(backend.calls(), 1);
        let back = Action::click("Back to Search");
        s.summarize(&g, Some(&back), &obs).unwrap();
        assert_eq!(backend.calls(), 2);
        assert_eq!(s.backend_calls(), 2);
    }

    #[test]
    fn done_page_is_rejected_before_calling() {
        let c = generate_catalog(1, 20);
        let g = generate_goals(&c, 1, 1).unwrap().remove(0);
        let (_, mut obs) = reset(&c, &g);
        obs.page_type = crate::env::PageType::Done;
        let backend = Arc::new(ScriptedBackend::queue(Vec::<String>::new()));
        let err = summarizer(backend.clone()).summarize(&g, None, &obs).unwrap_err();
        assert!(matches!(err, OrchestratorError::Prompt(PromptError::UnsupportedPageType(_))));
        assert_eq!(backend.calls(), 0);
    }

    #[test]
    fn empty_summary_propagates() {
        let c = generate_catalog(1, 20);
        let g = generate_goals(&c, 1, 1).unwrap().remove(0);
        let (_, obs) = reset(&c, &g);
        let backend = Arc::new(ScriptedBackend::responder(|_| "Summary:   ".into()));
        let err = summarizer(backend).summarize(&g, None, &obs).unwrap_err();
        assert!(matches!(err, OrchestratorError::Prompt(PromptError::EmptySummary)));
    }
}
