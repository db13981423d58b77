//! In-memory scripted backend for tests and dry runs.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::{check_request, BackendError, CompletionBackend, CompletionParams};

type Responder = Box<dyn Fn(&str) -> String + Send + Sync>;

enum Script {
    Queue(VecDeque<String>),
    Mapping(HashMap<String, String>),
    Responder(Responder),
}

/// Answers from a queue, an exact prompt mapping, or a function of the prompt.
/// Every prompt it receives is kept for inspection.
pub struct ScriptedBackend {
    script: Mutex<Script>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedBackend {
    fn with(script: Script) -> Self {
        ScriptedBackend { script: Mutex::new(script), prompts: Mutex::new(Vec::new()) }
    }

    /// Returns each queued response once, then `QueueExhausted`.
    pub fn queue<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with(Script::Queue(responses.into_iter().map(Into::into).collect()))
    }

    pub fn mapping(map: HashMap<String, String>) -> Self {
        Self::with(Script::Mapping(map))
    }

    pub fn responder(f: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        Self::with(Script::Responder(Box::new(f)))
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("poisoned").len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("poisoned").clone()
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        check_request(prompt, params)?;
        self.prompts.lock().expect("poisoned").push(prompt.to_string());
        match &mut *self.script.lock().expect("poisoned") {
            Script::Queue(q) => q.pop_front().ok_or(BackendError::QueueExhausted),
            Script::Mapping(m) => m.get(prompt).cloned().ok_or(BackendError::NoScriptedResponse),
            Script::Responder(f) => Ok(f(prompt)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_answers_once() {
        let b = ScriptedBackend::queue(["click[Buy Now]"]);
        let p = CompletionParams::default();
        assert_eq!(b.complete("x", &p).unwrap(), "click[Buy Now]");
        assert!(matches!(b.complete("x", &p), Err(BackendError::QueueExhausted)));
        assert_eq!(b.calls(), 2);
    }

    #[test]
    fn mapping_and_empty_prompt() {
        let b = ScriptedBackend::mapping(HashMap::from([("a".to_string(), "b".to_string())]));
        let p = CompletionParams::default();
        assert_eq!(b.complete("a", &p).unwrap(), "b");
        assert!(matches!(b.complete("c", &p), Err(BackendError::NoScriptedResponse)));
        assert!(matches!(b.complete("", &p), Err(BackendError::EmptyPrompt)));
    }
}
