//! Text-completion backends.
//!
//! Every backend answers `complete(prompt, params)`. Calls are keyed by a
//! digest of the exact prompt bytes and the canonicalized parameters, which
//! is what the transcript store records and replays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;

mod remote;
mod scripted;
mod transcript;

pub use remote::{RateLimit, RemoteBackend, RemoteConfig, RetryPolicy, DEFAULT_API_KEY_ENV};
pub use scripted::ScriptedBackend;
pub use transcript::{RecordingBackend, ReplayBackend, TranscriptStore};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid completion parameters: {0}")]
    InvalidParams(String),
    #[error("backend unavailable after {attempts} attempt(s): {last_error}")]
    BackendUnavailable { attempts: u32, last_error: String },
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("no recorded completion for digest {digest} (prompt ends with {excerpt:?})")]
    ReplayMiss { digest: String, excerpt: String },
    #[error("scripted backend queue exhausted")]
    QueueExhausted,
    #[error("scripted backend has no response for this prompt")]
    NoScriptedResponse,
    #[error("transcript {path}: {message}")]
    Transcript { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub model_name: String,
}

impl Default for CompletionParams {
    /// Greedy decoding, at most 500 new tokens, no stop sequences.
    fn default() -> Self {
        CompletionParams {
            temperature: 0.0,
            max_tokens: 500,
            stop_sequences: Vec::new(),
            model_name: "gpt-3.5-turbo-instruct".to_string(),
        }
    }
}

impl CompletionParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidParams(format!(
                "temperature must be a finite number >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidParams("max_tokens must be >= 1".into()));
        }
        Ok(())
    }

    /// Fixed field order; temperature in shortest round-trip decimal form.
    pub fn canonical(&self) -> String {
        let temperature = if self.temperature == 0.0 { 0.0 } else { self.temperature };
        format!(
            "model_name={}\nmax_tokens={}\ntemperature={}\nstop_sequences={}",
            self.model_name,
            self.max_tokens,
            temperature,
            serde_json::to_string(&self.stop_sequences).expect("strings serialize")
        )
    }
}

/// Hex SHA-256 of the prompt bytes and canonical parameters.
pub fn digest(prompt: &str, params: &CompletionParams) -> String {
    sha256_hex(&[prompt.as_bytes(), params.canonical().as_bytes()])
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError>;
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for std::sync::Arc<T> {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for &T {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }
}

pub(crate) fn check_request(prompt: &str, params: &CompletionParams) -> Result<(), BackendError> {
    if prompt.is_empty() {
        return Err(BackendError::EmptyPrompt);
    }
    params.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let p = CompletionParams::default();
        let d = digest("hello", &p);
        assert_eq!(d, digest("hello", &p));
        assert_ne!(d, digest("hellp", &p));
        let mut q = p.clone();
        q.max_tokens = 501;
        assert_ne!(d, digest("hello", &q));
        let mut r = p.clone();
        r.temperature = -0.0;
        assert_eq!(d, digest("hello", &r));
    }

    #[test]
    fn canonical_form() {
        let p =
            CompletionParams { temperature: 0.70, stop_sequences: vec!["\n".into()], ..CompletionParams::default() };
        assert_eq!(
            p.canonical(),
            "model_name=gpt-3.5-turbo-instruct\nmax_tokens=500\ntemperature=0.7\nstop_sequences=[\"\\n\"]"
        );
    }

    #[test]
    fn params_validation() {
        let mut p = CompletionParams::default();
        assert!(p.validate().is_ok());
        p.temperature = -0.5;
        assert!(p.validate().is_err());
        p.temperature = 0.0;
        p.max_tokens = 0;
        assert!(p.validate().is_err());
    }
}
