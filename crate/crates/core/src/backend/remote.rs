//! HTTP completion client.
//!
//! POSTs `{model, prompt, temperature, max_tokens, stop}` to
//! `<base_url>/completions` and returns `choices[0].text`. Timeouts,
//! connection failures, HTTP 429 and 5xx are retried with exponential
//! backoff; any other 4xx fails immediately.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_request, BackendError, CompletionBackend, CompletionParams};

pub const DEFAULT_API_KEY_ENV: &str = "ASHPROMPT_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { base_delay: Duration::from_secs(1), factor: 2, max_attempts: 5 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(self.factor.saturating_pow(retry.saturating_sub(1)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateLimit {
    pub max_requests: u32,
    pub window: Duration,
}

impl RateLimit {
    pub fn per_minute(max_requests: u32) -> Self {
        RateLimit { max_requests, window: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout_seconds: u64,
    pub max_concurrency: usize,
    /// Requests per minute; absent means unlimited.
    pub rate_limit_per_minute: Option<u32>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "https://api.openai.com/v1".into(),
            timeout_seconds: 60,
            max_concurrency: 4,
            rate_limit_per_minute: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

struct Gate {
    in_flight: Mutex<usize>,
    cv: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("poisoned");
        while *n >= self.max {
            n = self.cv.wait(n).expect("poisoned");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("poisoned") -= 1;
        self.0.cv.notify_one();
    }
}

struct Limiter {
    limit: RateLimit,
    sent: Mutex<VecDeque<Instant>>,
}

impl Limiter {
    fn wait_turn(&self) {
        loop {
            let mut sent = self.sent.lock().expect("poisoned");
            let now = Instant::now();
            while sent.front().is_some_and(|t| now.duration_since(*t) >= self.limit.window) {
                sent.pop_front();
            }
            if sent.len() < self.limit.max_requests as usize {
                sent.push_back(now);
                return;
            }
            let wait = self.limit.window - now.duration_since(sent[0]);
            drop(sent);
            thread::sleep(wait);
        }
    }
}

enum Failure {
    Transient(String),
    Fatal(BackendError),
}

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    gate: Gate,
    limiter: Option<Limiter>,
}

impl RemoteBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: &RemoteConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let limit = config.rate_limit_per_minute.map(RateLimit::per_minute);
        Self::with_options(config, key, RetryPolicy::default(), limit)
    }

    pub fn with_options(
        config: &RemoteConfig,
        api_key: Option<String>,
        retry: RetryPolicy,
        rate_limit: Option<RateLimit>,
    ) -> Result<Self, BackendError> {
        if config.max_concurrency == 0 {
            return Err(BackendError::InvalidParams("max_concurrency must be >= 1".into()));
        }
        if retry.max_attempts == 0 {
            return Err(BackendError::InvalidParams("max_attempts must be >= 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_seconds.max(1)))
            .build()
            .map_err(|e| BackendError::InvalidParams(e.to_string()))?;
        Ok(RemoteBackend {
            client,
            endpoint: format!("{}/completions", config.base_url.trim_end_matches('/')),
            api_key,
            retry,
            gate: Gate { in_flight: Mutex::new(0), cv: Condvar::new(), max: config.max_concurrency },
            limiter: rate_limit
                .filter(|l| l.max_requests > 0)
                .map(|limit| Limiter { limit, sent: Mutex::new(VecDeque::new()) }),
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Failure> {
        if let Some(l) = &self.limiter {
            l.wait_turn();
        }
        let _permit = self.gate.acquire();
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                Failure::Transient(e.to_string())
            } else {
                Failure::Fatal(BackendError::BadResponse(e.to_string()))
            }
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| Failure::Transient(format!("reading body: {e}")))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(Failure::Fatal(BackendError::AuthError(text))),
            429 | 500..=599 => return Err(Failure::Transient(format!("HTTP {status}: {text}"))),
            _ => return Err(Failure::Fatal(BackendError::Rejected { status, body: text })),
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::Fatal(BackendError::BadResponse(e.to_string())))?;
        v.pointer("/choices/0/text")
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| Failure::Fatal(BackendError::BadResponse("missing choices[0].text".into())))
    }
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        check_request(prompt, params)?;
        let body = json!({
            "model": params.model_name,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": params.stop_sequences,
        });
        let mut last_error = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => last_error = msg,
            }
        }
        Err(BackendError::BackendUnavailable { attempts: self.retry.max_attempts, last_error })
    }
}
