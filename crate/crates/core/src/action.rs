//! The three-verb action language: `search[query]`, `click[target]`, `think[text]`.
//!
//! The canonical string form is the wire format written to trajectory logs.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::env::{Observation, PageType};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Search { query: String },
    Click { target: String },
    Think { text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntaxReason {
    UnknownVerb,
    MissingBrackets,
    EmptyPayload,
    TrailingGarbage,
    EmbeddedNewline,
}

impl fmt::Display for SyntaxReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntaxReason::UnknownVerb => "unknown-verb",
            SyntaxReason::MissingBrackets => "missing-brackets",
            SyntaxReason::EmptyPayload => "empty-payload",
            SyntaxReason::TrailingGarbage => "trailing-garbage",
            SyntaxReason::EmbeddedNewline => "embedded-newline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse action {raw:?}: {reason}")]
pub struct SyntaxError {
    pub raw: String,
    pub reason: SyntaxReason,
}

impl Action {
    pub fn search(query: impl Into<String>) -> Self {
        Action::Search { query: query.into() }
    }

    pub fn click(target: impl Into<String>) -> Self {
        Action::Click { target: target.into() }
    }

    pub fn think(text: impl Into<String>) -> Self {
        Action::Think { text: text.into() }
    }

    pub fn verb(&self) -> &'static str {
        match self {
            Action::Search { .. } => "search",
            Action::Click { .. } => "click",
            Action::Think { .. } => "think",
        }
    }

    pub fn payload(&self) -> &str {
        match self {
            Action::Search { query } => query,
            Action::Click { target } => target,
            Action::Think { text } => text,
        }
    }

    pub fn is_think(&self) -> bool {
        matches!(self, Action::Think { .. })
    }

    /// Payload non-empty after trimming and free of line breaks.
    pub fn is_well_formed(&self) -> bool {
        let p = self.payload();
        !p.trim().is_empty() && !p.contains(['\n', '\r'])
    }

    pub fn canonicalize(&self) -> String {
        format!("{}[{}]", self.verb(), self.payload())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.verb(), self.payload())
    }
}

/// Parses `verb[payload]`. The verb is case-insensitive, the payload is kept
/// verbatim, and the last `]` closes the payload.
pub fn parse_action(raw: &str) -> Result<Action, SyntaxError> {
    let fail = |reason| SyntaxError { raw: raw.to_string(), reason };
    let s = raw.trim();
    let Some(open) = s.find('[') else {
        return Err(fail(if is_verb(s) { SyntaxReason::MissingBrackets } else { SyntaxReason::UnknownVerb }));
    };
    let verb = s[..open].to_ascii_lowercase();
    if !is_verb(&verb) {
        return Err(fail(SyntaxReason::UnknownVerb));
    }
    let close = s.rfind(']').filter(|&c| c > open);
    let Some(close) = close else {
        return Err(fail(SyntaxReason::MissingBrackets));
    };
    if close + 1 != s.len() {
        return Err(fail(SyntaxReason::TrailingGarbage));
    }
    let payload = &s[open + 1..close];
    if payload.contains(['\n', '\r']) {
        return Err(fail(SyntaxReason::EmbeddedNewline));
    }
    if payload.trim().is_empty() {
        return Err(fail(SyntaxReason::EmptyPayload));
    }
    let payload = payload.to_string();
    Ok(match verb.as_str() {
        "search" => Action::Search { query: payload },
        "click" => Action::Click { target: payload },
        _ => Action::Think { text: payload },
    })
}

fn is_verb(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "search" | "click" | "think")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// For clicks, `canonical_label` is the page's own spelling of the target.
    Valid {
        canonical_label: Option<String>,
    },
    Invalid,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid { .. })
    }
}

/// Case-insensitive label lookup shared with the environment.
pub(crate) fn labels_match(label: &str, target: &str) -> bool {
    label == target || label.to_lowercase() == target.to_lowercase()
}

pub fn validate(action: &Action, obs: &Observation) -> Verdict {
    match action {
        Action::Think { .. } => Verdict::Valid { canonical_label: None },
        Action::Search { .. } if obs.page_type == PageType::SearchPage => Verdict::Valid { canonical_label: None },
        Action::Search { .. } => Verdict::Invalid,
        Action::Click { target } => obs
            .interactables
            .iter()
            .find(|l| labels_match(l, target))
            .map_or(Verdict::Invalid, |l| Verdict::Valid { canonical_label: Some(l.clone()) }),
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_action(&s).map_err(serde::de::Error::custom)
    }
}
