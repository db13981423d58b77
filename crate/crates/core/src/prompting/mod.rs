//! Summarizer and actor prompt construction, and completion parsing.
//!
//! The summarizer prompt is a pure function of the goal, the previous action
//! and the current raw observation; no other episode history reaches it. The
//! actor prompt carries the instruction plus the observation/action history,
//! where observations are raw pages in `Act`/`ReAct` and summaries in
//! `Ash`/`ActAsh`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, Action, SyntaxError};
use crate::digest::sha256_hex;
use crate::env::{GoalSpec, Observation, PageType};

mod template;

pub use template::{PromptTemplate, TemplateSet, PLACEHOLDERS};

/// Marker line that starts the summarizer's output after its reasoning.
pub const SUMMARY_MARKER: &str = "Summary:";
/// Rendered in the previous-action slot on the first step.
pub const NO_PREV_ACTION: &str = "None";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {name}: {message}")]
    Template { name: String, message: String },
    #[error("summarizer returned an empty summary")]
    EmptySummary,
    #[error("page type {0:?} is never summarized")]
    UnsupportedPageType(PageType),
}

/// Prompting regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "act")]
    Act,
    #[serde(rename = "react")]
    ReAct,
    #[serde(rename = "ash")]
    Ash,
    #[serde(rename = "act-ash")]
    ActAsh,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Act, Mode::ReAct, Mode::Ash, Mode::ActAsh];

    /// Observations pass through the summarizer.
    pub fn summarizes(self) -> bool {
        matches!(self, Mode::Ash | Mode::ActAsh)
    }

    /// Exemplars may demonstrate `think[...]`.
    pub fn allows_think(self) -> bool {
        matches!(self, Mode::ReAct | Mode::Ash)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Act => "act",
            Mode::ReAct => "react",
            Mode::Ash => "ash",
            Mode::ActAsh => "act-ash",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "act" => Ok(Mode::Act),
            "react" => Ok(Mode::ReAct),
            "ash" => Ok(Mode::Ash),
            "act-ash" | "act+ash" | "actash" => Ok(Mode::ActAsh),
            _ => Err(format!("unknown mode {s:?} (expected act, react, ash or act-ash)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    SearchPage,
    ResultsPage,
    ItemPage,
    DetailPage,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::SearchPage, Scenario::ResultsPage, Scenario::ItemPage, Scenario::DetailPage];
}

pub fn classify_scenario(obs: &Observation) -> Result<Scenario, PromptError> {
    match obs.page_type {
        PageType::SearchPage => Ok(Scenario::SearchPage),
        PageType::ResultsPage => Ok(Scenario::ResultsPage),
        PageType::ItemPage => Ok(Scenario::ItemPage),
        PageType::DetailPage => Ok(Scenario::DetailPage),
        PageType::Done => Err(PromptError::UnsupportedPageType(PageType::Done)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizedObservation {
    pub text: String,
    pub source_page_type: PageType,
    /// Digest of (instruction, previous action, raw observation text).
    pub derived_from: String,
}

impl SummarizedObservation {
    pub fn new(text: String, goal: &GoalSpec, prev_action: Option<&Action>, obs: &Observation) -> Self {
        let prev = prev_action.map(Action::canonicalize);
        let derived_from = sha256_hex(&[
            goal.instruction_text.as_bytes(),
            prev.as_deref().unwrap_or(NO_PREV_ACTION).as_bytes(),
            obs.text.as_bytes(),
        ]);
        SummarizedObservation { text, source_page_type: obs.page_type, derived_from }
    }
}

/// One actor-visible history item. The first entry of an episode has no
/// action: it is the initial page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: Option<Action>,
    pub observation_text: String,
}

pub fn build_summarizer_prompt(
    goal: &GoalSpec,
    prev_action: Option<&Action>,
    obs: &Observation,
    templates: &TemplateSet,
) -> Result<String, PromptError> {
    let scenario = classify_scenario(obs)?;
    let prev = prev_action.map_or_else(|| NO_PREV_ACTION.to_string(), Action::canonicalize);
    let t = &templates.summarizer;
    let values = BTreeMap::from([
        ("instruction", goal.instruction_text.as_str()),
        ("prev_action", prev.as_str()),
        ("observation", obs.text.trim_end()),
        ("scenario_instruction", templates.scenario_instruction(scenario)),
    ]);
    t.render_with(t.exemplars.iter().map(String::as_str), &values)
}

/// Extracts the summary following the `Summary:` marker line, or the whole
/// trimmed completion when no marker is present.
pub fn parse_summary(completion: &str) -> Result<String, PromptError> {
    let mut lines = completion.lines();
    let mut text = None;
    while let Some(line) = lines.next() {
        if let Some(rest) = line.trim_start().strip_prefix(SUMMARY_MARKER) {
            let mut out = rest.trim().to_string();
            for l in lines.by_ref() {
                out.push('\n');
                out.push_str(l);
            }
            text = Some(out);
            break;
        }
    }
    let text = text.unwrap_or_else(|| completion.to_string());
    let text = text.trim();
    if text.is_empty() {
        return Err(PromptError::EmptySummary);
    }
    Ok(text.to_string())
}

/// Drops demonstrated think steps (the `Action: think[...]` line and its
/// `OK.` observation) from an exemplar.
pub fn strip_think_steps(exemplar: &str) -> String {
    let mut out: Vec<&str> = Vec::new();
    let mut skipping = false;
    for line in exemplar.lines() {
        if line.starts_with("Action: ") {
            skipping = line.contains("think[");
        }
        if !skipping && !line.contains("think[") {
            out.push(line);
        }
        if skipping && line.is_empty() {
            skipping = false;
        }
    }
    out.join("\n")
}

pub fn render_history(history: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for entry in history {
        if let Some(a) = &entry.action {
            out.push_str("Action: ");
            out.push_str(&a.canonicalize());
            out.push('\n');
        }
        out.push_str("Observation:\n");
        out.push_str(entry.observation_text.trim_end());
        out.push_str("\n\n");
    }
    out
}

pub fn build_actor_prompt(
    goal: &GoalSpec,
    history: &[HistoryEntry],
    templates: &TemplateSet,
    mode: Mode,
) -> Result<String, PromptError> {
    let t = templates.actor(mode);
    let exemplars: Vec<String> = if mode.allows_think() {
        t.exemplars.clone()
    } else {
        t.exemplars.iter().map(|e| strip_think_steps(e)).collect()
    };
    let history = render_history(history);
    let values = BTreeMap::from([("instruction", goal.instruction_text.as_str()), ("history", history.as_str())]);
    t.render_with(exemplars.iter().map(String::as_str), &values)
}

/// First line of the trimmed completion, parsed as an action. Models often
/// keep generating past the action; everything after the first line is dropped.
pub fn parse_actor_output(completion: &str) -> Result<Action, SyntaxError> {
    let first = completion.trim().lines().next().unwrap_or("");
    parse_action(first)
}

/// Whitespace-delimited token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::SyntaxReason;

    fn goal() -> GoalSpec {
        GoalSpec {
            instruction_text: "Find me a fruit scent deodorant with small".into(),
            target_category: "deodorant".into(),
            required_attributes: ["fruit scent".to_string()].into(),
            required_options: [("size".to_string(), "small".to_string())].into(),
            price_cap: None,
            solvable: true,
        }
    }

    fn obs(page_type: PageType, text: &str) -> Observation {
        Observation { text: text.into(), page_type, interactables: vec![], instruction_text: String::new() }
    }

    #[test]
    fn scenarios_follow_page_type() {
        let set = TemplateSet::builtin();
        let item = classify_scenario(&obs(PageType::ItemPage, "")).unwrap();
        assert_eq!(item, Scenario::ItemPage);
        assert!(set.scenario_instruction(item).contains("verify whether the product is desirable"));
        let results = classify_scenario(&obs(PageType::ResultsPage, "")).unwrap();
        assert!(set.scenario_instruction(results).contains("keep only the ones"));
        let search = classify_scenario(&obs(PageType::SearchPage, "")).unwrap();
        assert!(set.scenario_instruction(search).contains("search query"));
        assert_eq!(classify_scenario(&obs(PageType::Done, "")), Err(PromptError::UnsupportedPageType(PageType::Done)));
    }

    #[test]
    fn summarizer_prompt_is_stateless_and_structured() {
        let set = TemplateSet::builtin();
        let o = obs(PageType::ItemPage, "Instruction: x\n[small]\n[Buy Now]\n");
        let a = Action::click("Brightleaf Fruit Scent Deodorant");
        let p1 = build_summarizer_prompt(&goal(), Some(&a), &o, &set).unwrap();
        let p2 = build_summarizer_prompt(&goal(), Some(&a), &o, &set).unwrap();
        assert_eq!(p1, p2);
        let tail = p1.rsplit("\n\n").next().unwrap();
        assert_eq!(tail, set.scenario_instruction(Scenario::ItemPage));
        let body_start = p1.rfind("Instruction: Find me a fruit").unwrap();
        let body = &p1[body_start..];
        let order = [
            "Instruction: Find me a fruit scent deodorant with small",
            "Previous action: click[Brightleaf Fruit Scent Deodorant]",
            "Observation:\nInstruction: x\n[small]\n[Buy Now]",
            "This is a product page.",
        ];
        let positions: Vec<usize> = order.iter().map(|s| body.find(s).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(!p1.contains("{observation}"));
    }

    #[test]
    fn first_step_prev_action_is_none() {
        let set = TemplateSet::builtin();
        let p = build_summarizer_prompt(&goal(), None, &obs(PageType::SearchPage, "[Search]"), &set).unwrap();
        assert!(p.ends_with(set.scenario_instruction(Scenario::SearchPage)));
        let body = &p[p.rfind("Instruction: Find me a fruit").unwrap()..];
        assert!(body.contains("Previous action: None\n"));
    }

    #[test]
    fn summary_marker() {
        assert_eq!(
            parse_summary("reasoning...\nSummary: [small]\n[bright citrus]\n[Buy Now]").unwrap(),
            "[small]\n[bright citrus]\n[Buy Now]"
        );
        assert_eq!(parse_summary("  just text \n").unwrap(), "just text");
        assert_eq!(parse_summary(" \n\t "), Err(PromptError::EmptySummary));
        assert_eq!(parse_summary("thinking\nSummary:   \n"), Err(PromptError::EmptySummary));
    }

    #[test]
    fn actor_prompt_base_case() {
        let set = TemplateSet::builtin();
        let p = build_actor_prompt(&goal(), &[], &set, Mode::ReAct).unwrap();
        let exemplars = set.actor(Mode::ReAct).exemplars.join("\n\n");
        assert_eq!(p, format!("{exemplars}\n\nInstruction: Find me a fruit scent deodorant with small\n\nAction:"));
    }

    #[test]
    fn actor_prompt_renders_history_in_order() {
        let set = TemplateSet::builtin();
        let history = vec![
            HistoryEntry { action: None, observation_text: "S0".into() },
            HistoryEntry { action: Some(Action::think("compare")), observation_text: "OK.".into() },
            HistoryEntry { action: Some(Action::click("x")), observation_text: "S1".into() },
        ];
        let p = build_actor_prompt(&goal(), &history, &set, Mode::Ash).unwrap();
        assert!(p.ends_with(
            "Instruction: Find me a fruit scent deodorant with small\n\n\
             Observation:\nS0\n\n\
             Action: think[compare]\nObservation:\nOK.\n\n\
             Action: click[x]\nObservation:\nS1\n\n\
             Action:"
        ));
    }

    #[test]
    fn act_modes_have_no_think_exemplars() {
        let mut set = TemplateSet::builtin();
        // Even a user template that demonstrates think loses it in Act modes.
        set.actors.insert(Mode::Act, set.actor(Mode::ReAct).clone());
        for mode in [Mode::Act, Mode::ActAsh] {
            let p = build_actor_prompt(&goal(), &[], &set, mode).unwrap();
            assert!(!p.contains("think["), "{mode}");
        }
        for mode in [Mode::ReAct, Mode::Ash] {
            assert!(build_actor_prompt(&goal(), &[], &set, mode).unwrap().contains("think["));
        }
    }

    #[test]
    fn strip_think_removes_step_and_response() {
        let ex = "Observation:\nA\n\nAction: think[hmm]\nObservation:\nOK.\n\nAction: click[b]\nObservation:\nB";
        assert_eq!(strip_think_steps(ex), "Observation:\nA\n\nAction: click[b]\nObservation:\nB");
    }

    #[test]
    fn actor_output_first_line() {
        assert_eq!(parse_actor_output("click[Buy Now]\nObservation: ...").unwrap(), Action::click("Buy Now"));
        assert_eq!(parse_actor_output(" think[the color is wrong]").unwrap(), Action::think("the color is wrong"));
        assert_eq!(parse_actor_output("").unwrap_err().reason, SyntaxReason::UnknownVerb);
    }

    #[test]
    fn mode_names() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert_eq!("Act+ASH".parse::<Mode>().unwrap(), Mode::ActAsh);
        assert!("cot".parse::<Mode>().is_err());
    }
}
