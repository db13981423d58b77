//! Shared helpers for the integration tests: an independent scorer and
//! scripted completion responders.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ashprompt::env::{Catalog, GoalSpec};
use serde_json::Value;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Price string to integer cents, parsed without the crate's price type.
fn cents(v: &Value) -> u64 {
    let s = v.as_str().expect("price is a string");
    let (whole, frac) = s.split_once('.').unwrap_or((s, "0"));
    let frac = format!("{frac:0<2}");
    whole.parse::<u64>().unwrap() * 100 + frac[..2].parse::<u64>().unwrap()
}

/// Scores a purchase straight from the JSON forms of the catalog and goal,
/// counting satisfied components as integers.
pub fn brute_force_score(
    catalog_json: &Value,
    goal: &GoalSpec,
    product_id: &str,
    selected: &std::collections::BTreeMap<String, String>,
) -> f64 {
    let goal = serde_json::to_value(goal).unwrap();
    let product = catalog_json.as_array().unwrap().iter().find(|p| p["id"] == product_id).expect("product exists");
    if product["category"] != goal["target_category"] {
        return 0.0;
    }
    let have: BTreeSet<&str> = product["attributes"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    let want: Vec<&str> = goal["required_attributes"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    let opts = goal["required_options"].as_object().unwrap();
    let mut total = want.len() + opts.len();
    let mut hit = want.iter().filter(|a| have.contains(*a)).count();
    for (k, v) in opts {
        if selected.get(k).map(String::as_str) == v.as_str() {
            hit += 1;
        }
    }
    if !goal["price_cap"].is_null() {
        total += 1;
        if cents(&product["price"]) <= cents(&goal["price_cap"]) {
            hit += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    hit as f64 / total as f64
}

/// Brute-force maximum over every product and every subset of the required
/// option values that product offers.
pub fn brute_force_max(catalog: &Catalog, goal: &GoalSpec) -> f64 {
    let json: Value = serde_json::from_str(&catalog.to_json()).unwrap();
    let keys: Vec<(&String, &String)> = goal.required_options.iter().collect();
    let mut best = 0.0f64;
    for p in catalog.products() {
        for mask in 0u32..(1 << keys.len()) {
            let sel = keys
                .iter()
                .enumerate()
                .filter(|(i, (k, v))| mask & (1 << i) != 0 && p.options.get(*k).is_some_and(|vs| vs.contains(v)))
                .map(|(_, (k, v))| ((*k).clone(), (*v).clone()))
                .collect();
            best = best.max(brute_force_score(&json, goal, &p.id, &sel));
        }
    }
    best
}

pub fn is_actor_prompt(prompt: &str) -> bool {
    prompt.ends_with("Action:")
}

/// The raw observation inside a summarizer prompt.
pub fn summarizer_observation(prompt: &str) -> &str {
    let body = &prompt[prompt.rfind("\nPrevious action: ").expect("summarizer prompt")..];
    let start = body.find("Observation:\n").unwrap() + "Observation:\n".len();
    let rest = &body[start..];
    &rest[..rest.find("\n\n").unwrap_or(rest.len())]
}

/// The last observation block of an actor prompt.
pub fn last_actor_observation(prompt: &str) -> &str {
    let start = prompt.rfind("Observation:\n").unwrap() + "Observation:\n".len();
    prompt[start..].trim_end_matches("Action:").trim_end()
}

/// The last observation that is not a think response.
pub fn last_page_observation(prompt: &str) -> &str {
    let mut end = prompt.len();
    loop {
        let at = prompt[..end].rfind("Observation:\n").unwrap();
        let block = prompt[at + "Observation:\n".len()..end].trim_end_matches("Action:").trim_end();
        let block = block.split("\nAction: ").next().unwrap().trim_end();
        if block != "OK." || at == 0 {
            return block;
        }
        end = at;
    }
}

const NAV: [&str; 7] = ["Search", "Back to Search", "Next >", "< Prev", "Description", "Features", "Buy Now"];

fn button(line: &str) -> Option<&str> {
    line.strip_prefix('[').and_then(|l| l.strip_suffix(']'))
}

/// Goal-aware condensing summarizer. Keeps navigation, products that carry
/// every required attribute, required option values, and short status lines.
pub fn condense(observation: &str, goal: &GoalSpec) -> String {
    let wanted: BTreeSet<&str> = goal.required_options.values().map(String::as_str).collect();
    let mut kept = Vec::new();
    for line in observation.lines() {
        if let Some(label) = button(line) {
            let lower = label.to_lowercase();
            if NAV.contains(&label)
                || wanted.contains(label)
                || goal.required_attributes.iter().all(|a| lower.contains(a.as_str()))
            {
                kept.push(line);
            }
            continue;
        }
        let drop = line.starts_with("Instruction:")
            || line.starts_with("Description:")
            || line.starts_with('$')
            || (line.ends_with(':') && !line.contains(' '))
            || (line.starts_with("- ") && !goal.required_attributes.iter().any(|a| line.contains(a.as_str())));
        if !drop {
            kept.push(line);
        }
    }
    format!("Keeping only what the instruction needs.\nSummary: {}", kept.join("\n"))
}

/// Goal-agnostic summarizer: every button plus status lines.
pub fn condense_generic(observation: &str) -> String {
    let kept: Vec<&str> = observation
        .lines()
        .filter(|l| {
            l.starts_with('[')
                || l.starts_with("Page ")
                || l.starts_with("Selected:")
                || l.starts_with("Price:")
                || l.starts_with("Invalid")
        })
        .collect();
    format!("Summary: {}", kept.join("\n"))
}

/// Shop-browsing actor: buys when a Buy Now button is visible, opens the
/// first product on a results page, and searches otherwise. Thinks once
/// before buying when the prompt's exemplars demonstrate thinking.
pub fn browse_actor(prompt: &str) -> String {
    let obs = last_page_observation(prompt);
    let buttons: Vec<&str> = obs.lines().filter_map(button).collect();
    if buttons.contains(&"Buy Now") {
        if prompt.contains("think[") && last_actor_observation(prompt) != "OK." {
            return "think[This item looks right, I will buy it.]".into();
        }
        return "click[Buy Now]".into();
    }
    if obs.contains("Total results") {
        if let Some(title) = buttons.iter().find(|b| !NAV.contains(b)) {
            return format!("click[{title}]\nObservation: (the model kept going)");
        }
    }
    let instruction =
        prompt[prompt.rfind("Instruction: ").unwrap() + "Instruction: ".len()..].lines().next().unwrap().to_string();
    format!(" search[{instruction}]")
}

/// Full responder: summarizer prompts go to `condense_generic`, actor prompts
/// to `browse_actor`.
pub fn generic_responder(prompt: &str) -> String {
    if is_actor_prompt(prompt) {
        browse_actor(prompt)
    } else {
        condense_generic(summarizer_observation(prompt))
    }
}

/// Actor that replays a fixed action list and a goal-aware summarizer.
pub fn scripted_responder(actions: Vec<String>, goal: GoalSpec) -> impl Fn(&str) -> String + Send + Sync + 'static {
    let next = Arc::new(AtomicUsize::new(0));
    move |prompt: &str| {
        if is_actor_prompt(prompt) {
            let i = next.fetch_add(1, Ordering::SeqCst);
            actions.get(i).cloned().unwrap_or_else(|| "click[Buy Now]".into())
        } else {
            condense(summarizer_observation(prompt), &goal)
        }
    }
}

pub fn load_actions(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.is_empty()).map(str::to_string).collect()
}
