//! Prompt template files and the template set.
//!
//! A template file is UTF-8 text split into blocks by lines containing only
//! `---`. Every block but the last is a few-shot exemplar, copied verbatim.
//! The last block is the body, in which `{name}` placeholders are substituted.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Mode, PromptError, Scenario};

pub const PLACEHOLDERS: [&str; 5] = ["instruction", "prev_action", "observation", "history", "scenario_instruction"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
    pub exemplars: Vec<String>,
}

/// Byte ranges of `{identifier}` spans in `body`.
fn placeholder_spans(body: &str) -> Vec<(usize, usize, &str)> {
    let mut spans = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &body[i + 1..];
            let len = rest.bytes().take_while(|b| b.is_ascii_lowercase() || *b == b'_').count();
            if len > 0 && rest.as_bytes().get(len) == Some(&b'}') {
                spans.push((i, i + len + 2, &rest[..len]));
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    spans
}

impl PromptTemplate {
    pub fn parse(name: &str, text: &str) -> Result<Self, PromptError> {
        let mut blocks: Vec<String> = vec![String::new()];
        for line in text.lines() {
            if line == "---" {
                blocks.push(String::new());
            } else {
                let cur = blocks.last_mut().expect("non-empty");
                cur.push_str(line);
                cur.push('\n');
            }
        }
        let blocks: Vec<String> = blocks.into_iter().map(|b| b.trim_matches('\n').to_string()).collect();
        let (body, exemplars) = blocks.split_last().expect("at least one block");
        if body.trim().is_empty() {
            return Err(PromptError::Template { name: name.to_string(), message: "template body is empty".into() });
        }
        let t = PromptTemplate {
            name: name.to_string(),
            body: body.clone(),
            exemplars: exemplars.iter().filter(|e| !e.trim().is_empty()).cloned().collect(),
        };
        t.check_placeholders()?;
        Ok(t)
    }

    fn check_placeholders(&self) -> Result<(), PromptError> {
        for (_, _, key) in placeholder_spans(&self.body) {
            if !PLACEHOLDERS.contains(&key) {
                return Err(PromptError::Template {
                    name: self.name.clone(),
                    message: format!("unknown placeholder {{{key}}}"),
                });
            }
        }
        Ok(())
    }

    pub fn placeholders(&self) -> Vec<&str> {
        placeholder_spans(&self.body).into_iter().map(|(_, _, k)| k).collect()
    }

    /// Substitutes the body. Values are inserted verbatim and never rescanned.
    pub fn render_body(&self, values: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.body.len());
        let mut last = 0;
        for (start, end, key) in placeholder_spans(&self.body) {
            let value = values.get(key).ok_or_else(|| PromptError::Template {
                name: self.name.clone(),
                message: format!("unresolved placeholder {{{key}}}"),
            })?;
            out.push_str(&self.body[last..start]);
            out.push_str(value);
            last = end;
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }

    /// Exemplars followed by the rendered body, separated by blank lines.
    pub fn render_with<'a>(
        &self,
        exemplars: impl IntoIterator<Item = &'a str>,
        values: &BTreeMap<&str, &str>,
    ) -> Result<String, PromptError> {
        let mut out = String::new();
        for e in exemplars {
            out.push_str(e);
            out.push_str("\n\n");
        }
        out.push_str(&self.render_body(values)?);
        Ok(out)
    }
}

/// All templates one run needs: the summarizer, its per-scenario step-by-step
/// instructions, and one actor template per mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub summarizer: PromptTemplate,
    pub scenarios: BTreeMap<Scenario, String>,
    pub actors: BTreeMap<Mode, PromptTemplate>,
}

const BUILTIN_FILES: &[(&str, &str)] = &[
    ("summarizer.txt", include_str!("../../templates/summarizer.txt")),
    ("actor_act.txt", include_str!("../../templates/actor_act.txt")),
    ("actor_react.txt", include_str!("../../templates/actor_react.txt")),
    ("actor_ash.txt", include_str!("../../templates/actor_ash.txt")),
    ("actor_act_ash.txt", include_str!("../../templates/actor_act_ash.txt")),
    ("scenarios/search_page.txt", include_str!("../../templates/scenarios/search_page.txt")),
    ("scenarios/results_page.txt", include_str!("../../templates/scenarios/results_page.txt")),
    ("scenarios/item_page.txt", include_str!("../../templates/scenarios/item_page.txt")),
    ("scenarios/detail_page.txt", include_str!("../../templates/scenarios/detail_page.txt")),
];

fn actor_file(mode: Mode) -> &'static str {
    match mode {
        Mode::Act => "actor_act.txt",
        Mode::ReAct => "actor_react.txt",
        Mode::Ash => "actor_ash.txt",
        Mode::ActAsh => "actor_act_ash.txt",
    }
}

fn scenario_file(s: Scenario) -> &'static str {
    match s {
        Scenario::SearchPage => "scenarios/search_page.txt",
        Scenario::ResultsPage => "scenarios/results_page.txt",
        Scenario::ItemPage => "scenarios/item_page.txt",
        Scenario::DetailPage => "scenarios/detail_page.txt",
    }
}

impl TemplateSet {
    fn from_files(read: impl Fn(&str) -> Result<String, PromptError>) -> Result<Self, PromptError> {
        let summarizer = PromptTemplate::parse("summarizer", &read("summarizer.txt")?)?;
        let scenarios = Scenario::ALL
            .iter()
            .map(|&s| Ok((s, read(scenario_file(s))?.trim().to_string())))
            .collect::<Result<_, PromptError>>()?;
        let actors = Mode::ALL
            .iter()
            .map(|&m| {
                let file = actor_file(m);
                let name = file.trim_end_matches(".txt");
                Ok((m, PromptTemplate::parse(name, &read(file)?)?))
            })
            .collect::<Result<_, PromptError>>()?;
        Ok(TemplateSet { summarizer, scenarios, actors })
    }

    /// The templates shipped in `templates/`.
    pub fn builtin() -> Self {
        Self::from_files(|name| {
            BUILTIN_FILES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| PromptError::Template { name: name.to_string(), message: "missing builtin".into() })
        })
        .expect("builtin templates are valid")
    }

    /// Loads a directory with the same layout as the built-in `templates/`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        Self::from_files(|name| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| PromptError::Template {
                name: name.to_string(),
                message: format!("{}: {e}", path.display()),
            })
        })
    }

    pub fn actor(&self, mode: Mode) -> &PromptTemplate {
        &self.actors[&mode]
    }

    pub fn scenario_instruction(&self, scenario: Scenario) -> &str {
        &self.scenarios[&scenario]
    }
}
