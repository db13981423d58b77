//! Page states, text rendering and the step transition function.
//!
//! Rendering is bit-exact: the first line is `Instruction: <text>`, every
//! clickable element sits on its own line as `[label]`, and option groups are
//! a `name:` header followed by their value lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, Product};
use super::goals::GoalSpec;
use super::score::{score, Purchase};
use super::search::search_rank;
use super::EnvError;
use crate::action::{labels_match, Action};

pub const SEARCH: &str = "Search";
pub const BACK_TO_SEARCH: &str = "Back to Search";
pub const NEXT_PAGE: &str = "Next >";
pub const PREV_PAGE: &str = "< Prev";
pub const DESCRIPTION: &str = "Description";
pub const FEATURES: &str = "Features";
pub const BUY_NOW: &str = "Buy Now";
pub const INVALID_BANNER: &str = "Invalid action!";
pub const THINK_RESPONSE: &str = "OK.";
pub const RESULTS_PER_PAGE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PageType {
    SearchPage,
    ResultsPage,
    ItemPage,
    DetailPage,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetailKind {
    Description,
    Features,
}

/// The results page an item was opened from, so `< Prev` can return to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResultsOrigin {
    pub query: String,
    pub page_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "page")]
pub enum PageState {
    SearchPage,
    ResultsPage {
        query: String,
        page_index: usize,
    },
    ItemPage {
        product_id: String,
        selected_options: BTreeMap<String, String>,
        origin: ResultsOrigin,
    },
    DetailPage {
        product_id: String,
        kind: DetailKind,
        selected_options: BTreeMap<String, String>,
        origin: ResultsOrigin,
    },
    Done {
        product_id: String,
        selected_options: BTreeMap<String, String>,
    },
}

impl PageState {
    pub fn page_type(&self) -> PageType {
        match self {
            PageState::SearchPage => PageType::SearchPage,
            PageState::ResultsPage { .. } => PageType::ResultsPage,
            PageState::ItemPage { .. } => PageType::ItemPage,
            PageState::DetailPage { .. } => PageType::DetailPage,
            PageState::Done { .. } => PageType::Done,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub page_type: PageType,
    pub interactables: Vec<String>,
    pub instruction_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next_state: PageState,
    pub observation: Observation,
    pub valid: bool,
    pub done: bool,
    /// Present iff `done`.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Element {
    Search,
    BackToSearch,
    Next,
    Prev,
    Product(String),
    OptionValue { name: String, value: String },
    Detail(DetailKind),
    BuyNow,
}

struct Page {
    text: String,
    elements: Vec<(String, Element)>,
}

impl Page {
    fn new(instruction: &str) -> Self {
        Page { text: format!("Instruction: {instruction}\n"), elements: Vec::new() }
    }

    fn line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
    }

    fn button(&mut self, label: &str, element: Element) {
        let _ = writeln!(self.text, "[{label}]");
        self.elements.push((label.to_string(), element));
    }

    fn into_observation(self, page_type: PageType, instruction: &str) -> Observation {
        Observation {
            text: self.text,
            page_type,
            interactables: self.elements.into_iter().map(|(l, _)| l).collect(),
            instruction_text: instruction.to_string(),
        }
    }
}

fn selected_line(selected: &BTreeMap<String, String>) -> Option<String> {
    (!selected.is_empty()).then(|| {
        let parts: Vec<String> = selected.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("Selected: {}", parts.join(", "))
    })
}

fn item_header(page: &mut Page, product: &Product) {
    page.button(BACK_TO_SEARCH, Element::BackToSearch);
    page.button(PREV_PAGE, Element::Prev);
    page.line(&product.title);
    page.line(&format!("Price: ${}", product.price));
}

fn build_page(state: &PageState, catalog: &Catalog, goal: &GoalSpec) -> Result<Page, EnvError> {
    let mut page = Page::new(&goal.instruction_text);
    match state {
        PageState::SearchPage => page.button(SEARCH, Element::Search),
        PageState::ResultsPage { query, page_index } => {
            let ranked = search_rank(catalog, query).unwrap_or_default();
            page.button(BACK_TO_SEARCH, Element::BackToSearch);
            page.line(&format!("Page {} (Total results: {})", page_index + 1, ranked.len()));
            if *page_index > 0 {
                page.button(PREV_PAGE, Element::Prev);
            }
            let start = page_index.saturating_mul(RESULTS_PER_PAGE);
            if start.saturating_add(RESULTS_PER_PAGE) < ranked.len() {
                page.button(NEXT_PAGE, Element::Next);
            }
            if ranked.is_empty() {
                page.line("No results found.");
            }
            for id in ranked.iter().skip(start).take(RESULTS_PER_PAGE) {
                let p = catalog.product(id)?;
                page.button(&p.title, Element::Product(p.id.clone()));
                page.line(&format!("${} | {}", p.price, p.id));
            }
        }
        PageState::ItemPage { product_id, selected_options, .. } => {
            let p = catalog.product(product_id)?;
            item_header(&mut page, p);
            if let Some(line) = selected_line(selected_options) {
                page.line(&line);
            }
            for (name, values) in &p.options {
                page.line(&format!("{name}:"));
                for v in values {
                    page.button(v, Element::OptionValue { name: name.clone(), value: v.clone() });
                }
            }
            page.button(DESCRIPTION, Element::Detail(DetailKind::Description));
            page.button(FEATURES, Element::Detail(DetailKind::Features));
            page.button(BUY_NOW, Element::BuyNow);
        }
        PageState::DetailPage { product_id, kind, .. } => {
            let p = catalog.product(product_id)?;
            item_header(&mut page, p);
            match kind {
                DetailKind::Description => page.line(&format!("Description: {}", p.description)),
                DetailKind::Features => {
                    page.line("Features:");
                    for f in &p.features {
                        page.line(&format!("- {f}"));
                    }
                }
            }
        }
        PageState::Done { product_id, selected_options } => {
            let p = catalog.product(product_id)?;
            let s = score(
                &Purchase { product_id: product_id.clone(), selected_options: selected_options.clone() },
                goal,
                catalog,
            )?;
            page.line("Thank you for shopping with us!");
            page.line(&format!("Purchased: {}", p.title));
            if let Some(line) = selected_line(selected_options) {
                page.line(&line);
            }
            page.line(&format!("Your score (min 0.0, max 1.0): {s}"));
        }
    }
    Ok(page)
}

pub fn render(state: &PageState, catalog: &Catalog, goal: &GoalSpec) -> Result<Observation, EnvError> {
    let page = build_page(state, catalog, goal)?;
    Ok(page.into_observation(state.page_type(), &goal.instruction_text))
}

pub fn reset(catalog: &Catalog, goal: &GoalSpec) -> (PageState, Observation) {
    let state = PageState::SearchPage;
    let obs = render(&state, catalog, goal).expect("search page renders without catalog lookups");
    (state, obs)
}

pub fn step(state: &PageState, action: &Action, catalog: &Catalog, goal: &GoalSpec) -> Result<StepOutcome, EnvError> {
    if matches!(state, PageState::Done { .. }) {
        return Err(EnvError::SteppedAfterDone);
    }
    let page = build_page(state, catalog, goal)?;
    let instruction = goal.instruction_text.as_str();

    let next = match action {
        Action::Think { .. } => {
            return Ok(StepOutcome {
                next_state: state.clone(),
                observation: Observation {
                    text: THINK_RESPONSE.to_string(),
                    page_type: state.page_type(),
                    interactables: Vec::new(),
                    instruction_text: instruction.to_string(),
                },
                valid: true,
                done: false,
                score: None,
            });
        }
        Action::Search { query } => match state {
            PageState::SearchPage if search_rank(catalog, query).is_ok() => {
                Some(PageState::ResultsPage { query: query.clone(), page_index: 0 })
            }
            _ => None,
        },
        Action::Click { target } => page
            .elements
            .iter()
            .find(|(label, _)| labels_match(label, target))
            .map(|(_, element)| transition(state, element)),
    };

    let Some(next_state) = next else {
        let mut observation = page.into_observation(state.page_type(), instruction);
        observation.text = format!("{INVALID_BANNER}\n{}", observation.text);
        return Ok(StepOutcome { next_state: state.clone(), observation, valid: false, done: false, score: None });
    };

    let observation = render(&next_state, catalog, goal)?;
    let score = match &next_state {
        PageState::Done { product_id, selected_options } => Some(score(
            &Purchase { product_id: product_id.clone(), selected_options: selected_options.clone() },
            goal,
            catalog,
        )?),
        _ => None,
    };
    Ok(StepOutcome { done: score.is_some(), next_state, observation, valid: true, score })
}

fn transition(state: &PageState, element: &Element) -> PageState {
    match (state, element) {
        (_, Element::BackToSearch) | (PageState::SearchPage, Element::Search) => PageState::SearchPage,
        (PageState::ResultsPage { query, page_index }, Element::Next) => {
            PageState::ResultsPage { query: query.clone(), page_index: page_index + 1 }
        }
        (PageState::ResultsPage { query, page_index }, Element::Prev) => {
            PageState::ResultsPage { query: query.clone(), page_index: page_index.saturating_sub(1) }
        }
        (PageState::ResultsPage { query, page_index }, Element::Product(id)) => PageState::ItemPage {
            product_id: id.clone(),
            selected_options: BTreeMap::new(),
            origin: ResultsOrigin { query: query.clone(), page_index: *page_index },
        },
        (PageState::ItemPage { origin, .. }, Element::Prev) => {
            PageState::ResultsPage { query: origin.query.clone(), page_index: origin.page_index }
        }
        (PageState::ItemPage { product_id, selected_options, origin }, Element::OptionValue { name, value }) => {
            let mut selected = selected_options.clone();
            selected.insert(name.clone(), value.clone());
            PageState::ItemPage { product_id: product_id.clone(), selected_options: selected, origin: origin.clone() }
        }
        (PageState::ItemPage { product_id, selected_options, origin }, Element::Detail(kind)) => {
            PageState::DetailPage {
                product_id: product_id.clone(),
                kind: *kind,
                selected_options: selected_options.clone(),
                origin: origin.clone(),
            }
        }
        (PageState::ItemPage { product_id, selected_options, .. }, Element::BuyNow) => {
            PageState::Done { product_id: product_id.clone(), selected_options: selected_options.clone() }
        }
        (PageState::DetailPage { product_id, selected_options, origin, .. }, Element::Prev) => PageState::ItemPage {
            product_id: product_id.clone(),
            selected_options: selected_options.clone(),
            origin: origin.clone(),
        },
        (state, element) => unreachable!("element {element:?} is never rendered on {state:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::price::Price;

    fn product(id: &str, title: &str) -> Product {
        Product {
            id: id.into(),
            title: title.into(),
            category: "deodorant".into(),
            attributes: ["fruit scent".to_string()].into(),
            options: [
                ("scent".to_string(), vec!["citrus".to_string(), "rose".to_string()]),
                ("size".to_string(), vec!["small".to_string(), "large".to_string()]),
            ]
            .into(),
            price: Price::from_cents(1250),
            description: "A bright citrus stick.".into(),
            features: vec!["Fruit Scent design".into()],
        }
    }

    fn fixture(n: usize) -> (Catalog, GoalSpec) {
        let products = (0..n).map(|i| product(&format!("p{i:03}"), &format!("Fresh Deodorant {i}"))).collect();
        let goal = GoalSpec {
            instruction_text: "Find me a fruit scent deodorant with small".into(),
            target_category: "deodorant".into(),
            required_attributes: ["fruit scent".to_string()].into(),
            required_options: [("size".to_string(), "small".to_string())].into(),
            price_cap: None,
            solvable: true,
        };
        (Catalog::new(products, None).unwrap(), goal)
    }

    fn results(page_index: usize) -> PageState {
        PageState::ResultsPage { query: "deodorant".into(), page_index }
    }

    fn item() -> PageState {
        PageState::ItemPage {
            product_id: "p000".into(),
            selected_options: BTreeMap::new(),
            origin: ResultsOrigin { query: "deodorant".into(), page_index: 0 },
        }
    }

    #[test]
    fn reset_shows_search_affordance() {
        let (c, g) = fixture(3);
        let (state, obs) = reset(&c, &g);
        assert_eq!(state, PageState::SearchPage);
        assert_eq!(obs.page_type, PageType::SearchPage);
        assert_eq!(obs.interactables, [SEARCH]);
        assert!(obs.text.starts_with(&format!("Instruction: {}\n", g.instruction_text)));
    }

    #[test]
    fn pagination() {
        let (c, g) = fixture(25);
        let mid = render(&results(1), &c, &g).unwrap();
        assert!(mid.interactables.contains(&NEXT_PAGE.to_string()));
        assert!(mid.interactables.contains(&PREV_PAGE.to_string()));
        let titles: Vec<_> = mid.interactables.iter().filter(|l| l.starts_with("Fresh")).collect();
        assert_eq!(titles.len(), 10);
        assert_eq!(titles[0], "Fresh Deodorant 10");
        assert_eq!(titles[9], "Fresh Deodorant 19");

        let last = render(&results(2), &c, &g).unwrap();
        assert!(!last.interactables.contains(&NEXT_PAGE.to_string()));
        assert_eq!(last.interactables.iter().filter(|l| l.starts_with("Fresh")).count(), 5);
    }

    #[test]
    fn item_page_layout_is_exact() {
        let (c, g) = fixture(1);
        let obs = render(&item(), &c, &g).unwrap();
        let expected = "\
Instruction: Find me a fruit scent deodorant with small
[Back to Search]
[< Prev]
Fresh Deodorant 0
Price: $12.50
scent:
[citrus]
[rose]
size:
[small]
[large]
[Description]
[Features]
[Buy Now]
";
        assert_eq!(obs.text, expected);
        assert!(obs.interactables.contains(&"citrus".to_string()));
        assert!(obs.interactables.contains(&"rose".to_string()));
    }

    #[test]
    fn interactables_appear_as_markup_in_order() {
        let (c, g) = fixture(12);
        for state in [PageState::SearchPage, results(0), results(1), item()] {
            let obs = render(&state, &c, &g).unwrap();
            let marked: Vec<&str> =
                obs.text.lines().filter_map(|l| l.strip_prefix('[').and_then(|l| l.strip_suffix(']'))).collect();
            assert_eq!(marked, obs.interactables);
        }
    }

    #[test]
    fn search_then_buy_flow() {
        let (c, g) = fixture(3);
        let out = step(&PageState::SearchPage, &Action::search("fruit deodorant"), &c, &g).unwrap();
        assert!(out.valid);
        assert_eq!(out.next_state.page_type(), PageType::ResultsPage);

        let out = step(&results(0), &Action::click("fresh deodorant 0"), &c, &g).unwrap();
        assert_eq!(out.next_state, item());
        let out = step(&out.next_state, &Action::click("small"), &c, &g).unwrap();
        assert!(out.observation.text.contains("Selected: size=small"));
        let out = step(&out.next_state, &Action::click("Buy Now"), &c, &g).unwrap();
        assert!(out.done);
        assert_eq!(out.score, Some(1.0));
        assert_eq!(out.observation.page_type, PageType::Done);
        assert!(matches!(step(&out.next_state, &Action::think("x"), &c, &g), Err(EnvError::SteppedAfterDone)));
    }

    #[test]
    fn buy_now_only_on_item_page() {
        let (c, g) = fixture(3);
        let out = step(&results(0), &Action::click("Buy Now"), &c, &g).unwrap();
        assert!(!out.valid);
        assert_eq!(out.next_state, results(0));
        let prev = render(&results(0), &c, &g).unwrap();
        assert_eq!(out.observation.text, format!("{INVALID_BANNER}\n{}", prev.text));
    }

    #[test]
    fn reselection_replaces_and_back_clears() {
        let (c, g) = fixture(1);
        let s = step(&item(), &Action::click("small"), &c, &g).unwrap().next_state;
        let s = step(&s, &Action::click("large"), &c, &g).unwrap().next_state;
        match &s {
            PageState::ItemPage { selected_options, .. } => {
                assert_eq!(selected_options.len(), 1);
                assert_eq!(selected_options["size"], "large");
            }
            other => panic!("{other:?}"),
        }
        let s = step(&s, &Action::click(BACK_TO_SEARCH), &c, &g).unwrap().next_state;
        assert_eq!(s, PageState::SearchPage);
    }

    #[test]
    fn detail_pages_return_with_selection() {
        let (c, g) = fixture(1);
        let s = step(&item(), &Action::click("small"), &c, &g).unwrap().next_state;
        let out = step(&s, &Action::click("Description"), &c, &g).unwrap();
        assert_eq!(out.observation.page_type, PageType::DetailPage);
        assert!(out.observation.text.contains("Description: A bright citrus stick."));
        let back = step(&out.next_state, &Action::click(PREV_PAGE), &c, &g).unwrap();
        assert_eq!(back.next_state, s);
        let feats = step(&s, &Action::click("features"), &c, &g).unwrap();
        assert!(feats.observation.text.contains("- Fruit Scent design"));
        let to_results = step(&item(), &Action::click(PREV_PAGE), &c, &g).unwrap();
        assert_eq!(to_results.next_state, results(0));
    }

    #[test]
    fn think_is_a_no_op() {
        let (c, g) = fixture(2);
        let out = step(&item(), &Action::think("compare sizes"), &c, &g).unwrap();
        assert!(out.valid);
        assert_eq!(out.next_state, item());
        assert_eq!(out.observation.text, THINK_RESPONSE);
    }

    #[test]
    fn search_is_search_page_only() {
        let (c, g) = fixture(2);
        assert!(!step(&results(0), &Action::search("x"), &c, &g).unwrap().valid);
        assert!(!step(&PageState::SearchPage, &Action::search("!!"), &c, &g).unwrap().valid);
        let empty = step(&PageState::SearchPage, &Action::search("bicycle"), &c, &g).unwrap();
        assert!(empty.valid);
        assert!(empty.observation.text.contains("No results found."));
    }
}
