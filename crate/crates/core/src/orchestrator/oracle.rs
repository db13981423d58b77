//! Reference policy that buys the catalog-wide best product.

use std::collections::VecDeque;

use crate::action::Action;
use crate::env::page::{BUY_NOW, NEXT_PAGE, RESULTS_PER_PAGE};
use crate::env::score::best_selection;
use crate::env::{best_purchase, search_rank, Catalog, GoalSpec, Observation};
use crate::prompting::HistoryEntry;

use super::{Decision, OrchestratorError, Policy};

/// Replays a precomputed action plan: search, page forward to the target,
/// open it, select the required option values it offers, buy.
pub struct OraclePolicy {
    plan: Result<VecDeque<Action>, PlanError>,
}

enum PlanError {
    NoProduct(String),
    Other(String),
}

impl OraclePolicy {
    pub fn new(catalog: &Catalog, goal: &GoalSpec) -> Self {
        let plan = Self::plan(catalog, goal).map(VecDeque::from).map_err(|e| match e {
            OrchestratorError::NoProductFound { query } => PlanError::NoProduct(query),
            other => PlanError::Other(other.to_string()),
        });
        OraclePolicy { plan }
    }

    /// The full action sequence, or `NoProductFound` when neither the
    /// category-plus-attributes query nor the category-only query reaches
    /// the best product.
    pub fn plan(catalog: &Catalog, goal: &GoalSpec) -> Result<Vec<Action>, OrchestratorError> {
        let category_query = goal.target_category.clone();
        let full_query = goal
            .required_attributes
            .iter()
            .map(String::as_str)
            .chain([goal.target_category.as_str()])
            .collect::<Vec<_>>()
            .join(" ");
        let Some((target, _)) = best_purchase(goal, catalog) else {
            return Err(OrchestratorError::NoProductFound { query: full_query });
        };
        let product = catalog.product(&target.product_id)?;
        for query in [&full_query, &category_query] {
            let Ok(ranked) = search_rank(catalog, query) else { continue };
            let Some(pos) = ranked.iter().position(|id| *id == product.id) else { continue };
            let page_index = pos / RESULTS_PER_PAGE;
            // Clicks resolve to the first matching label on the page.
            let first_with_title = ranked
                .iter()
                .skip(page_index * RESULTS_PER_PAGE)
                .take(RESULTS_PER_PAGE)
                .find(|id| catalog.get(id).is_some_and(|p| p.title.eq_ignore_ascii_case(&product.title)));
            if first_with_title != Some(&product.id) {
                continue;
            }
            let mut plan = vec![Action::search(query.as_str())];
            plan.extend((0..page_index).map(|_| Action::click(NEXT_PAGE)));
            plan.push(Action::click(product.title.as_str()));
            plan.extend(best_selection(product, goal).into_values().map(Action::click));
            plan.push(Action::click(BUY_NOW));
            return Ok(plan);
        }
        Err(OrchestratorError::NoProductFound { query: category_query })
    }
}

impl Policy for OraclePolicy {
    fn decide(
        &mut self,
        _goal: &GoalSpec,
        _history: &[HistoryEntry],
        _page: &Observation,
    ) -> Result<Decision, OrchestratorError> {
        let plan = self.plan.as_mut().map_err(|e| match e {
            PlanError::NoProduct(query) => OrchestratorError::NoProductFound { query: query.clone() },
            PlanError::Other(msg) => OrchestratorError::Policy(msg.clone()),
        })?;
        let action = plan.pop_front().ok_or_else(|| OrchestratorError::Policy("oracle plan exhausted".into()))?;
        Ok(Decision::raw(action.canonicalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::goals::generate_goals;
    use crate::env::{generate_catalog, Product};
    use crate::orchestrator::{run_episode, Limits, Mode, Termination};
    use crate::price::Price;

    #[test]
    fn oracle_solves_generated_goals() {
        let c = generate_catalog(11, 120);
        for g in generate_goals(&c, 5, 30).unwrap() {
            let mut o = OraclePolicy::new(&c, &g);
            let ep = run_episode(&c, &g, Mode::Act, &mut o, None, &Limits::default());
            assert_eq!(ep.termination, Termination::Purchased, "{:?}", ep.error);
            assert_eq!(ep.score, 1.0);
            assert!(ep.steps.iter().all(|s| s.valid));
        }
    }

    #[test]
    fn unreachable_product_is_reported() {
        let product = Product {
            id: "a1".into(),
            title: "Plain Widget".into(),
            category: "widget".into(),
            attributes: ["blue".to_string()].into(),
            options: Default::default(),
            price: Price::from_cents(500),
            description: String::new(),
            features: vec![],
        };
        let c = Catalog::new(vec![product], None).unwrap();
        let goal = GoalSpec {
            instruction_text: "Find me a red gizmo".into(),
            target_category: "gizmo".into(),
            required_attributes: ["red".to_string()].into(),
            required_options: Default::default(),
            price_cap: None,
            solvable: false,
        };
        let err = OraclePolicy::plan(&c, &goal).unwrap_err();
        assert!(matches!(err, OrchestratorError::NoProductFound { .. }));
        let ep = run_episode(&c, &goal, Mode::Act, &mut OraclePolicy::new(&c, &goal), None, &Limits::default());
        assert_eq!(ep.termination, Termination::PolicyError);
    }
}
