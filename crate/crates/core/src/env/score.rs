//! Purchase scoring against a goal.
//!
//! A goal has one component per required attribute, one per required option
//! and one for the price cap when present. The score is the fraction of
//! components the purchase satisfies, and zero outright when the product is
//! in the wrong category.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, Product};
use super::goals::GoalSpec;
use super::EnvError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Purchase {
    pub product_id: String,
    pub selected_options: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreBreakdown {
    pub matched: usize,
    pub components: usize,
    pub category_match: bool,
}

impl ScoreBreakdown {
    pub fn value(&self) -> f64 {
        if !self.category_match || self.components == 0 {
            return 0.0;
        }
        self.matched as f64 / self.components as f64
    }

    pub fn is_perfect(&self) -> bool {
        self.category_match && self.components > 0 && self.matched == self.components
    }
}

pub fn breakdown(product: &Product, selected_options: &BTreeMap<String, String>, goal: &GoalSpec) -> ScoreBreakdown {
    let attrs = goal.required_attributes.iter().filter(|a| product.attributes.contains(*a)).count();
    let opts = goal.required_options.iter().filter(|(k, v)| selected_options.get(*k) == Some(*v)).count();
    let price = match goal.price_cap {
        Some(cap) if product.price <= cap => 1,
        _ => 0,
    };
    ScoreBreakdown {
        matched: attrs + opts + price,
        components: goal.component_count(),
        category_match: product.category == goal.target_category,
    }
}

/// Score in [0, 1]. Success means exactly 1.0.
pub fn score(purchase: &Purchase, goal: &GoalSpec, catalog: &Catalog) -> Result<f64, EnvError> {
    let product = catalog.product(&purchase.product_id)?;
    Ok(breakdown(product, &purchase.selected_options, goal).value())
}

/// The selection that maximizes this product's score: every required option
/// value the product actually offers.
pub fn best_selection(product: &Product, goal: &GoalSpec) -> BTreeMap<String, String> {
    goal.required_options.iter().filter(|(k, v)| product.offers(k, v)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

/// Catalog-wide best purchase; ties go to the smallest id.
pub fn best_purchase(goal: &GoalSpec, catalog: &Catalog) -> Option<(Purchase, f64)> {
    let mut best: Option<(Purchase, f64)> = None;
    for p in catalog.products() {
        let sel = best_selection(p, goal);
        let s = breakdown(p, &sel, goal).value();
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((Purchase { product_id: p.id.clone(), selected_options: sel }, s));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::catalog::Product;
    use crate::price::Price;

    fn fixture() -> (Catalog, GoalSpec) {
        let mk = |id: &str, cat: &str, attrs: &[&str], price: u64| Product {
            id: id.into(),
            title: format!("T {id}"),
            category: cat.into(),
            attributes: attrs.iter().map(|s| s.to_string()).collect(),
            options: [("size".to_string(), vec!["small".to_string(), "large".to_string()])].into(),
            price: Price::from_cents(price),
            description: String::new(),
            features: vec![],
        };
        let catalog = Catalog::new(
            vec![
                mk("a", "deodorant", &["fruit scent", "natural"], 1500),
                mk("b", "toaster", &["fruit scent", "natural"], 1500),
            ],
            None,
        )
        .unwrap();
        let goal = GoalSpec {
            instruction_text: "x".into(),
            target_category: "deodorant".into(),
            required_attributes: ["fruit scent".to_string(), "natural".to_string()].into(),
            required_options: [("size".to_string(), "small".to_string())].into(),
            price_cap: Some(Price::from_cents(2000)),
            solvable: true,
        };
        (catalog, goal)
    }

    fn purchase(id: &str, size: &str) -> Purchase {
        Purchase { product_id: id.into(), selected_options: [("size".to_string(), size.to_string())].into() }
    }

    #[test]
    fn exact_match_scores_one() {
        let (c, g) = fixture();
        assert_eq!(score(&purchase("a", "small"), &g, &c).unwrap(), 1.0);
    }

    #[test]
    fn wrong_category_scores_zero() {
        let (c, g) = fixture();
        assert_eq!(score(&purchase("b", "small"), &g, &c).unwrap(), 0.0);
    }

    #[test]
    fn wrong_option_value_loses_one_of_four() {
        // 2 attributes + 1 option + cap = 4 components; 3 matched.
        let (c, g) = fixture();
        assert_eq!(score(&purchase("a", "large"), &g, &c).unwrap(), 0.75);
    }

    #[test]
    fn unknown_product() {
        let (c, g) = fixture();
        assert!(matches!(score(&purchase("zz", "small"), &g, &c), Err(EnvError::UnknownProductId(_))));
    }

    #[test]
    fn best_purchase_prefers_category_match() {
        let (c, g) = fixture();
        let (p, s) = best_purchase(&g, &c).unwrap();
        assert_eq!(p.product_id, "a");
        assert_eq!(s, 1.0);
    }
}
