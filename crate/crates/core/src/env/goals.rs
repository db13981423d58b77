//! Goal specifications: the target state plus its natural-language instruction.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{parse_located, Catalog, Product};
use super::score::{best_selection, breakdown};
use super::EnvError;
use crate::price::Price;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub instruction_text: String,
    pub target_category: String,
    pub required_attributes: BTreeSet<String>,
    pub required_options: BTreeMap<String, String>,
    pub price_cap: Option<Price>,
    pub solvable: bool,
}

impl GoalSpec {
    pub fn component_count(&self) -> usize {
        self.required_attributes.len() + self.required_options.len() + usize::from(self.price_cap.is_some())
    }

    /// Renders the fixed instruction template, omitting empty clauses.
    pub fn render_instruction(
        category: &str,
        attributes: &BTreeSet<String>,
        options: &BTreeMap<String, String>,
        price_cap: Option<Price>,
    ) -> String {
        let mut s = String::from("Find me a ");
        if !attributes.is_empty() {
            s.push_str(&attributes.iter().cloned().collect::<Vec<_>>().join(" and "));
            s.push(' ');
        }
        s.push_str(category);
        if !options.is_empty() {
            s.push_str(" with ");
            s.push_str(&options.values().cloned().collect::<Vec<_>>().join(" and "));
        }
        if let Some(cap) = price_cap {
            s.push_str(if options.is_empty() { " with" } else { ", and" });
            s.push_str(&format!(" price lower than {cap} dollars"));
        }
        s
    }

    /// Recomputes `solvable` by scoring every catalog product with its best selection.
    pub fn compute_solvable(&self, catalog: &Catalog) -> bool {
        catalog.products().iter().any(|p| breakdown(p, &best_selection(p, self), self).is_perfect())
    }

    fn check(&self) -> Result<(), String> {
        if self.component_count() == 0 {
            return Err("goal has no components".into());
        }
        Ok(())
    }
}

fn pick(rng: &mut ChaCha8Rng, len: usize) -> usize {
    rng.gen_range(0..len as u32) as usize
}

fn goal_for(rng: &mut ChaCha8Rng, target: &Product, catalog: &Catalog) -> GoalSpec {
    let attrs: Vec<&String> = target.attributes.iter().collect();
    let n_attr = (1 + pick(rng, 2)).min(attrs.len());
    let mut pool: Vec<&String> = attrs.clone();
    let mut required_attributes = BTreeSet::new();
    for _ in 0..n_attr {
        required_attributes.insert(pool.swap_remove(pick(rng, pool.len())).clone());
    }

    let groups: Vec<(&String, &Vec<String>)> = target.options.iter().collect();
    let n_opt = pick(rng, groups.len().min(2) + 1);
    let mut pool = groups.clone();
    let mut required_options = BTreeMap::new();
    for _ in 0..n_opt {
        let (name, values) = pool.swap_remove(pick(rng, pool.len()));
        required_options.insert(name.clone(), values[pick(rng, values.len())].clone());
    }

    let price_cap = if rng.gen_bool(0.8) {
        // Up to 50% headroom, rounded up to a whole ten dollars.
        let headroom = rng.gen_range(0..=50u64);
        let raw = target.price.cents() * (100 + headroom) / 100;
        Some(Price::from_cents(raw.div_ceil(1000) * 1000))
    } else {
        None
    };

    let instruction_text =
        GoalSpec::render_instruction(&target.category, &required_attributes, &required_options, price_cap);
    let mut goal = GoalSpec {
        instruction_text,
        target_category: target.category.clone(),
        required_attributes,
        required_options,
        price_cap,
        solvable: false,
    };
    goal.solvable = goal.compute_solvable(catalog);
    goal
}

/// Deterministic in `(catalog, seed, n)`. Each goal is sampled from a target
/// product so it is solvable by construction.
pub fn generate_goals(catalog: &Catalog, seed: u64, n: usize) -> Result<Vec<GoalSpec>, EnvError> {
    if catalog.is_empty() {
        return Err(EnvError::EmptyCatalog);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let target = &catalog.products()[pick(&mut rng, catalog.len())];
            goal_for(&mut rng, target, catalog)
        })
        .collect())
}

pub fn goals_to_json(goals: &[GoalSpec]) -> String {
    let mut s = serde_json::to_string_pretty(goals).expect("goals serialize");
    s.push('\n');
    s
}

pub fn goals_from_json(text: &str) -> Result<Vec<GoalSpec>, EnvError> {
    let goals: Vec<GoalSpec> = parse_located(text)?;
    for (i, g) in goals.iter().enumerate() {
        g.check().map_err(|reason| EnvError::InvalidGoal { index: i, reason })?;
    }
    Ok(goals)
}

pub fn load_goals(path: &Path) -> Result<Vec<GoalSpec>, EnvError> {
    let text = fs::read_to_string(path).map_err(|e| EnvError::io(path, e))?;
    goals_from_json(&text)
}

pub fn save_goals(goals: &[GoalSpec], path: &Path) -> Result<(), EnvError> {
    fs::write(path, goals_to_json(goals)).map_err(|e| EnvError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::generate::generate_catalog;
    use crate::env::score::{score, Purchase};

    #[test]
    fn generated_goals_are_solvable_and_deterministic() {
        let c = generate_catalog(7, 60);
        let a = generate_goals(&c, 11, 40).unwrap();
        let b = generate_goals(&c, 11, 40).unwrap();
        assert_eq!(a, b);
        for g in &a {
            assert!(g.solvable);
            assert!(g.component_count() >= 1);
            assert!(g.required_attributes.len() <= 2 && g.required_options.len() <= 2);
        }
    }

    #[test]
    fn capped_target_scores_one() {
        let c = generate_catalog(7, 60);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in c.products() {
            let g = goal_for(&mut rng, p, &c);
            if let Some(cap) = g.price_cap {
                assert!(cap >= p.price);
            }
            let purchase = Purchase { product_id: p.id.clone(), selected_options: g.required_options.clone() };
            assert_eq!(score(&purchase, &g, &c).unwrap(), 1.0);
        }
    }

    #[test]
    fn instruction_renders_both_clauses() {
        let text = GoalSpec::render_instruction(
            "deodorant",
            &["fruit scent".to_string()].into(),
            &[("size".to_string(), "small".to_string())].into(),
            Some(Price::from_cents(2000)),
        );
        assert_eq!(text, "Find me a fruit scent deodorant with small, and price lower than 20.00 dollars");
    }

    #[test]
    fn instruction_omits_empty_clauses() {
        let text = GoalSpec::render_instruction(
            "e-reader",
            &["black".to_string()].into(),
            &BTreeMap::new(),
            Some(Price::from_cents(27000)),
        );
        assert_eq!(text, "Find me a black e-reader with price lower than 270.00 dollars");
        let text = GoalSpec::render_instruction("e-reader", &["waterproof".to_string()].into(), &BTreeMap::new(), None);
        assert_eq!(text, "Find me a waterproof e-reader");
    }

    #[test]
    fn empty_catalog_rejected() {
        let c = Catalog::new(vec![], None).unwrap();
        assert!(matches!(generate_goals(&c, 1, 1), Err(EnvError::EmptyCatalog)));
    }

    #[test]
    fn goal_file_roundtrip_and_validation() {
        let c = generate_catalog(1, 20);
        let goals = generate_goals(&c, 2, 5).unwrap();
        assert_eq!(goals_from_json(&goals_to_json(&goals)).unwrap(), goals);
        let bad = r#"[{"instruction_text":"x","target_category":"c","required_attributes":[],"required_options":{},"price_cap":null,"solvable":false}]"#;
        assert!(matches!(goals_from_json(bad), Err(EnvError::InvalidGoal { index: 0, .. })));
    }
}
