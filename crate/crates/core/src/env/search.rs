//! Keyword-overlap search over a catalog.

use std::collections::BTreeSet;

use super::catalog::{Catalog, Product};
use super::EnvError;

/// Lowercased alphanumeric runs. No stemming.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn document_tokens(p: &Product) -> BTreeSet<String> {
    let mut tokens = tokenize(&p.title);
    tokens.extend(tokenize(&p.category));
    for a in &p.attributes {
        tokens.extend(tokenize(a));
    }
    tokens
}

/// Product ids ordered by overlap fraction (descending) then id (ascending).
/// Products with no overlap are dropped.
pub fn search_rank(catalog: &Catalog, query: &str) -> Result<Vec<String>, EnvError> {
    let q = tokenize(query);
    if q.is_empty() {
        return Err(EnvError::EmptyQuery);
    }
    // Every product shares the denominator |q|, so ranking by raw overlap
    // count is exact.
    let mut scored: Vec<(usize, &str)> = catalog
        .products()
        .iter()
        .map(|p| (document_tokens(p).intersection(&q).count(), p.id.as_str()))
        .filter(|(n, _)| *n > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored.into_iter().map(|(_, id)| id.to_string()).collect())
}
