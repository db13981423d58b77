//! Product records, the catalog container, and the catalog file format.
//!
//! A catalog file is a single UTF-8 JSON array of product records. Prices
//! are strings with exactly two decimals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::price::Price;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Product {
    pub id: String,
    pub title: String,
    pub category: String,
    pub attributes: BTreeSet<String>,
    /// Option group name to the values offered, in display order.
    pub options: BTreeMap<String, Vec<String>>,
    pub price: Price,
    pub description: String,
    pub features: Vec<String>,
}

impl Product {
    fn check(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.price.cents() == 0 {
            return Err("price must be positive".into());
        }
        if self.attributes.is_empty() {
            return Err("attributes must be non-empty".into());
        }
        if let Some(a) = self.attributes.iter().find(|a| a.to_lowercase() != **a) {
            return Err(format!("attribute {a:?} is not lowercase"));
        }
        if let Some((name, _)) = self.options.iter().find(|(_, v)| v.is_empty()) {
            return Err(format!("option {name:?} has no values"));
        }
        Ok(())
    }

    pub fn offers(&self, option: &str, value: &str) -> bool {
        self.options.get(option).is_some_and(|vals| vals.iter().any(|v| v == value))
    }
}

/// Products ordered by id, with ids unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    products: Vec<Product>,
    seed: Option<u64>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(mut products: Vec<Product>, seed: Option<u64>) -> Result<Self, EnvError> {
        for p in &products {
            p.check().map_err(|reason| EnvError::InvalidProduct { id: p.id.clone(), reason })?;
        }
        products.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = products.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(EnvError::DuplicateId(w[0].id.clone()));
        }
        let index = products.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
        Ok(Catalog { products, seed, index })
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Product> {
        self.index.get(id).map(|&i| &self.products[i])
    }

    pub fn product(&self, id: &str) -> Result<&Product, EnvError> {
        self.get(id).ok_or_else(|| EnvError::UnknownProductId(id.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.products).expect("products serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let products: Vec<Product> = parse_located(text)?;
        Catalog::new(products, None)
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        fs::write(path, self.to_json()).map_err(|e| EnvError::io(path, e))
    }
}

pub fn load_catalog(path: &Path) -> Result<Catalog, EnvError> {
    let text = fs::read_to_string(path).map_err(|e| EnvError::io(path, e))?;
    Catalog::from_json(&text)
}

/// Deserializes JSON, reporting the line, column and field path of the first error.
pub(crate) fn parse_located<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, EnvError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        EnvError::Parse { line: inner.line(), column: inner.column(), field, message: inner.to_string() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(id: &str) -> Product {
        Product {
            id: id.into(),
            title: format!("Item {id}"),
            category: "deodorant".into(),
            attributes: ["fruit scent".to_string()].into(),
            options: [("size".to_string(), vec!["small".to_string()])].into(),
            price: Price::from_cents(1500),
            description: "d".into(),
            features: vec![],
        }
    }

    fn to_file(products: &[Product]) -> String {
        serde_json::to_string(products).unwrap()
    }

    #[test]
    fn empty_file_gives_empty_catalog() {
        let c = Catalog::from_json("[]").unwrap();
        assert!(c.is_empty());
        assert_eq!(c.seed(), None);
    }

    #[test]
    fn sorts_by_id() {
        let c = Catalog::from_json(&to_file(&[product("b2"), product("a1")])).unwrap();
        let ids: Vec<_> = c.products().iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["a1", "b2"]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Catalog::from_json(&to_file(&[product("a1"), product("a1")])).unwrap_err();
        assert!(matches!(err, EnvError::DuplicateId(id) if id == "a1"));
    }

    #[test]
    fn parse_error_carries_location() {
        let text = "[\n  {\"id\": \"a1\", \"title\": 5}\n]";
        match Catalog::from_json(text).unwrap_err() {
            EnvError::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "[0].title");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariants_checked() {
        let mut p = product("a1");
        p.options.insert("color".into(), vec![]);
        assert!(matches!(Catalog::new(vec![p], None), Err(EnvError::InvalidProduct { .. })));
        let mut p = product("a1");
        p.price = Price::from_cents(0);
        assert!(Catalog::new(vec![p], None).is_err());
        let mut p = product("a1");
        p.attributes.clear();
        assert!(Catalog::new(vec![p], None).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let c = Catalog::new(vec![product("x"), product("y")], None).unwrap();
        let back = Catalog::from_json(&c.to_json()).unwrap();
        assert_eq!(back.products(), c.products());
    }
}
