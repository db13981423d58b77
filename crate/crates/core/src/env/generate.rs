//! Seeded catalog generation from built-in vocabularies.
//!
//! Products cycle through the categories. After the first product of a
//! category exists, roughly half of the later ones are near-duplicates of an
//! earlier sibling that differ in exactly one attribute or one option group,
//! so that search results always contain plausible distractors.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::catalog::{Catalog, Product};
use crate::price::Price;

struct CategoryVocab {
    category: &'static str,
    noun: &'static str,
    brands: &'static [&'static str],
    attributes: &'static [&'static str],
    options: &'static [(&'static str, &'static [&'static str])],
    price_cents: (u32, u32),
    blurb: &'static str,
}

const VOCAB: &[CategoryVocab] = &[
    CategoryVocab {
        category: "deodorant",
        noun: "Deodorant",
        brands: &["Brightleaf", "Pure Harbor", "Nordic Fern"],
        attributes: &["fruit scent", "aluminum free", "long lasting", "natural", "sensitive skin", "travel size"],
        options: &[("size", &["small", "medium", "large"]), ("scent", &["citrus", "rose", "vanilla", "lavender"])],
        price_cents: (400, 2500),
        blurb: "Keeps you fresh all day with a gentle formula.",
    },
    CategoryVocab {
        category: "e-reader",
        noun: "E-Reader",
        brands: &["Pagewise", "Inkhaven", "Lumen"],
        attributes: &["waterproof", "backlit", "lightweight", "high resolution", "long battery life"],
        options: &[("color", &["black", "white", "sage"]), ("storage", &["8gb", "16gb", "32gb"])],
        price_cents: (7900, 29900),
        blurb: "A glare-free screen that reads like paper.",
    },
    CategoryVocab {
        category: "t-shirt",
        noun: "T-Shirt",
        brands: &["Harbor Thread", "Northway", "Basics Co"],
        attributes: &["cotton", "slim fit", "moisture wicking", "crew neck", "short sleeve"],
        options: &[
            ("size", &["x-small", "small", "medium", "large", "x-large"]),
            ("color", &["navy", "heather gray", "red", "olive"]),
        ],
        price_cents: (899, 3499),
        blurb: "Soft everyday shirt that holds its shape wash after wash.",
    },
    CategoryVocab {
        category: "toaster",
        noun: "Toaster",
        brands: &["Crumbly", "Kitchen Arc", "Goldcrust"],
        attributes: &["stainless steel", "wide slot", "compact", "bagel setting", "digital display"],
        options: &[("slots", &["2 slice", "4 slice"]), ("color", &["silver", "black", "red"])],
        price_cents: (1999, 8999),
        blurb: "Even browning with seven shade settings.",
    },
    CategoryVocab {
        category: "headphones",
        noun: "Headphones",
        brands: &["Sonaris", "Quietwave", "Audiobloom"],
        attributes: &["wireless", "noise cancelling", "over ear", "foldable", "bluetooth"],
        options: &[("color", &["black", "blue", "white"]), ("edition", &["standard", "pro"])],
        price_cents: (2499, 34999),
        blurb: "Rich sound with comfortable cushioned ear cups.",
    },
    CategoryVocab {
        category: "coffee",
        noun: "Coffee",
        brands: &["Morning Ridge", "Bean Theory", "Cafe Lumo"],
        attributes: &["organic", "dark roast", "fair trade", "whole bean", "decaf"],
        options: &[("size", &["12 ounce", "2 pound"]), ("flavor", &["original", "hazelnut", "mocha"])],
        price_cents: (799, 3999),
        blurb: "Small-batch roasted for a smooth, balanced cup.",
    },
    CategoryVocab {
        category: "shampoo",
        noun: "Shampoo",
        brands: &["Silkroot", "Clearbrook", "Herbalist"],
        attributes: &["sulfate free", "paraben free", "moisturizing", "color safe", "tea tree"],
        options: &[("size", &["8 fl oz", "16 fl oz", "32 fl oz"]), ("quantity", &["1 pack", "2 pack", "3 pack"])],
        price_cents: (599, 2999),
        blurb: "Cleanses gently while restoring shine.",
    },
    CategoryVocab {
        category: "backpack",
        noun: "Backpack",
        brands: &["Trailmark", "Citypack", "Summit Gear"],
        attributes: &["water resistant", "laptop compartment", "lightweight", "anti theft", "usb charging"],
        options: &[("color", &["black", "gray", "navy", "green"]), ("capacity", &["20l", "30l", "40l"])],
        price_cents: (1999, 12999),
        blurb: "Padded straps and smart pockets for daily carry.",
    },
];

/// Names of the built-in categories, in generation order.
pub fn categories() -> impl Iterator<Item = &'static str> {
    VOCAB.iter().map(|v| v.category)
}

fn pick(rng: &mut ChaCha8Rng, len: usize) -> usize {
    rng.gen_range(0..len as u32) as usize
}

/// Sample `k` distinct indices below `len`, returned ascending.
fn sample_indices(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(len) {
        out.push(pool.swap_remove(pick(rng, pool.len())));
    }
    out.sort_unstable();
    out
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Draft {
    vocab: usize,
    brand: usize,
    attributes: BTreeSet<String>,
    options: BTreeMap<String, Vec<String>>,
    price: u64,
}

fn fresh(rng: &mut ChaCha8Rng, vocab_idx: usize) -> Draft {
    let v = &VOCAB[vocab_idx];
    let n_attr = 2 + pick(rng, 2);
    let attributes =
        sample_indices(rng, v.attributes.len(), n_attr).into_iter().map(|i| v.attributes[i].to_string()).collect();
    let options = v
        .options
        .iter()
        .map(|(name, values)| {
            let k = 2 + pick(rng, values.len() - 1);
            let chosen = sample_indices(rng, values.len(), k.min(values.len()))
                .into_iter()
                .map(|i| values[i].to_string())
                .collect();
            (name.to_string(), chosen)
        })
        .collect();
    let price = rng.gen_range(v.price_cents.0..=v.price_cents.1) as u64;
    Draft { vocab: vocab_idx, brand: pick(rng, v.brands.len()), attributes, options, price }
}

/// Copy `base` and change exactly one attribute or one option group.
fn distractor(rng: &mut ChaCha8Rng, base: &Draft) -> Draft {
    let v = &VOCAB[base.vocab];
    let mut attributes = base.attributes.clone();
    let mut options = base.options.clone();
    let unused: Vec<&str> = v.attributes.iter().copied().filter(|a| !attributes.contains(*a)).collect();
    if rng.gen_bool(0.5) && !unused.is_empty() {
        let current: Vec<String> = attributes.iter().cloned().collect();
        attributes.remove(&current[pick(rng, current.len())]);
        attributes.insert(unused[pick(rng, unused.len())].to_string());
    } else {
        let (name, vocab_values) = v.options[pick(rng, v.options.len())];
        let values = options.get_mut(name).expect("group present");
        let missing: Vec<&str> = vocab_values.iter().copied().filter(|x| !values.iter().any(|y| y == x)).collect();
        if values.len() > 1 && (missing.is_empty() || rng.gen_bool(0.5)) {
            values.remove(pick(rng, values.len()));
        } else if !missing.is_empty() {
            let add = missing[pick(rng, missing.len())];
            values.push(add.to_string());
            values.sort_by_key(|x| vocab_values.iter().position(|y| y == x));
        }
    }
    Draft { vocab: base.vocab, brand: base.brand, attributes, options, price: base.price }
}

fn finish(draft: Draft, id: String, titles: &mut HashSet<String>) -> Product {
    let v = &VOCAB[draft.vocab];
    let attr_words: Vec<String> = draft.attributes.iter().map(|a| title_case(a)).collect();
    let base_title = format!("{} {} {}", v.brands[draft.brand], attr_words.join(" "), v.noun);
    let mut title = base_title.clone();
    let mut k = 2;
    while !titles.insert(title.to_lowercase()) {
        title = format!("{base_title}, Style {k}");
        k += 1;
    }
    let description = format!(
        "{title}. {} This {} is {}.",
        v.blurb,
        v.category,
        draft.attributes.iter().cloned().collect::<Vec<_>>().join(", ")
    );
    let features = draft
        .attributes
        .iter()
        .map(|a| format!("{} design", title_case(a)))
        .chain(std::iter::once(format!("Sold by {}", v.brands[draft.brand])))
        .collect();
    Product {
        id,
        title,
        category: v.category.to_string(),
        attributes: draft.attributes,
        options: draft.options,
        price: Price::from_cents(draft.price),
        description,
        features,
    }
}

/// Deterministic in `(seed, n)`. `n` must be at least 1.
pub fn generate_catalog(seed: u64, n: usize) -> Catalog {
    assert!(n >= 1, "catalog size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drafts: Vec<Draft> = Vec::with_capacity(n);
    for i in 0..n {
        let vocab_idx = i % VOCAB.len();
        let siblings: Vec<usize> = (0..drafts.len()).filter(|&j| drafts[j].vocab == vocab_idx).collect();
        let d = if !siblings.is_empty() && rng.gen_bool(0.5) {
            let base = siblings[pick(&mut rng, siblings.len())];
            distractor(&mut rng, &drafts[base])
        } else {
            fresh(&mut rng, vocab_idx)
        };
        drafts.push(d);
    }
    let mut titles = HashSet::new();
    let products = drafts.into_iter().enumerate().map(|(i, d)| finish(d, format!("p{i:05}"), &mut titles)).collect();
    Catalog::new(products, Some(seed)).expect("generated catalog is valid")
}
