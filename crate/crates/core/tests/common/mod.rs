#![allow(dead_code)]

pub mod geometry;
pub mod query;
pub mod resolver;

use std::path::PathBuf;
use std::sync::Arc;

use olgpp::ingest::{load_graph, parse_context, ContextFile};
use olgpp::{PropertyGraph, TypeSchema, Violation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load_with_violations(name: &str) -> (PropertyGraph, Vec<Violation>) {
    load_graph(&fixture_text(name), Arc::new(TypeSchema::builtin())).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Loads a fixture that must validate cleanly.
pub fn load(name: &str) -> PropertyGraph {
    let (g, v) = load_with_violations(name);
    assert!(v.is_empty(), "{name}: {v:?}");
    g
}

pub fn context(name: &str) -> ContextFile {
    parse_context(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
