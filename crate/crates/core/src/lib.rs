//! Property-graph engine for legal rules.
//!
//! Rules are stored as typed nodes and edges in a [`PropertyGraph`],
//! checked against a declarative [`TypeSchema`], and reasoned over by the
//! [`logic`], [`spatial`], [`temporal`] and [`defeasibility`] modules.
//! The [`query`] module implements a Cypher-like pattern language.

pub mod defeasibility;
pub mod graph;
pub mod ingest;
pub mod logic;
pub mod query;
pub mod schema;
pub mod spatial;
pub mod temporal;
pub mod value;

pub use defeasibility::{resolve, DefeasibilityError, Ruling};
pub use graph::{EdgeId, GraphError, NodeId, PropertyGraph};
pub use ingest::{load_graph, parse_document, IngestError, RuleDocument};
pub use logic::EvalContext;
pub use schema::{validate_graph, TypeSchema, Violation, ViolationKind};
pub use spatial::{GeoPoint, Region};
pub use value::Value;
