//! A small Cypher-like pattern language over a [`PropertyGraph`].
//!
//! ```text
//! query  := ["SUBCLASS" "MATCH"] (match | where)+ return
//! match  := "MATCH" path ("," path)*
//! path   := node (edge node)*
//! node   := "(" var? (":" label)? props? ")"
//! edge   := "-[" var? (":" type)? props? "]->" | "<-[" ... "]-"
//! props  := "{" key ":" literal ("," key ":" literal)* "}"
//! where  := "WHERE" expr
//! return := "RETURN" "DISTINCT"? item ("," item)* ("ORDER" "BY" key ("," key)*)?
//! ```
//!
//! All MATCH and WHERE clauses of a query form one conjunction; matching
//! is homomorphic, so distinct variables may bind the same element.
//! Anonymous pattern elements are enumerated like variables and multiply
//! rows. A comparison with a missing property is false.

mod ast;
mod exec;
mod parser;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use exec::{execute_with, ExecOptions, DEFAULT_MAX_BINDINGS};
pub use parser::parse_query;

use crate::graph::PropertyGraph;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unbound variable `{name}` at {line}:{col}")]
    UnboundVariable { name: String, line: usize, col: usize },
    #[error("variable `{name}` at {line}:{col} is used for both nodes and relationships")]
    VariableKind { name: String, line: usize, col: usize },
    #[error("ORDER BY with DISTINCT must name a returned column")]
    OrderByNotReturned,
    #[error("more than {0} bindings; narrow the query or raise the limit")]
    BindingLimit(usize),
}

/// Query output. Every row has one cell per column; `None` is null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<Value>>>,
}

impl ResultTable {
    /// Cell text: strings unquoted, null as the empty string.
    pub fn cell(v: &Option<Value>) -> String {
        v.as_ref().map(Value::render).unwrap_or_default()
    }

    /// Rows as objects keyed by column name.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.clone(), serde_json::to_value(v).expect("values serialize")))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::json!({ "columns": self.columns, "rows": serde_json::Value::Array(rows) })
    }
}

impl fmt::Display for ResultTable {
    /// Aligned text with a header rule.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Self::cell).collect()).collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                cells
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([c.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |f: &mut fmt::Formatter<'_>, parts: &[String]| -> fmt::Result {
            let padded: Vec<String> = parts
                .iter()
                .zip(&widths)
                .map(|(p, w)| format!("{p:<w$}"))
                .collect();
            writeln!(f, "{}", padded.join(" | ").trim_end())
        };
        line(f, &self.columns)?;
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(f, "{}", rule.join("-+-"))?;
        for r in &cells {
            line(f, r)?;
        }
        write!(f, "({} row{})", self.rows.len(), if self.rows.len() == 1 { "" } else { "s" })
    }
}

/// Runs a parsed query with the default binding cap.
pub fn execute(q: &Query, graph: &PropertyGraph) -> Result<ResultTable, QueryError> {
    execute_with(q, graph, ExecOptions::default())
}

/// Parses and runs query text.
pub fn run_query(text: &str, graph: &PropertyGraph) -> Result<ResultTable, QueryError> {
    execute(&parse_query(text)?, graph)
}
