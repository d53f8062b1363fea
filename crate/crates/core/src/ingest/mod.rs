//! Rule documents: parsing, serialization and graph construction.
//!
//! ```text
//! document {version: "1", source: "Carlsbad Municipal Code"}
//! origin {lat: 33.16, long: -117.35}
//! node n1 obligation_trigger {label: "Food truck parking"}
//! node n3 party {label: "Food Truck Vendor"}
//! edge B1 performed_by n1 -> n3 {type: "permission"}
//! ```
//!
//! A node record is `node [id] type[:subtype] {props}` and an edge record
//! is `edge [id] type src -> dst {props}`. The same content may be given as
//! JSON (see [`RuleDocument`]).

pub mod syntax;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BaseProps, GraphError, NewEdge, NewNode, NodeId, PropertyGraph, Status};
use crate::logic::EvalContext;
use crate::schema::{validate_graph, TypeSchema, Violation, ViolationKind};
use crate::spatial::{project, GeoPoint};
use crate::value::{quote, Geometry, TimeLiteral, Value};

pub use syntax::{parse_literal, SyntaxError};
use syntax::{parse_records, Item, Pos, Record};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: duplicate node id `{id}`")]
    DuplicateNodeId { id: String, line: usize },
    #[error("line {line}: duplicate edge id `{id}`")]
    DuplicateEdgeId { id: String, line: usize },
    #[error("line {line}: edge `{edge}` refers to undeclared node `{node}`")]
    UndeclaredNode { edge: String, node: String, line: usize },
    #[error("malformed JSON document: {0}")]
    Json(String),
    #[error("line {line}: {message}")]
    Context { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comments: Option<String>,
}

/// Anchor of the planar frame, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub lat: f64,
    pub long: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// `type` or `type:subtype`.
    #[serde(rename = "type")]
    pub node_type: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub props: BTreeMap<String, Value>,
    #[serde(skip)]
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "type")]
    pub edge_type: String,
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub props: BTreeMap<String, Value>,
    #[serde(skip)]
    pub line: usize,
}

/// Structural content of a rule document, before any schema checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDocument {
    #[serde(rename = "document")]
    pub meta: DocumentMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

impl RuleDocument {
    /// Same content, ignoring source line numbers.
    pub fn same_content(&self, other: &RuleDocument) -> bool {
        let strip = |d: &RuleDocument| {
            let mut d = d.clone();
            d.nodes.iter_mut().for_each(|n| n.line = 0);
            d.edges.iter_mut().for_each(|e| e.line = 0);
            d
        };
        strip(self) == strip(other)
    }
}

fn num_prop(props: &BTreeMap<String, Value>, key: &str) -> Option<f64> {
    props.get(key).and_then(Value::as_f64)
}

fn str_prop(props: &BTreeMap<String, Value>, key: &str) -> Option<String> {
    props.get(key).and_then(Value::as_str).map(str::to_string)
}

fn id_item(item: &Item) -> Option<String> {
    match item {
        Item::Word(w) if !w.contains(':') => Some(w.clone()),
        Item::Value(Value::Str(s)) => Some(s.clone()),
        Item::Value(Value::Num(n)) if n.fract() == 0.0 && *n >= 0.0 => Some(format!("{n}")),
        _ => None,
    }
}

/// Parses a rule document from its text form, or from JSON when the text
/// starts with `{`.
pub fn parse_document(text: &str) -> Result<RuleDocument, IngestError> {
    let doc = if text.trim_start().starts_with('{') {
        serde_json::from_str::<RuleDocument>(text).map_err(|e| IngestError::Json(e.to_string()))?
    } else {
        parse_text_document(text)?
    };
    check_references(&doc)?;
    Ok(doc)
}

fn parse_text_document(text: &str) -> Result<RuleDocument, IngestError> {
    let recs = parse_records(text)?;
    let Some(first) = recs.first() else {
        return Err(SyntaxError::at(Pos { line: 1, col: 1 }, "expected a `document` header").into());
    };
    if first.keyword != "document" {
        return Err(SyntaxError::at(first.pos, "expected a `document` header").into());
    }
    let meta = DocumentMeta {
        version: str_prop(&first.props, "version")
            .filter(|v| !v.trim().is_empty())
            .ok_or_else(|| SyntaxError::at(first.pos, "document header needs a nonempty `version`"))?,
        source: str_prop(&first.props, "source"),
        comments: str_prop(&first.props, "comments"),
    };
    let mut doc = RuleDocument {
        meta,
        origin: None,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    for rec in &recs[1..] {
        match rec.keyword.as_str() {
            "origin" => {
                if doc.origin.is_some() {
                    return Err(SyntaxError::at(rec.pos, "origin declared twice").into());
                }
                let (Some(lat), Some(long)) = (num_prop(&rec.props, "lat"), num_prop(&rec.props, "long")) else {
                    return Err(SyntaxError::at(rec.pos, "origin needs numeric `lat` and `long`").into());
                };
                doc.origin = Some(Origin { lat, long });
            }
            "node" => doc.nodes.push(node_record(rec)?),
            "edge" => doc.edges.push(edge_record(rec)?),
            "document" => return Err(SyntaxError::at(rec.pos, "duplicate `document` header").into()),
            other => {
                return Err(SyntaxError::at(
                    rec.pos,
                    format!("unknown record `{other}`; expected node, edge or origin"),
                )
                .into())
            }
        }
    }
    Ok(doc)
}

fn node_record(rec: &Record) -> Result<NodeSpec, SyntaxError> {
    let shape_err = || SyntaxError::at(rec.pos, "expected `node [id] type[:subtype] {props}`");
    let (id, ty) = match rec.items.as_slice() {
        [(Item::Word(t), _)] => (None, t.clone()),
        [(id, p), (Item::Word(t), _)] => {
            let id = id_item(id).ok_or_else(|| SyntaxError::at(*p, "malformed node id"))?;
            (Some(id), t.clone())
        }
        _ => return Err(shape_err()),
    };
    Ok(NodeSpec {
        id,
        node_type: ty,
        props: rec.props.clone(),
        line: rec.pos.line,
    })
}

fn edge_record(rec: &Record) -> Result<EdgeSpec, SyntaxError> {
    let shape_err = || SyntaxError::at(rec.pos, "expected `edge [id] type src -> dst {props}`");
    let arrow = rec
        .items
        .iter()
        .position(|(i, _)| *i == Item::Arrow)
        .ok_or_else(shape_err)?;
    let (head, tail) = rec.items.split_at(arrow);
    let tail = &tail[1..];
    let [(dst, dp)] = tail else {
        return Err(shape_err());
    };
    let endpoint = |item: &Item, p: Pos| id_item(item).ok_or_else(|| SyntaxError::at(p, "malformed node id"));
    let (id, ty, src) = match head {
        [(Item::Word(t), _), (s, sp)] => (None, t.clone(), endpoint(s, *sp)?),
        [(i, ip), (Item::Word(t), _), (s, sp)] => (
            Some(id_item(i).ok_or_else(|| SyntaxError::at(*ip, "malformed edge id"))?),
            t.clone(),
            endpoint(s, *sp)?,
        ),
        _ => return Err(shape_err()),
    };
    Ok(EdgeSpec {
        id,
        edge_type: ty,
        src,
        dst: endpoint(dst, *dp)?,
        props: rec.props.clone(),
        line: rec.pos.line,
    })
}

fn check_references(doc: &RuleDocument) -> Result<(), IngestError> {
    let mut nodes = HashSet::new();
    for n in &doc.nodes {
        if let Some(id) = &n.id {
            if !nodes.insert(id.as_str()) {
                return Err(IngestError::DuplicateNodeId {
                    id: id.clone(),
                    line: n.line,
                });
            }
        }
    }
    let mut edges = HashSet::new();
    for e in &doc.edges {
        let name = e.id.clone().unwrap_or_else(|| format!("{} {} -> {}", e.edge_type, e.src, e.dst));
        if let Some(id) = &e.id {
            if !edges.insert(id.as_str()) {
                return Err(IngestError::DuplicateEdgeId {
                    id: id.clone(),
                    line: e.line,
                });
            }
        }
        for end in [&e.src, &e.dst] {
            if !nodes.contains(end.as_str()) {
                return Err(IngestError::UndeclaredNode {
                    edge: name,
                    node: end.clone(),
                    line: e.line,
                });
            }
        }
    }
    Ok(())
}

fn is_bare_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '-')
        && !s.contains("->")
        && !matches!(s, "true" | "false")
}

fn word_or_quoted(s: &str) -> String {
    if is_bare_word(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn props_text(props: &BTreeMap<String, Value>) -> String {
    if props.is_empty() {
        return String::new();
    }
    let body: Vec<String> = props
        .iter()
        .map(|(k, v)| format!("{}: {v}", word_or_quoted(k)))
        .collect();
    format!(" {{{}}}", body.join(", "))
}

/// Serializes a document to the text form accepted by [`parse_document`].
pub fn to_text(doc: &RuleDocument) -> String {
    let mut header = BTreeMap::new();
    header.insert("version".to_string(), Value::Str(doc.meta.version.clone()));
    if let Some(s) = &doc.meta.source {
        header.insert("source".to_string(), Value::Str(s.clone()));
    }
    if let Some(c) = &doc.meta.comments {
        header.insert("comments".to_string(), Value::Str(c.clone()));
    }
    let mut out = format!("document{}\n", props_text(&header));
    if let Some(o) = doc.origin {
        let mut m = BTreeMap::new();
        m.insert("lat".to_string(), Value::Num(o.lat));
        m.insert("long".to_string(), Value::Num(o.long));
        out.push_str(&format!("origin{}\n", props_text(&m)));
    }
    for n in &doc.nodes {
        out.push_str("node ");
        if let Some(id) = &n.id {
            out.push_str(&word_or_quoted(id));
            out.push(' ');
        }
        out.push_str(&n.node_type);
        out.push_str(&props_text(&n.props));
        out.push('\n');
    }
    for e in &doc.edges {
        out.push_str("edge ");
        if let Some(id) = &e.id {
            out.push_str(&word_or_quoted(id));
            out.push(' ');
        }
        out.push_str(&format!(
            "{} {} -> {}{}\n",
            e.edge_type,
            word_or_quoted(&e.src),
            word_or_quoted(&e.dst),
            props_text(&e.props)
        ));
    }
    out
}

/// Meters per unit for the distance units accepted at ingest.
fn unit_factor(unit: &str) -> Option<f64> {
    Some(match unit.to_ascii_lowercase().as_str() {
        "m" | "meter" | "meters" | "metre" | "metres" => 1.0,
        "km" | "kilometer" | "kilometers" | "kilometre" | "kilometres" => 1000.0,
        "ft" | "foot" | "feet" => 0.3048,
        "yd" | "yard" | "yards" => 0.9144,
        "mi" | "mile" | "miles" => 1609.344,
        _ => return None,
    })
}

/// Parses `500ft`, `2 miles`, `300 meters` into meters.
pub fn parse_distance(s: &str) -> Option<f64> {
    let s = s.trim();
    let split = s
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let n: f64 = num.parse().ok()?;
    let unit = unit.trim();
    let f = if unit.is_empty() { 1.0 } else { unit_factor(unit)? };
    Some(n * f)
}

fn date_of(v: &Value) -> Option<NaiveDate> {
    match v {
        Value::Str(s) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .ok()
            .or_else(|| crate::temporal::parse_instant(s).ok().map(|t| t.date())),
        Value::Time(TimeLiteral::Instant(t)) => Some(t.date()),
        _ => None,
    }
}

/// Moves base properties out of the prop map and normalizes units.
/// Problems are reported against `subject`.
fn split_props(
    subject: &str,
    mut props: BTreeMap<String, Value>,
    out: &mut Vec<Violation>,
) -> (String, BTreeMap<String, Value>, BaseProps) {
    let mut base = BaseProps::default();
    let label = match props.remove("label") {
        Some(Value::Str(s)) => s,
        Some(other) => {
            out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("`label` must be string, found {}", other.kind()),
            ));
            other.render()
        }
        None => String::new(),
    };
    if let Some(v) = props.remove("status") {
        match v.as_str().and_then(Status::parse) {
            Some(s) => base.status = s,
            None => out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("`status` must be active, superseded or draft, found {v}"),
            )),
        }
    }
    for key in ["created_date", "modified_date"] {
        if let Some(v) = props.remove(key) {
            match date_of(&v) {
                Some(d) if key == "created_date" => base.created_date = Some(d),
                Some(d) => base.modified_date = Some(d),
                None => out.push(Violation::new(
                    ViolationKind::BadValueKind,
                    subject,
                    format!("`{key}` must be a date, found {v}"),
                )),
            }
        }
    }
    if let Some(v) = props.remove("temporal_validity") {
        match v.as_window() {
            Some(w) => base.temporal_validity = Some(w.clone()),
            None => out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("`temporal_validity` must be a window, found {}", v.kind()),
            )),
        }
    }
    if let Some(Value::Str(raw)) = props.get("distance").cloned() {
        match parse_distance(&raw) {
            Some(m) => {
                props.insert("distance".into(), Value::Num(m));
                let mut raws = match props.remove("raw") {
                    Some(Value::List(items)) => items,
                    Some(other) => vec![other],
                    None => Vec::new(),
                };
                raws.push(Value::Str(format!("distance: {raw}")));
                props.insert("raw".into(), Value::List(raws));
            }
            None => out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("`distance` value `{raw}` has no recognised unit"),
            )),
        }
    }
    (label, props, base)
}

fn node_subject(n: &NodeSpec, i: usize) -> String {
    n.id.clone().unwrap_or_else(|| format!("node#{}", i + 1))
}

/// Materializes a document. The graph is built even when violations
/// exist; elements that cannot be added at all are skipped and reported.
pub fn build_graph(doc: &RuleDocument, schema: Arc<TypeSchema>) -> (PropertyGraph, Vec<Violation>) {
    let mut graph = PropertyGraph::new(schema);
    let mut out = Vec::new();
    let origin = doc.origin.map(|o| (o.lat, o.long)).or_else(|| {
        doc.nodes.iter().find_map(|n| {
            Some((num_prop(&n.props, "lat")?, num_prop(&n.props, "long")?))
        })
    });
    let mut reified = Vec::new();
    for (i, n) in doc.nodes.iter().enumerate() {
        let subject = node_subject(n, i);
        // A location predicate given as a node with `from`/`to` becomes an edge.
        let is_pred = matches!(
            graph.schema().normalize_node_type(&n.node_type, None),
            Some((_, Some(ref s))) if s == "location_predicate"
        );
        if is_pred && n.props.contains_key("from") && n.props.contains_key("to") {
            reified.push((subject, n));
            continue;
        }
        let (label, mut props, base) = split_props(&subject, n.props.clone(), &mut out);
        if let (Some(o), Some(lat), Some(long)) = (origin, num_prop(&props, "lat"), num_prop(&props, "long")) {
            props
                .entry("position".into())
                .or_insert_with(|| Value::Geo(Geometry::Point(project(o, lat, long))));
        }
        let mut spec = NewNode::new(n.node_type.clone()).label(label);
        spec.id = n.id.clone();
        spec.props = props;
        spec.base = base;
        if let Err(e) = graph.add_node(spec) {
            out.push(graph_violation(&subject, e));
        }
    }
    for (i, e) in doc.edges.iter().enumerate() {
        let subject = e.id.clone().unwrap_or_else(|| format!("edge#{}", i + 1));
        let (_, props, base) = split_props(&subject, e.props.clone(), &mut out);
        let mut spec = NewEdge::new(e.edge_type.clone(), e.src.clone(), e.dst.clone());
        spec.id = e.id.clone();
        spec.props = props;
        spec.base = base;
        add_edge(&mut graph, subject, spec, &mut out);
    }
    for (subject, n) in reified {
        let mut props = n.props.clone();
        let from = props.remove("from").and_then(|v| v.as_str().map(str::to_string));
        let to = props.remove("to").and_then(|v| v.as_str().map(str::to_string));
        let (Some(from), Some(to)) = (from, to) else {
            out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                "location predicate `from` and `to` must be node ids",
            ));
            continue;
        };
        let (_, props, base) = split_props(&subject, props, &mut out);
        let mut spec = NewEdge::new("location_predicate", from, to);
        spec.id = n.id.clone();
        spec.props = props;
        spec.base = base;
        add_edge(&mut graph, subject, spec, &mut out);
    }
    out.extend(validate_graph(&graph));
    (graph, out)
}

fn add_edge(graph: &mut PropertyGraph, subject: String, spec: NewEdge, out: &mut Vec<Violation>) {
    for end in [&spec.src, &spec.dst] {
        if graph.node_ix(end).is_none() {
            out.push(Violation::new(
                ViolationKind::BadEndpoint,
                subject.clone(),
                format!("endpoint `{end}` was not materialized"),
            ));
            return;
        }
    }
    if let Err(e) = graph.add_edge(spec) {
        out.push(graph_violation(&subject, e));
    }
}

fn graph_violation(subject: &str, e: GraphError) -> Violation {
    let kind = match e {
        GraphError::UnknownNodeType(_) | GraphError::UnknownEdgeType(_) => ViolationKind::UnknownType,
        GraphError::MixedList(_) => ViolationKind::BadValueKind,
        GraphError::MissingEndpoint(_) | GraphError::MissingNode(_) => ViolationKind::BadEndpoint,
        // Rejected at parse time.
        GraphError::DuplicateId(_) => ViolationKind::BadValueKind,
    };
    Violation::new(kind, subject, e.to_string())
}

/// Parse and build in one step.
pub fn load_graph(text: &str, schema: Arc<TypeSchema>) -> Result<(PropertyGraph, Vec<Violation>), IngestError> {
    Ok(build_graph(&parse_document(text)?, schema))
}

/// Evaluation context read from a context file, plus an optional
/// candidate scope.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextFile {
    pub ctx: EvalContext,
    pub scope: Option<Vec<NodeId>>,
}

/// Parses a context file:
///
/// ```text
/// party vendor1
/// position point(1750, 1750)
/// instant at(2024-05-01T12:30)
/// fact permit true
/// scope ["o1", "o2"]
/// ```
pub fn parse_context(text: &str) -> Result<ContextFile, IngestError> {
    let recs = parse_records(text)?;
    let mut cf = ContextFile::default();
    let err = |rec: &Record, message: &str| IngestError::Context {
        line: rec.pos.line,
        message: message.to_string(),
    };
    for rec in &recs {
        let items: Vec<&Item> = rec.items.iter().map(|(i, _)| i).collect();
        if !rec.props.is_empty() {
            return Err(err(rec, "context records take no property map"));
        }
        match (rec.keyword.as_str(), items.as_slice()) {
            ("party", [id]) => {
                let id = id_item(id).ok_or_else(|| err(rec, "expected a party id"))?;
                if cf.ctx.party.replace(NodeId::new(id)).is_some() {
                    return Err(err(rec, "party given twice"));
                }
            }
            ("position", [Item::Value(Value::Geo(Geometry::Point(p)))]) => {
                if cf.ctx.position.replace(GeoPoint::new(p.x, p.y)).is_some() {
                    return Err(err(rec, "position given twice"));
                }
            }
            ("instant", [Item::Value(Value::Time(TimeLiteral::Instant(t)))]) => {
                if cf.ctx.instant.replace(*t).is_some() {
                    return Err(err(rec, "instant given twice"));
                }
            }
            ("fact", [name, Item::Value(Value::Bool(b))]) => {
                let name = id_item(name)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| err(rec, "expected `fact <name> true|false`"))?;
                if cf.ctx.facts.insert(name, *b).is_some() {
                    return Err(err(rec, "fact given twice"));
                }
            }
            ("scope", [Item::Value(Value::List(ids))]) => {
                let ids = ids
                    .iter()
                    .map(|v| v.as_str().map(NodeId::from))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err(rec, "scope must be a list of trigger ids"))?;
                cf.scope = Some(ids);
            }
            ("party" | "position" | "instant" | "fact" | "scope", _) => {
                return Err(err(
                    rec,
                    match rec.keyword.as_str() {
                        "party" => "expected `party <id>`",
                        "position" => "expected `position point(x,y)`",
                        "instant" => "expected `instant at(...)`",
                        "fact" => "expected `fact <name> true|false`",
                        _ => "expected `scope [\"id\", ...]`",
                    },
                ))
            }
            (other, _) => return Err(err(rec, &format!("unknown context record `{other}`"))),
        }
    }
    if cf.ctx.is_empty() {
        return Err(IngestError::Context {
            line: 1,
            message: "context needs at least one of party, position, instant or fact".into(),
        });
    }
    Ok(cf)
}
