//! The OLG++ type vocabulary and whole-graph structural validation.
//!
//! The vocabulary is loaded from a declarative schema file; the built-in
//! one ships in `schema/olgpp.schema`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{NodeId, NodeIx, NodeRecord, PropertyGraph};
use crate::ingest::syntax::{parse_records, Item, Record, SyntaxError};
use crate::spatial::{GeoPoint, Region};
use crate::value::{Value, ValueKind};

pub const BUILTIN_SCHEMA: &str = include_str!("../schema/olgpp.schema");

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("schema line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("reading schema file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubclassError {
    #[error("no node `{0}`")]
    MissingNode(String),
    #[error("subclass_of cycle through `{0}`")]
    SubclassCycle(NodeId),
}

/// A property rule: the property name plus the admissible value kinds
/// (empty means any kind).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropRule {
    pub name: String,
    pub kinds: Vec<ValueKind>,
}

impl PropRule {
    fn parse(spec: &str) -> Result<Self, String> {
        let (name, kinds) = match spec.split_once(':') {
            Some((n, k)) => (n, Some(k)),
            None => (spec, None),
        };
        let kinds = match kinds {
            None => Vec::new(),
            Some(k) => k
                .split('|')
                .map(|k| kind_by_name(k.trim()).ok_or_else(|| format!("unknown value kind `{k}`")))
                .collect::<Result<_, _>>()?,
        };
        Ok(PropRule {
            name: name.trim().to_string(),
            kinds,
        })
    }

    pub fn admits(&self, v: &Value) -> bool {
        self.kinds.is_empty() || self.kinds.contains(&v.kind())
    }

    fn kinds_text(&self) -> String {
        self.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("|")
    }
}

fn kind_by_name(s: &str) -> Option<ValueKind> {
    Some(match s {
        "string" => ValueKind::String,
        "number" => ValueKind::Number,
        "bool" => ValueKind::Bool,
        "list" => ValueKind::List,
        "window" => ValueKind::Window,
        "instant" => ValueKind::Instant,
        "duration" => ValueKind::Duration,
        "point" => ValueKind::Point,
        "polygon" => ValueKind::Polygon,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeTypeDef {
    pub name: String,
    pub aliases: Vec<String>,
    pub subtypes: Vec<String>,
    pub open_subtypes: bool,
    pub required: Vec<PropRule>,
    pub optional: Vec<PropRule>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubtypeDef {
    pub name: String,
    pub parent: String,
    pub aliases: Vec<String>,
    pub required: Vec<PropRule>,
    pub optional: Vec<PropRule>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeTypeDef {
    pub name: String,
    pub category: String,
    pub aliases: Vec<String>,
    /// Admissible source node types or subtypes.
    pub src: Vec<String>,
    pub dst: Vec<String>,
    pub required: Vec<PropRule>,
    pub optional: Vec<PropRule>,
    pub acyclic: bool,
}

/// Registry of node and edge types. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct TypeSchema {
    /// An open schema accepts any type name and enforces nothing.
    open: bool,
    node_types: BTreeMap<String, NodeTypeDef>,
    subtypes: BTreeMap<String, SubtypeDef>,
    edge_types: BTreeMap<String, EdgeTypeDef>,
    node_aliases: HashMap<String, Vec<String>>,
    edge_aliases: HashMap<String, Vec<String>>,
}

fn list_of_strings(rec: &Record, key: &str) -> Result<Vec<String>, String> {
    match rec.props.get(key) {
        None => Ok(Vec::new()),
        Some(Value::List(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("`{key}` must be a list of strings"))
            })
            .collect(),
        Some(_) => Err(format!("`{key}` must be a list of strings")),
    }
}

fn rules(rec: &Record, key: &str) -> Result<Vec<PropRule>, String> {
    list_of_strings(rec, key)?
        .iter()
        .map(|s| PropRule::parse(s))
        .collect()
}

fn flag(rec: &Record, key: &str) -> Result<bool, String> {
    match rec.props.get(key) {
        None => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(format!("`{key}` must be true or false")),
    }
}

fn words(rec: &Record) -> Result<Vec<String>, String> {
    rec.items
        .iter()
        .map(|(item, _)| match item {
            Item::Word(w) => Ok(w.clone()),
            _ => Err(format!("unexpected token in `{}` record", rec.keyword)),
        })
        .collect()
}

impl TypeSchema {
    /// The schema shipped with the engine.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SCHEMA).expect("built-in schema is well formed")
    }

    /// Accepts any node or edge type; used for generic graphs.
    pub fn open() -> Self {
        TypeSchema {
            open: true,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let recs = parse_records(text)?;
        let mut s = TypeSchema::default();
        let invalid = |rec: &Record, message: String| SchemaError::Invalid {
            line: rec.pos.line,
            message,
        };
        match recs.first() {
            Some(r) if r.keyword == "schema" => {}
            Some(r) => return Err(invalid(r, "schema must start with a `schema` header".into())),
            None => {
                return Err(SchemaError::Invalid {
                    line: 1,
                    message: "empty schema".into(),
                })
            }
        }
        for rec in &recs[1..] {
            let w = words(rec).map_err(|m| invalid(rec, m))?;
            let res: Result<(), String> = (|| {
                match (rec.keyword.as_str(), w.as_slice()) {
                    ("node_type", [name]) => {
                        let def = NodeTypeDef {
                            name: name.clone(),
                            aliases: list_of_strings(rec, "aliases")?,
                            subtypes: list_of_strings(rec, "subtypes")?,
                            open_subtypes: flag(rec, "open_subtypes")?,
                            required: rules(rec, "required")?,
                            optional: rules(rec, "optional")?,
                        };
                        if s.node_types.insert(name.clone(), def).is_some() {
                            return Err(format!("node type `{name}` declared twice"));
                        }
                    }
                    ("subtype", [name, parent]) => {
                        let p = s
                            .node_types
                            .get_mut(parent)
                            .ok_or_else(|| format!("subtype `{name}` has unknown parent `{parent}`"))?;
                        if !p.subtypes.contains(name) {
                            p.subtypes.push(name.clone());
                        }
                        let def = SubtypeDef {
                            name: name.clone(),
                            parent: parent.clone(),
                            aliases: list_of_strings(rec, "aliases")?,
                            required: rules(rec, "required")?,
                            optional: rules(rec, "optional")?,
                        };
                        if s.subtypes.insert(name.clone(), def).is_some() {
                            return Err(format!("subtype `{name}` declared twice"));
                        }
                    }
                    ("edge_type", [name]) => {
                        let def = EdgeTypeDef {
                            name: name.clone(),
                            category: rec
                                .props
                                .get("category")
                                .and_then(Value::as_str)
                                .unwrap_or_default()
                                .to_string(),
                            aliases: list_of_strings(rec, "aliases")?,
                            src: list_of_strings(rec, "src")?,
                            dst: list_of_strings(rec, "dst")?,
                            required: rules(rec, "required")?,
                            optional: rules(rec, "optional")?,
                            acyclic: flag(rec, "acyclic")?,
                        };
                        if def.src.is_empty() || def.dst.is_empty() {
                            return Err(format!("edge type `{name}` needs src and dst rules"));
                        }
                        if s.edge_types.insert(name.clone(), def).is_some() {
                            return Err(format!("edge type `{name}` declared twice"));
                        }
                    }
                    (kw, _) => return Err(format!("malformed `{kw}` record")),
                }
                Ok(())
            })();
            res.map_err(|m| invalid(rec, m))?;
        }
        // Subtypes listed inline without their own record.
        for t in s.node_types.values() {
            for sub in &t.subtypes {
                s.subtypes.entry(sub.clone()).or_insert_with(|| SubtypeDef {
                    name: sub.clone(),
                    parent: t.name.clone(),
                    ..Default::default()
                });
            }
        }
        for e in s.edge_types.values() {
            for name in e.src.iter().chain(&e.dst) {
                if !s.node_types.contains_key(name) && !s.subtypes.contains_key(name) {
                    return Err(SchemaError::Invalid {
                        line: 0,
                        message: format!("edge type `{}` names unknown endpoint `{name}`", e.name),
                    });
                }
            }
        }
        for t in s.node_types.values() {
            for a in &t.aliases {
                s.node_aliases.entry(a.clone()).or_default().push(t.name.clone());
            }
        }
        for t in s.subtypes.values() {
            for a in &t.aliases {
                s.node_aliases.entry(a.clone()).or_default().push(t.name.clone());
            }
        }
        for e in s.edge_types.values() {
            for a in &e.aliases {
                s.edge_aliases.entry(a.clone()).or_default().push(e.name.clone());
            }
        }
        Ok(s)
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn node_types(&self) -> impl Iterator<Item = &NodeTypeDef> {
        self.node_types.values()
    }

    pub fn subtypes(&self) -> impl Iterator<Item = &SubtypeDef> {
        self.subtypes.values()
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &EdgeTypeDef> {
        self.edge_types.values()
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeTypeDef> {
        self.node_types.get(name)
    }

    pub fn subtype(&self, name: &str) -> Option<&SubtypeDef> {
        self.subtypes.get(name)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeTypeDef> {
        self.edge_types.get(name)
    }

    /// Resolves a type token to `(node_type, subtype)`. Accepts a type
    /// name, a registered subtype name, `type:subtype`, or an unambiguous
    /// alias of either. An explicit `subtype` argument overrides one
    /// implied by the token.
    pub fn normalize_node_type(
        &self,
        token: &str,
        subtype: Option<&str>,
    ) -> Option<(String, Option<String>)> {
        if self.open {
            return Some((token.to_string(), subtype.map(str::to_string)));
        }
        if let Some((t, sub)) = token.split_once(':') {
            if subtype.is_some_and(|s| s != sub) {
                return None;
            }
            return self.normalize_node_type(t, Some(sub));
        }
        let name = match self.node_aliases.get(token).map(Vec::as_slice) {
            Some([only]) if !self.node_types.contains_key(token) => only.as_str(),
            _ => token,
        };
        let (ty, implied) = if let Some(def) = self.node_types.get(name) {
            (def, None)
        } else if let Some(sub) = self.subtypes.get(name) {
            (&self.node_types[&sub.parent], Some(sub.name.as_str()))
        } else {
            return None;
        };
        match subtype.or(implied) {
            None => Some((ty.name.clone(), None)),
            Some(sub) => {
                let registered = self.subtypes.get(sub).is_some_and(|d| d.parent == ty.name);
                if registered || ty.open_subtypes {
                    Some((ty.name.clone(), Some(sub.to_string())))
                } else {
                    None
                }
            }
        }
    }

    /// Canonical edge type for a name or an unambiguous alias.
    pub fn canonical_edge_type<'a>(&'a self, token: &'a str) -> Option<&'a str> {
        if self.open {
            return Some(token);
        }
        if let Some(def) = self.edge_types.get(token) {
            return Some(&def.name);
        }
        match self.edge_aliases.get(token).map(Vec::as_slice) {
            Some([only]) => Some(only.as_str()),
            _ => None,
        }
    }

    /// Whether a query label names this node: its type, its subtype, or
    /// an alias of either.
    pub fn node_label_matches(&self, node: &NodeRecord, label: &str) -> bool {
        if node.is_a(label) {
            return true;
        }
        self.node_aliases
            .get(label)
            .is_some_and(|targets| targets.iter().any(|t| node.is_a(t)))
    }

    /// Whether a query label names this edge type, directly or by alias.
    pub fn edge_label_matches(&self, edge_type: &str, label: &str) -> bool {
        edge_type == label
            || self
                .edge_aliases
                .get(label)
                .is_some_and(|targets| targets.iter().any(|t| t == edge_type))
    }

    fn endpoint_ok(names: &[String], node: &NodeRecord) -> bool {
        names.iter().any(|n| node.is_a(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    MissingProp,
    BadEndpoint,
    UnknownType,
    CycleWhereForbidden,
    BadValueKind,
    DegenerateRegion,
    ContainmentMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Id of the offending node or edge.
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            kind,
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.kind, self.subject, self.message)
    }
}

fn check_props(
    out: &mut Vec<Violation>,
    subject: &str,
    owner: &str,
    props: &BTreeMap<String, Value>,
    required: &[PropRule],
    optional: &[PropRule],
) {
    for rule in required {
        match props.get(&rule.name) {
            None => out.push(Violation::new(
                ViolationKind::MissingProp,
                subject,
                format!("{owner} requires property `{}`", rule.name),
            )),
            Some(v) if !rule.admits(v) => out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!(
                    "{owner} property `{}` must be {}, found {}",
                    rule.name,
                    rule.kinds_text(),
                    v.kind()
                ),
            )),
            Some(_) => {}
        }
    }
    for rule in optional {
        if let Some(v) = props.get(&rule.name) {
            if !rule.admits(v) {
                out.push(Violation::new(
                    ViolationKind::BadValueKind,
                    subject,
                    format!(
                        "{owner} property `{}` must be {}, found {}",
                        rule.name,
                        rule.kinds_text(),
                        v.kind()
                    ),
                ));
            }
        }
    }
    for (k, v) in props {
        if !v.is_well_formed() {
            out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("property `{k}` mixes element kinds"),
            ));
        }
        check_geometry(out, subject, k, v);
    }
}

fn check_geometry(out: &mut Vec<Violation>, subject: &str, key: &str, v: &Value) {
    match v {
        Value::Geo(crate::value::Geometry::Polygon(ring)) => {
            if let Err(e) = Region::new(None, ring.clone()) {
                out.push(Violation::new(
                    ViolationKind::DegenerateRegion,
                    subject,
                    format!("property `{key}`: {e}"),
                ));
            }
        }
        Value::Geo(crate::value::Geometry::Point(p)) if !p.is_finite() => out.push(Violation::new(
            ViolationKind::BadValueKind,
            subject,
            format!("property `{key}` has non-finite coordinates"),
        )),
        Value::List(items) => items.iter().for_each(|i| check_geometry(out, subject, key, i)),
        _ => {}
    }
}

fn check_dates(out: &mut Vec<Violation>, subject: &str, base: &crate::graph::BaseProps) {
    if let (Some(c), Some(m)) = (base.created_date, base.modified_date) {
        if m < c {
            out.push(Violation::new(
                ViolationKind::BadValueKind,
                subject,
                format!("modified_date {m} precedes created_date {c}"),
            ));
        }
    }
}

/// Checks every node and edge against the graph's schema. Returns the
/// violations in a deterministic order; an empty list means the graph
/// conforms.
pub fn validate_graph(graph: &PropertyGraph) -> Vec<Violation> {
    let schema = graph.schema();
    let mut out = Vec::new();
    for node in graph.nodes() {
        let subject = node.id.as_str();
        check_dates(&mut out, subject, &node.base);
        if schema.is_open() {
            check_props(&mut out, subject, &node.node_type, &node.props, &[], &[]);
            continue;
        }
        let Some(def) = schema.node_type(&node.node_type) else {
            out.push(Violation::new(
                ViolationKind::UnknownType,
                subject,
                format!("node type `{}` is not in the schema", node.node_type),
            ));
            continue;
        };
        let mut required = def.required.clone();
        let mut optional = def.optional.clone();
        if let Some(sub) = &node.subtype {
            match schema.subtype(sub).filter(|s| s.parent == def.name) {
                Some(sd) => {
                    required.extend(sd.required.iter().cloned());
                    optional.extend(sd.optional.iter().cloned());
                }
                None if def.open_subtypes => {}
                None => out.push(Violation::new(
                    ViolationKind::UnknownType,
                    subject,
                    format!("`{sub}` is not a subtype of `{}`", def.name),
                )),
            }
        }
        let owner = node.subtype.as_deref().unwrap_or(&node.node_type);
        check_props(&mut out, subject, owner, &node.props, &required, &optional);
    }
    for edge in graph.edges() {
        let subject = edge.id.as_str();
        check_dates(&mut out, subject, &edge.base);
        if schema.is_open() {
            check_props(&mut out, subject, &edge.edge_type, &edge.props, &[], &[]);
            continue;
        }
        let Some(def) = schema.edge_type(&edge.edge_type) else {
            out.push(Violation::new(
                ViolationKind::UnknownType,
                subject,
                format!("edge type `{}` is not in the schema", edge.edge_type),
            ));
            continue;
        };
        let src = graph.node_at(edge.src_ix());
        let dst = graph.node_at(edge.dst_ix());
        for (end, node, allowed) in [("source", src, &def.src), ("target", dst, &def.dst)] {
            if !TypeSchema::endpoint_ok(allowed, node) {
                out.push(Violation::new(
                    ViolationKind::BadEndpoint,
                    subject,
                    format!(
                        "{} edge {end} must be one of [{}], but `{}` is {}",
                        def.name,
                        allowed.join(", "),
                        node.id,
                        node.subtype.as_deref().unwrap_or(&node.node_type)
                    ),
                ));
            }
        }
        check_props(&mut out, subject, &def.name, &edge.props, &def.required, &def.optional);
    }
    if !schema.is_open() {
        for def in schema.edge_types().filter(|d| d.acyclic) {
            for cycle in cycles_of_type(graph, &def.name) {
                let names: Vec<_> = cycle.iter().map(|&ix| graph.node_at(ix).id.as_str()).collect();
                out.push(Violation::new(
                    ViolationKind::CycleWhereForbidden,
                    names[0],
                    format!("{} edges form a cycle through [{}]", def.name, names.join(", ")),
                ));
            }
        }
        check_containment(graph, &mut out);
    }
    out
}

/// Strongly connected components with a cycle (size > 1 or a self loop)
/// in the subgraph of one edge type. Each component is listed in id order.
pub(crate) fn cycles_of_type(graph: &PropertyGraph, edge_type: &str) -> Vec<Vec<NodeIx>> {
    let n = graph.node_count();
    let succ = |v: usize| -> Vec<usize> {
        graph
            .out_edges(NodeIx(v as u32))
            .filter(|e| e.edge_type == edge_type)
            .map(|e| e.dst_ix().0 as usize)
            .collect()
    };
    // Iterative Tarjan.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut comps = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some((v, children, i)) = work.last_mut() {
            let v = *v;
            if *i < children.len() {
                let w = children[*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, succ(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some((parent, _, _)) = work.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(NodeIx(w as u32));
                        if w == v {
                            break;
                        }
                    }
                    let self_loop = comp.len() == 1 && succ(v).contains(&v);
                    if comp.len() > 1 || self_loop {
                        comp.sort();
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps.sort();
    comps
}

fn boundary_region(node: &NodeRecord) -> Option<Region> {
    node.prop("boundary")
        .and_then(Value::as_polygon)
        .and_then(|ring| Region::new(Some(node.id.to_string()), ring.to_vec()).ok())
}

/// A `within` edge between two locations that both carry polygon
/// boundaries must agree with the geometry.
fn check_containment(graph: &PropertyGraph, out: &mut Vec<Violation>) {
    for edge in graph.edges() {
        if edge.edge_type != "location_predicate" || edge.str_prop("type") != Some("within") {
            continue;
        }
        let inner = graph.node_at(edge.src_ix());
        let outer = graph.node_at(edge.dst_ix());
        let (Some(ri), Some(ro)) = (boundary_region(inner), boundary_region(outer)) else {
            continue;
        };
        let escaped: Vec<&GeoPoint> = ri.vertices().iter().filter(|p| !ro.contains(p)).collect();
        if !escaped.is_empty() {
            out.push(Violation::new(
                ViolationKind::ContainmentMismatch,
                edge.id.as_str(),
                format!(
                    "`{}` is declared within `{}` but its boundary vertex ({}, {}) lies outside",
                    inner.id, outer.id, escaped[0].x, escaped[0].y
                ),
            ));
        }
    }
}

/// Transitive `subclass_of` ancestors of a node, nearest first.
pub fn subclass_ancestors(graph: &PropertyGraph, id: &str) -> Result<Vec<NodeId>, SubclassError> {
    let start = graph
        .node_ix(id)
        .ok_or_else(|| SubclassError::MissingNode(id.to_string()))?;
    let reachable = bfs(graph, start, "subclass_of");
    // A cycle is reachable iff some reachable node (or the start) has an
    // edge back into a node that can reach it; detect with the SCC pass
    // restricted to reachable nodes.
    let mut in_scope: BTreeSet<NodeIx> = reachable.iter().copied().collect();
    in_scope.insert(start);
    if let Some(comp) = cycles_of_type(graph, "subclass_of")
        .into_iter()
        .find(|c| c.iter().any(|ix| in_scope.contains(ix)))
    {
        return Err(SubclassError::SubclassCycle(graph.node_at(comp[0]).id.clone()));
    }
    Ok(reachable.into_iter().map(|ix| graph.node_at(ix).id.clone()).collect())
}

/// Breadth-first reachability along one edge type, excluding the start,
/// nearest first and in edge order within a level.
pub(crate) fn bfs(graph: &PropertyGraph, start: NodeIx, edge_type: &str) -> Vec<NodeIx> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(v) = queue.pop_front() {
        for e in graph.out_typed(v, edge_type) {
            if seen.insert(e.dst_ix()) {
                out.push(e.dst_ix());
                queue.push_back(e.dst_ix());
            }
        }
    }
    out
}
