//! In-memory directed property graph with stable identifiers and
//! type/property indexes.
//!
//! The graph is built by a single writer and then read through shared
//! references; there is no deletion API. Rule changes are recorded through
//! [`Status`] on the base properties instead.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::TypeSchema;
use crate::temporal::TimeWindow;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge endpoint `{0}` does not exist")]
    MissingEndpoint(String),
    #[error("no node `{0}`")]
    MissingNode(String),
    #[error("property `{0}` holds a list with mixed element kinds")]
    MixedList(String),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

string_id!(NodeId);
string_id!(EdgeId);

/// Dense insertion-order index of a node. Orders by id creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Active,
    Superseded,
    Draft,
}

impl Status {
    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "active" => Some(Status::Active),
            "superseded" => Some(Status::Superseded),
            "draft" => Some(Status::Draft),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Superseded => "superseded",
            Status::Draft => "draft",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaseProps {
    pub created_date: Option<NaiveDate>,
    pub modified_date: Option<NaiveDate>,
    pub status: Status,
    /// Only meaningful on edges.
    pub temporal_validity: Option<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub node_type: String,
    pub subtype: Option<String>,
    pub label: String,
    pub props: BTreeMap<String, Value>,
    pub base: BaseProps,
    ix: NodeIx,
}

impl NodeRecord {
    pub fn ix(&self) -> NodeIx {
        self.ix
    }

    pub fn prop(&self, key: &str) -> Option<&Value> {
        self.props.get(key)
    }

    pub fn str_prop(&self, key: &str) -> Option<&str> {
        self.props.get(key).and_then(Value::as_str)
    }

    /// True when `name` is this node's type or subtype.
    pub fn is_a(&self, name: &str) -> bool {
        self.node_type == name || self.subtype.as_deref() == Some(name)
    }

    /// Property lookup including the built-in fields `id`, `label`,
    /// `type` (explicit property, else subtype, else node type),
    /// `node_type`, `subtype` and `status`.
    pub fn lookup(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.props.get(key) {
            return Some(v.clone());
        }
        match key {
            "id" => Some(Value::Str(self.id.to_string())),
            "label" => Some(Value::Str(self.label.clone())),
            "type" => Some(Value::Str(
                self.subtype.clone().unwrap_or_else(|| self.node_type.clone()),
            )),
            "node_type" => Some(Value::Str(self.node_type.clone())),
            "subtype" => self.subtype.clone().map(Value::Str),
            "status" => Some(Value::Str(self.base.status.as_str().into())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub edge_type: String,
    pub props: BTreeMap<String, Value>,
    pub base: BaseProps,
    ix: EdgeIx,
    src_ix: NodeIx,
    dst_ix: NodeIx,
}

impl EdgeRecord {
    pub fn ix(&self) -> EdgeIx {
        self.ix
    }

    pub fn src_ix(&self) -> NodeIx {
        self.src_ix
    }

    pub fn dst_ix(&self) -> NodeIx {
        self.dst_ix
    }

    pub fn prop(&self, key: &str) -> Option<&Value> {
        self.props.get(key)
    }

    pub fn str_prop(&self, key: &str) -> Option<&str> {
        self.props.get(key).and_then(Value::as_str)
    }

    /// Property lookup including `id` and `type` (explicit property, else
    /// edge type) and `edge_type`.
    pub fn lookup(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.props.get(key) {
            return Some(v.clone());
        }
        match key {
            "id" => Some(Value::Str(self.id.to_string())),
            "type" | "edge_type" => Some(Value::Str(self.edge_type.clone())),
            _ => None,
        }
    }

    /// An edge without a validity window is always in force.
    pub fn valid_at(&self, t: Option<&chrono::NaiveDateTime>) -> bool {
        match (&self.base.temporal_validity, t) {
            (Some(w), Some(t)) => crate::temporal::in_window(t, w),
            _ => true,
        }
    }
}

/// Input for [`PropertyGraph::add_node`]. `node_type` may name a
/// registered subtype, in which case the parent type is filled in.
#[derive(Debug, Clone, Default)]
pub struct NewNode {
    pub id: Option<String>,
    pub node_type: String,
    pub subtype: Option<String>,
    pub label: String,
    pub props: BTreeMap<String, Value>,
    pub base: BaseProps,
}

impl NewNode {
    pub fn new(node_type: impl Into<String>) -> Self {
        NewNode {
            node_type: node_type.into(),
            ..Default::default()
        }
    }

    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn subtype(mut self, s: impl Into<String>) -> Self {
        self.subtype = Some(s.into());
        self
    }

    pub fn label(mut self, l: impl Into<String>) -> Self {
        self.label = l.into();
        self
    }

    pub fn prop(mut self, k: impl Into<String>, v: impl Into<Value>) -> Self {
        self.props.insert(k.into(), v.into());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct NewEdge {
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    pub edge_type: String,
    pub props: BTreeMap<String, Value>,
    pub base: BaseProps,
}

impl NewEdge {
    pub fn new(edge_type: impl Into<String>, src: impl Into<String>, dst: impl Into<String>) -> Self {
        NewEdge {
            edge_type: edge_type.into(),
            src: src.into(),
            dst: dst.into(),
            ..Default::default()
        }
    }

    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn prop(mut self, k: impl Into<String>, v: impl Into<Value>) -> Self {
        self.props.insert(k.into(), v.into());
        self
    }

    pub fn validity(mut self, w: TimeWindow) -> Self {
        self.base.temporal_validity = Some(w);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// Keys that [`NodeRecord::lookup`] answers without a stored property.
const BUILTIN_FIELDS: [&str; 6] = ["id", "label", "type", "node_type", "subtype", "status"];

/// Predicate over a single property value for [`PropertyGraph::match_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub enum PropPredicate {
    Eq(Value),
    Contains(String),
    In(Vec<Value>),
    Exists,
}

impl PropPredicate {
    pub fn test(&self, v: Option<&Value>) -> bool {
        match (self, v) {
            (_, None) => false,
            (PropPredicate::Exists, Some(_)) => true,
            (PropPredicate::Eq(want), Some(v)) => want.loose_eq(v),
            (PropPredicate::Contains(s), Some(Value::Str(v))) => v.contains(s.as_str()),
            (PropPredicate::Contains(_), Some(_)) => false,
            (PropPredicate::In(opts), Some(v)) => opts.iter().any(|o| o.loose_eq(v)),
        }
    }
}

/// Hashable projection of the scalar value kinds that the property index
/// covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum IndexKey {
    Str(String),
    Bool(bool),
    Num(u64),
}

impl IndexKey {
    fn of(v: &Value) -> Option<IndexKey> {
        match v {
            Value::Str(s) => Some(IndexKey::Str(s.clone())),
            Value::Bool(b) => Some(IndexKey::Bool(*b)),
            // -0.0 and 0.0 compare equal, so they must share a key.
            Value::Num(n) => Some(IndexKey::Num(if *n == 0.0 { 0 } else { n.to_bits() })),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyGraph {
    schema: Arc<TypeSchema>,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    node_ids: HashMap<NodeId, NodeIx>,
    edge_ids: HashMap<EdgeId, EdgeIx>,
    out_adj: Vec<Vec<EdgeIx>>,
    in_adj: Vec<Vec<EdgeIx>>,
    /// node_type and subtype names -> nodes, in insertion order.
    by_type: HashMap<String, Vec<NodeIx>>,
    by_prop: HashMap<String, HashMap<IndexKey, Vec<NodeIx>>>,
    next_auto_id: u64,
}

impl PropertyGraph {
    pub fn new(schema: Arc<TypeSchema>) -> Self {
        PropertyGraph {
            schema,
            nodes: Vec::new(),
            edges: Vec::new(),
            node_ids: HashMap::new(),
            edge_ids: HashMap::new(),
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            by_type: HashMap::new(),
            by_prop: HashMap::new(),
            next_auto_id: 1,
        }
    }

    pub fn schema(&self) -> &TypeSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<TypeSchema> {
        Arc::clone(&self.schema)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn fresh_id(&mut self) -> String {
        loop {
            let id = self.next_auto_id.to_string();
            self.next_auto_id += 1;
            if !self.node_ids.contains_key(id.as_str()) && !self.edge_ids.contains_key(id.as_str())
            {
                return id;
            }
        }
    }

    pub fn add_node(&mut self, spec: NewNode) -> Result<NodeId, GraphError> {
        let (node_type, subtype) = self
            .schema
            .normalize_node_type(&spec.node_type, spec.subtype.as_deref())
            .ok_or_else(|| GraphError::UnknownNodeType(spec.node_type.clone()))?;
        if let Some((k, _)) = spec.props.iter().find(|(_, v)| !v.is_well_formed()) {
            return Err(GraphError::MixedList(k.clone()));
        }
        let id = match spec.id {
            Some(id) => {
                if self.node_ids.contains_key(id.as_str()) {
                    return Err(GraphError::DuplicateId(id));
                }
                id
            }
            None => self.fresh_id(),
        };
        let ix = NodeIx(self.nodes.len() as u32);
        let id = NodeId(id);
        self.by_type.entry(node_type.clone()).or_default().push(ix);
        if let Some(sub) = &subtype {
            self.by_type.entry(sub.clone()).or_default().push(ix);
        }
        for (k, v) in &spec.props {
            if let Some(key) = IndexKey::of(v) {
                self.by_prop
                    .entry(k.clone())
                    .or_default()
                    .entry(key)
                    .or_default()
                    .push(ix);
            }
        }
        self.node_ids.insert(id.clone(), ix);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        self.nodes.push(NodeRecord {
            id: id.clone(),
            node_type,
            subtype,
            label: spec.label,
            props: spec.props,
            base: spec.base,
            ix,
        });
        Ok(id)
    }

    pub fn add_edge(&mut self, spec: NewEdge) -> Result<EdgeId, GraphError> {
        let edge_type = self
            .schema
            .canonical_edge_type(&spec.edge_type)
            .ok_or_else(|| GraphError::UnknownEdgeType(spec.edge_type.clone()))?
            .to_string();
        let src_ix = self
            .node_ix(&spec.src)
            .ok_or_else(|| GraphError::MissingEndpoint(spec.src.clone()))?;
        let dst_ix = self
            .node_ix(&spec.dst)
            .ok_or_else(|| GraphError::MissingEndpoint(spec.dst.clone()))?;
        if let Some((k, _)) = spec.props.iter().find(|(_, v)| !v.is_well_formed()) {
            return Err(GraphError::MixedList(k.clone()));
        }
        let id = match spec.id {
            Some(id) => {
                if self.edge_ids.contains_key(id.as_str()) {
                    return Err(GraphError::DuplicateId(id));
                }
                id
            }
            None => self.fresh_id(),
        };
        let ix = EdgeIx(self.edges.len() as u32);
        let id = EdgeId(id);
        self.edge_ids.insert(id.clone(), ix);
        self.out_adj[src_ix.0 as usize].push(ix);
        self.in_adj[dst_ix.0 as usize].push(ix);
        self.edges.push(EdgeRecord {
            id: id.clone(),
            src: self.nodes[src_ix.0 as usize].id.clone(),
            dst: self.nodes[dst_ix.0 as usize].id.clone(),
            edge_type,
            props: spec.props,
            base: spec.base,
            ix,
            src_ix,
            dst_ix,
        });
        Ok(id)
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.node_ids.get(id).copied()
    }

    pub fn edge_ix(&self, id: &str) -> Option<EdgeIx> {
        self.edge_ids.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.node_ix(id).map(|ix| self.node_at(ix))
    }

    pub fn edge(&self, id: &str) -> Option<&EdgeRecord> {
        self.edge_ix(id).map(|ix| self.edge_at(ix))
    }

    pub fn require_node(&self, id: &str) -> Result<&NodeRecord, GraphError> {
        self.node(id).ok_or_else(|| GraphError::MissingNode(id.to_string()))
    }

    pub fn node_at(&self, ix: NodeIx) -> &NodeRecord {
        &self.nodes[ix.0 as usize]
    }

    pub fn edge_at(&self, ix: EdgeIx) -> &EdgeRecord {
        &self.edges[ix.0 as usize]
    }

    /// Nodes in id-creation order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.iter()
    }

    pub fn out_edges(&self, ix: NodeIx) -> impl Iterator<Item = &EdgeRecord> {
        self.out_adj[ix.0 as usize].iter().map(|&e| self.edge_at(e))
    }

    pub fn in_edges(&self, ix: NodeIx) -> impl Iterator<Item = &EdgeRecord> {
        self.in_adj[ix.0 as usize].iter().map(|&e| self.edge_at(e))
    }

    /// Outgoing edges of one canonical type (aliases are resolved).
    pub fn out_typed<'a>(
        &'a self,
        ix: NodeIx,
        edge_type: &'a str,
    ) -> impl Iterator<Item = &'a EdgeRecord> + 'a {
        let canon = self.schema.canonical_edge_type(edge_type).unwrap_or(edge_type);
        self.out_edges(ix).filter(move |e| e.edge_type == canon)
    }

    pub fn in_typed<'a>(
        &'a self,
        ix: NodeIx,
        edge_type: &'a str,
    ) -> impl Iterator<Item = &'a EdgeRecord> + 'a {
        let canon = self.schema.canonical_edge_type(edge_type).unwrap_or(edge_type);
        self.in_edges(ix).filter(move |e| e.edge_type == canon)
    }

    /// Nodes whose node type or subtype is `name`, in id order.
    pub fn nodes_of_type(&self, name: &str) -> &[NodeIx] {
        self.by_type.get(name).map_or(&[], Vec::as_slice)
    }

    /// Nodes whose scalar property `key` equals `v`, via the index.
    /// `None` when the value kind is not indexed.
    pub fn nodes_with_prop(&self, key: &str, v: &Value) -> Option<&[NodeIx]> {
        let k = IndexKey::of(v)?;
        Some(
            self.by_prop
                .get(key)
                .and_then(|m| m.get(&k))
                .map_or(&[], Vec::as_slice),
        )
    }

    /// Nodes matching an optional type (node type, subtype or an alias of
    /// either) and every property predicate. Result is in id order.
    pub fn match_nodes(
        &self,
        node_type: Option<&str>,
        filter: &[(String, PropPredicate)],
    ) -> Vec<NodeId> {
        // Built-in fields are not in the property index, and aliases are
        // not in the type index, so neither can seed those lookups.
        let seed: Option<&[NodeIx]> = filter
            .iter()
            .filter(|(k, _)| !BUILTIN_FIELDS.contains(&k.as_str()))
            .filter_map(|(k, p)| match p {
                PropPredicate::Eq(v) => self.nodes_with_prop(k, v),
                _ => None,
            })
            .chain(
                node_type
                    .filter(|t| self.schema.node_type(t).is_some() || self.schema.subtype(t).is_some())
                    .map(|t| self.nodes_of_type(t)),
            )
            .min_by_key(|s| s.len());
        let keep = |n: &NodeRecord| {
            node_type.is_none_or(|t| self.schema.node_label_matches(n, t))
                && filter.iter().all(|(k, p)| p.test(n.lookup(k).as_ref()))
        };
        let mut out: Vec<NodeId> = match seed {
            Some(cands) => cands
                .iter()
                .map(|&ix| self.node_at(ix))
                .filter(|n| keep(n))
                .map(|n| n.id.clone())
                .collect(),
            None => self.nodes.iter().filter(|n| keep(n)).map(|n| n.id.clone()).collect(),
        };
        out.sort();
        out
    }

    /// Adjacent (edge, node) pairs, outgoing edges first, each group in
    /// edge creation order.
    pub fn neighbors(
        &self,
        node: &str,
        direction: Direction,
        edge_type: Option<&str>,
    ) -> Result<Vec<(EdgeId, NodeId)>, GraphError> {
        let ix = self
            .node_ix(node)
            .ok_or_else(|| GraphError::MissingNode(node.to_string()))?;
        let canon = edge_type.map(|t| self.schema.canonical_edge_type(t).unwrap_or(t));
        let want = |e: &&EdgeRecord| canon.is_none_or(|t| e.edge_type == t);
        let mut out = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            out.extend(
                self.out_edges(ix)
                    .filter(want)
                    .map(|e| (e.id.clone(), e.dst.clone())),
            );
        }
        if matches!(direction, Direction::In | Direction::Both) {
            out.extend(
                self.in_edges(ix)
                    .filter(want)
                    .map(|e| (e.id.clone(), e.src.clone())),
            );
        }
        Ok(out)
    }

    /// Every edge endpoint resolves to a node.
    pub fn check_integrity(&self) -> bool {
        self.edges.iter().all(|e| {
            self.node_ix(e.src.as_str()) == Some(e.src_ix)
                && self.node_ix(e.dst.as_str()) == Some(e.dst_ix)
        })
    }
}
