//! Condition trees built from logic nodes, their evaluation against a
//! context, and formula folding over amount nodes.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDateTime;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{NodeId, NodeIx, NodeRecord, PropertyGraph};
use crate::spatial::{eval_spatial, shape_of, GeoPoint, SpatialKind, SpatialPredicate, SpatialTarget};
use crate::temporal::in_window;
use crate::value::{Geometry, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("no node `{0}`")]
    MissingNode(String),
    #[error("`{0}` is not a logic node or condition")]
    NotALogicNode(String),
    #[error("logic cycle through `{0}`")]
    LogicCycle(String),
    #[error("malformed group `{group}`: {reason}")]
    MalformedGroup { group: String, reason: String },
    #[error("condition `{node}` needs {need}, which the context lacks")]
    UnresolvableLeaf { node: String, need: &'static str },
    #[error("condition `{node}`: {reason}")]
    BadCondition { node: String, reason: String },
    #[error("formula operand `{0}` has no numeric value")]
    NonNumericOperand(String),
    #[error("`{0}` has no formula operands")]
    EmptyFormula(String),
    #[error("`{0}` mixes formula operators")]
    MixedFormula(String),
    #[error("expression: {0}")]
    Parse(String),
}

/// How a condition leaf is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluator {
    Spatial,
    Temporal,
    Fact,
    Party,
}

impl Evaluator {
    pub fn parse(s: &str) -> Option<Evaluator> {
        Some(match s.to_ascii_lowercase().as_str() {
            "spatial" => Evaluator::Spatial,
            "temporal" => Evaluator::Temporal,
            "fact" => Evaluator::Fact,
            "party" => Evaluator::Party,
            _ => return None,
        })
    }

    /// Explicit `evaluator` property, else inferred from the properties
    /// present; plain conditions are facts.
    pub fn of(node: &NodeRecord) -> Result<Evaluator, LogicError> {
        if let Some(v) = node.prop("evaluator") {
            return v.as_str().and_then(Evaluator::parse).ok_or_else(|| LogicError::BadCondition {
                node: node.id.to_string(),
                reason: format!("unknown evaluator {v}"),
            });
        }
        Ok(if node.props.contains_key("predicate") {
            Evaluator::Spatial
        } else if node.props.contains_key("window") {
            Evaluator::Temporal
        } else if node.props.contains_key("party") {
            Evaluator::Party
        } else {
            Evaluator::Fact
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionRef {
    pub node: NodeId,
    pub evaluator: Evaluator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExprTree {
    And(Vec<ExprTree>),
    Or(Vec<ExprTree>),
    Not(Box<ExprTree>),
    Leaf(ConditionRef),
}

impl ExprTree {
    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&ConditionRef> {
        let mut out = Vec::new();
        fn walk<'a>(t: &'a ExprTree, out: &mut Vec<&'a ConditionRef>) {
            match t {
                ExprTree::And(c) | ExprTree::Or(c) => c.iter().for_each(|c| walk(c, out)),
                ExprTree::Not(c) => walk(c, out),
                ExprTree::Leaf(l) => out.push(l),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Evaluates with a caller-supplied leaf oracle, short-circuiting
    /// left to right.
    pub fn evaluate_with<F>(&self, leaf: &mut F) -> Result<bool, LogicError>
    where
        F: FnMut(&ConditionRef) -> Result<bool, LogicError>,
    {
        match self {
            ExprTree::And(c) => {
                for t in c {
                    if !t.evaluate_with(leaf)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ExprTree::Or(c) => {
                for t in c {
                    if t.evaluate_with(leaf)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            ExprTree::Not(c) => Ok(!c.evaluate_with(leaf)?),
            ExprTree::Leaf(l) => leaf(l),
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Leaf(_) => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

/// Infix form over condition ids, fully parenthesizing nested groups:
/// `(c1 AND c2) OR (c3 AND c4)`.
impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::And(c) | ExprTree::Or(c) => {
                let op = if matches!(self, ExprTree::And(_)) { " AND " } else { " OR " };
                for (i, t) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    t.write_child(f)?;
                }
                Ok(())
            }
            ExprTree::Not(c) => {
                f.write_str("NOT ")?;
                c.write_child(f)
            }
            ExprTree::Leaf(l) => write!(f, "{}", l.node),
        }
    }
}

/// The situation a question is asked about. Facts absent from `facts`
/// are false.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalContext {
    pub party: Option<NodeId>,
    pub position: Option<GeoPoint>,
    pub instant: Option<NaiveDateTime>,
    pub facts: BTreeMap<String, bool>,
}

impl EvalContext {
    pub fn is_empty(&self) -> bool {
        self.party.is_none() && self.position.is_none() && self.instant.is_none() && self.facts.is_empty()
    }

    pub fn with_party(mut self, p: impl Into<String>) -> Self {
        self.party = Some(NodeId::new(p));
        self
    }

    pub fn at_position(mut self, p: GeoPoint) -> Self {
        self.position = Some(p);
        self
    }

    pub fn at_instant(mut self, t: NaiveDateTime) -> Self {
        self.instant = Some(t);
        self
    }

    pub fn with_fact(mut self, name: impl Into<String>, v: bool) -> Self {
        self.facts.insert(name.into(), v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Connective {
    And,
    Or,
    Not,
}

impl Connective {
    fn parse(s: &str) -> Option<Connective> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AND" | "ALL" | "∧" => Some(Connective::And),
            "OR" | "ANY" | "∨" => Some(Connective::Or),
            "NOT" | "¬" => Some(Connective::Not),
            _ => None,
        }
    }

    /// Reads a free-text `evaluation` such as "All conditions must be met".
    fn from_evaluation(s: &str) -> Option<Connective> {
        let lower = s.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric() && c != '∧' && c != '∨')
            .filter(|w| !w.is_empty())
            .collect();
        let has = |w: &str| words.contains(&w) || lower.contains(w);
        if words.contains(&"all") || words.contains(&"and") || has("∧") || words.contains(&"both") {
            Some(Connective::And)
        } else if words.contains(&"any") || words.contains(&"or") || has("∨") || words.contains(&"either") {
            Some(Connective::Or)
        } else {
            None
        }
    }
}

struct Builder<'g> {
    graph: &'g PropertyGraph,
    on_path: Vec<NodeIx>,
}

impl<'g> Builder<'g> {
    fn node(&self, id: &str) -> Result<&'g NodeRecord, LogicError> {
        self.graph.node(id).ok_or_else(|| LogicError::MissingNode(id.to_string()))
    }

    fn malformed(node: &NodeRecord, reason: impl Into<String>) -> LogicError {
        LogicError::MalformedGroup {
            group: node.id.to_string(),
            reason: reason.into(),
        }
    }

    fn enter(&mut self, node: &NodeRecord) -> Result<(), LogicError> {
        if self.on_path.contains(&node.ix()) {
            return Err(LogicError::LogicCycle(node.id.to_string()));
        }
        self.on_path.push(node.ix());
        Ok(())
    }

    /// Tree for one node: a condition leaf or a group over its members.
    fn tree(&mut self, node: &'g NodeRecord) -> Result<ExprTree, LogicError> {
        if node.is_a("condition") {
            return Ok(ExprTree::Leaf(ConditionRef {
                node: node.id.clone(),
                evaluator: Evaluator::of(node)?,
            }));
        }
        if !node.is_a("logic_node") {
            return Err(LogicError::NotALogicNode(node.id.to_string()));
        }
        self.enter(node)?;
        let out = self.group(node);
        self.on_path.pop();
        out
    }

    fn group(&mut self, node: &'g NodeRecord) -> Result<ExprTree, LogicError> {
        if let Some(expr) = node.str_prop("expression_tree") {
            return self.parse_expr(expr).map_err(|e| match e {
                LogicError::Parse(m) => Self::malformed(node, format!("expression_tree: {m}")),
                other => other,
            });
        }
        let connective = match node.prop("operator") {
            Some(v) => Some(
                v.as_str()
                    .and_then(Connective::parse)
                    .ok_or_else(|| Self::malformed(node, format!("unknown operator {v}")))?,
            ),
            None => node
                .str_prop("group_type")
                .and_then(Connective::parse)
                .or_else(|| node.str_prop("evaluation").and_then(Connective::from_evaluation)),
        };
        let connective = match connective {
            Some(c) => c,
            None if node.is_a("condition_group") => Connective::And,
            None => return Err(Self::malformed(node, "no operator")),
        };
        let mut members: Vec<&'g NodeRecord> = self
            .graph
            .in_typed(node.ix(), "member")
            .map(|e| self.graph.node_at(e.src_ix()))
            .collect();
        if let Some(order) = node.prop("evaluation_order").and_then(Value::as_list) {
            let rank = |n: &NodeRecord| {
                order
                    .iter()
                    .position(|v| v.as_str() == Some(n.id.as_str()))
                    .unwrap_or(usize::MAX)
            };
            // Stable: unlisted members keep insertion order after listed ones.
            members.sort_by_key(|n| rank(n));
        }
        let children = members
            .into_iter()
            .map(|m| self.tree(m))
            .collect::<Result<Vec<_>, _>>()?;
        match connective {
            Connective::Not => match <[ExprTree; 1]>::try_from(children) {
                Ok([only]) => Ok(ExprTree::Not(Box::new(only))),
                Err(c) => Err(Self::malformed(node, format!("NOT needs exactly 1 member, found {}", c.len()))),
            },
            _ if children.len() < 2 => Err(Self::malformed(
                node,
                format!(
                    "{} needs at least 2 members, found {}",
                    if connective == Connective::And { "AND" } else { "OR" },
                    children.len()
                ),
            )),
            Connective::And => Ok(ExprTree::And(children)),
            Connective::Or => Ok(ExprTree::Or(children)),
        }
    }

    fn parse_expr(&mut self, text: &str) -> Result<ExprTree, LogicError> {
        let toks = tokenize(text)?;
        let mut p = ExprParser { toks, i: 0 };
        let shape = p.or()?;
        if p.i != p.toks.len() {
            return Err(LogicError::Parse(format!("unexpected `{}`", p.toks[p.i])));
        }
        self.resolve(shape)
    }

    fn resolve(&mut self, shape: Shape) -> Result<ExprTree, LogicError> {
        Ok(match shape {
            Shape::And(c) => ExprTree::And(c.into_iter().map(|s| self.resolve(s)).collect::<Result<_, _>>()?),
            Shape::Or(c) => ExprTree::Or(c.into_iter().map(|s| self.resolve(s)).collect::<Result<_, _>>()?),
            Shape::Not(c) => ExprTree::Not(Box::new(self.resolve(*c)?)),
            Shape::Ident(id) => {
                let n = self.node(&id)?;
                self.tree(n)?
            }
        })
    }
}

/// Parsed infix expression before identifiers are resolved.
#[derive(Debug)]
enum Shape {
    And(Vec<Shape>),
    Or(Vec<Shape>),
    Not(Box<Shape>),
    Ident(String),
}

fn tokenize(text: &str) -> Result<Vec<String>, LogicError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':') {
            cur.push(c);
        } else {
            return Err(LogicError::Parse(format!("unexpected character `{c}`")));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

struct ExprParser {
    toks: Vec<String>,
    i: usize,
}

impl ExprParser {
    fn peek_kw(&self, kw: &str) -> bool {
        self.toks.get(self.i).is_some_and(|t| t.eq_ignore_ascii_case(kw))
    }

    fn chain(&mut self, kw: &str, sub: fn(&mut Self) -> Result<Shape, LogicError>) -> Result<Vec<Shape>, LogicError> {
        let mut items = vec![sub(self)?];
        while self.peek_kw(kw) {
            self.i += 1;
            items.push(sub(self)?);
        }
        Ok(items)
    }

    fn or(&mut self) -> Result<Shape, LogicError> {
        let mut items = self.chain("OR", Self::and)?;
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Shape::Or(items) })
    }

    fn and(&mut self) -> Result<Shape, LogicError> {
        let mut items = self.chain("AND", Self::unary)?;
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Shape::And(items) })
    }

    fn unary(&mut self) -> Result<Shape, LogicError> {
        let Some(t) = self.toks.get(self.i).cloned() else {
            return Err(LogicError::Parse("unexpected end of expression".into()));
        };
        self.i += 1;
        match t.as_str() {
            "(" => {
                let inner = self.or()?;
                if self.toks.get(self.i).map(String::as_str) != Some(")") {
                    return Err(LogicError::Parse("expected `)`".into()));
                }
                self.i += 1;
                Ok(inner)
            }
            ")" => Err(LogicError::Parse("unexpected `)`".into())),
            _ if t.eq_ignore_ascii_case("NOT") => Ok(Shape::Not(Box::new(self.unary()?))),
            _ if t.eq_ignore_ascii_case("AND") || t.eq_ignore_ascii_case("OR") => {
                Err(LogicError::Parse(format!("unexpected `{t}`")))
            }
            _ => Ok(Shape::Ident(t)),
        }
    }
}

/// Logic nodes joined to `root` by `and`/`or` edges, in id order, with
/// the shared connective. `None` when `root` has no such peers.
fn peer_groups<'g>(
    graph: &'g PropertyGraph,
    root: &'g NodeRecord,
) -> Result<Option<(Connective, Vec<&'g NodeRecord>)>, LogicError> {
    let mut seen = vec![root.ix()];
    let mut frontier = vec![root.ix()];
    let mut connective = None;
    while let Some(v) = frontier.pop() {
        let edges = graph
            .out_edges(v)
            .map(|e| (e, e.dst_ix()))
            .chain(graph.in_edges(v).map(|e| (e, e.src_ix())));
        for (e, other) in edges {
            let c = match e.edge_type.as_str() {
                "and" => Connective::And,
                "or" => Connective::Or,
                _ => continue,
            };
            if !graph.node_at(other).is_a("logic_node") {
                continue;
            }
            if connective.is_some_and(|k| k != c) {
                return Err(Builder::malformed(root, "peer groups are joined by both `and` and `or`"));
            }
            connective = Some(c);
            if !seen.contains(&other) {
                seen.push(other);
                frontier.push(other);
            }
        }
    }
    seen.sort();
    Ok(connective.map(|c| (c, seen.into_iter().map(|ix| graph.node_at(ix)).collect())))
}

/// Builds the condition tree rooted at a logic node or condition.
///
/// `member` edges (member → group) give a group's children; a group's
/// own connective comes from its `operator` property. Groups joined by
/// `and`/`or` edges form a parent over all of them.
pub fn build_tree(graph: &PropertyGraph, root: &str) -> Result<ExprTree, LogicError> {
    let node = graph.node(root).ok_or_else(|| LogicError::MissingNode(root.to_string()))?;
    let mut b = Builder { graph, on_path: Vec::new() };
    if node.is_a("logic_node") {
        if let Some((c, peers)) = peer_groups(graph, node)? {
            let children = peers
                .into_iter()
                .map(|p| b.tree(p))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(if c == Connective::And {
                ExprTree::And(children)
            } else {
                ExprTree::Or(children)
            });
        }
    }
    b.tree(node)
}

/// Parses infix text such as `(c1 AND c2) OR NOT c3`, resolving ids
/// against the graph. Ids naming logic nodes expand to their groups.
pub fn parse_expression(graph: &PropertyGraph, text: &str) -> Result<ExprTree, LogicError> {
    Builder { graph, on_path: Vec::new() }.parse_expr(text)
}

/// Boolean value of `tree` in `ctx`.
pub fn evaluate(tree: &ExprTree, ctx: &EvalContext, graph: &PropertyGraph) -> Result<bool, LogicError> {
    tree.evaluate_with(&mut |leaf| evaluate_leaf(leaf, ctx, graph))
}

fn bad(node: &NodeRecord, reason: impl Into<String>) -> LogicError {
    LogicError::BadCondition {
        node: node.id.to_string(),
        reason: reason.into(),
    }
}

pub fn evaluate_leaf(leaf: &ConditionRef, ctx: &EvalContext, graph: &PropertyGraph) -> Result<bool, LogicError> {
    let node = graph
        .node(leaf.node.as_str())
        .ok_or_else(|| LogicError::MissingNode(leaf.node.to_string()))?;
    let unresolvable = |need| LogicError::UnresolvableLeaf {
        node: node.id.to_string(),
        need,
    };
    match leaf.evaluator {
        Evaluator::Fact => {
            let key = node.str_prop("fact").unwrap_or(node.id.as_str());
            Ok(ctx.facts.get(key).copied().unwrap_or(false))
        }
        Evaluator::Temporal => {
            let t = ctx.instant.as_ref().ok_or_else(|| unresolvable("an instant"))?;
            let w = node
                .prop("window")
                .and_then(Value::as_window)
                .ok_or_else(|| bad(node, "temporal condition needs a `window`"))?;
            Ok(in_window(t, w))
        }
        Evaluator::Spatial => {
            let p = ctx.position.ok_or_else(|| unresolvable("a position"))?;
            Ok(eval_spatial(&spatial_predicate(graph, node)?, &p))
        }
        Evaluator::Party => {
            let who = ctx.party.as_ref().ok_or_else(|| unresolvable("a party"))?;
            let holder = node
                .str_prop("party")
                .ok_or_else(|| bad(node, "party condition needs a `party` id"))?;
            Ok(party_matches(graph, holder, who.as_str(), ctx.instant.as_ref()))
        }
    }
}

fn spatial_predicate(graph: &PropertyGraph, node: &NodeRecord) -> Result<SpatialPredicate, LogicError> {
    let kind = node
        .str_prop("predicate")
        .and_then(SpatialKind::parse)
        .ok_or_else(|| bad(node, "spatial condition needs a known `predicate`"))?;
    let target = match node.prop("target") {
        Some(Value::Str(id)) => {
            let t = graph
                .node(id)
                .ok_or_else(|| bad(node, format!("target `{id}` does not exist")))?;
            shape_of(t)
                .ok_or_else(|| bad(node, format!("target `{id}` has no geometry")))?
                .map_err(|e| bad(node, e.to_string()))?
        }
        Some(Value::Geo(Geometry::Point(p))) => SpatialTarget::Point(*p),
        Some(Value::Geo(Geometry::Polygon(ring))) => SpatialTarget::Region(
            crate::spatial::Region::new(None, ring.clone()).map_err(|e| bad(node, e.to_string()))?,
        ),
        _ => return Err(bad(node, "spatial condition needs a `target`")),
    };
    let distance = node.prop("distance").and_then(Value::as_f64);
    SpatialPredicate::new(kind, target, distance).map_err(|e| bad(node, e.to_string()))
}

/// Whether `party` is bound by a rule whose holder is `holder`: the same
/// node, a transitive `has_member` of it, a member of a semantic entity
/// the collective holder is `member_of`, or a delegate of any of these
/// under an unrevoked delegation in force at `instant`.
pub fn party_matches(graph: &PropertyGraph, holder: &str, party: &str, instant: Option<&NaiveDateTime>) -> bool {
    let (Some(h), Some(p)) = (graph.node_ix(holder), graph.node_ix(party)) else {
        return false;
    };
    if represented_by(graph, h, p) {
        return true;
    }
    graph.in_typed(p, "delegation").any(|e| {
        let revoked = e.prop("revoked").and_then(Value::as_bool).unwrap_or(false);
        let in_force = match (e.prop("duration").and_then(Value::as_window), instant) {
            (Some(w), Some(t)) => in_window(t, w),
            _ => true,
        };
        !revoked && in_force && e.valid_at(instant) && represented_by(graph, h, e.src_ix())
    })
}

/// Identity, transitive `has_member`, or shared `member_of` collective.
fn represented_by(graph: &PropertyGraph, holder: NodeIx, party: NodeIx) -> bool {
    if holder == party {
        return true;
    }
    if crate::schema::bfs(graph, holder, "has_member").contains(&party) {
        return true;
    }
    let hn = graph.node_at(holder);
    if hn.is_a("party_group") {
        let party_links: Vec<NodeIx> = graph
            .out_typed(party, "membership")
            .chain(graph.out_typed(party, "member_of"))
            .map(|e| e.dst_ix())
            .collect();
        return graph
            .out_typed(holder, "member_of")
            .any(|e| party_links.contains(&e.dst_ix()));
    }
    false
}

const FORMULA_OPS: [&str; 3] = ["addition", "multiplication", "maximum"];

/// Value of a formula rooted at an amount or what node. Operands are the
/// targets of the root's formula edges, folded in id order; an operand
/// that is itself a formula root is evaluated first.
pub fn evaluate_formula(graph: &PropertyGraph, root: &str) -> Result<f64, LogicError> {
    let ix = graph.node_ix(root).ok_or_else(|| LogicError::MissingNode(root.to_string()))?;
    let mut path = Vec::new();
    formula(graph, ix, &mut path, true)
}

fn formula(graph: &PropertyGraph, ix: NodeIx, path: &mut Vec<NodeIx>, root: bool) -> Result<f64, LogicError> {
    let node = graph.node_at(ix);
    if path.contains(&ix) {
        return Err(LogicError::LogicCycle(node.id.to_string()));
    }
    let edges: Vec<_> = graph
        .out_edges(ix)
        .filter(|e| FORMULA_OPS.contains(&e.edge_type.as_str()))
        .collect();
    if edges.is_empty() {
        if root {
            return Err(LogicError::EmptyFormula(node.id.to_string()));
        }
        return node
            .prop("value")
            .and_then(Value::as_f64)
            .ok_or_else(|| LogicError::NonNumericOperand(node.id.to_string()));
    }
    let op = edges[0].edge_type.as_str();
    if edges.iter().any(|e| e.edge_type != op) {
        return Err(LogicError::MixedFormula(node.id.to_string()));
    }
    let mut operands: Vec<NodeIx> = edges.iter().map(|e| e.dst_ix()).collect();
    operands.sort();
    path.push(ix);
    let mut values = Vec::with_capacity(operands.len());
    for o in operands {
        values.push(formula(graph, o, path, false)?);
    }
    path.pop();
    let init = values[0];
    Ok(values[1..].iter().fold(init, |acc, v| match op {
        "addition" => acc + v,
        "multiplication" => acc * v,
        _ => acc.max(*v),
    }))
}
