//! Which deontic triggers apply in a context once exceptions, overrides
//! and precedence have been resolved.
//!
//! Resolution runs in four passes over the candidate triggers:
//!
//! 1. keep the triggers applicable in the context;
//! 2. drop every trigger reachable from an applicable trigger through
//!    `exception` edges whose every node is applicable;
//! 3. drop every survivor reachable from another survivor through
//!    `override` edges, through any intermediate trigger;
//! 4. among survivors joined by `precedence` edges keep the higher level.
//!
//! Edges not in force at the context instant, or not `active`, are
//! ignored throughout.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use chrono::NaiveDateTime;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, EdgeRecord, NodeId, NodeIx, NodeRecord, PropertyGraph, Status};
use crate::logic::{build_tree, evaluate, party_matches, EvalContext, LogicError};
use crate::spatial::{region_of, SpatialError};
use crate::temporal::{in_window, TimeWindow};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefeasibilityError {
    #[error("no node `{0}`")]
    MissingNode(String),
    #[error("`{0}` is not an obligation trigger")]
    NotATrigger(String),
    #[error("`{node}` has unknown modality `{value}`")]
    BadModality { node: String, value: String },
    #[error("{kind} cycle among applicable triggers: [{}]", nodes.join(", "))]
    DefeasibilityCycle { kind: &'static str, nodes: Vec<String> },
    #[error("jurisdiction `{0}` has no polygon boundary to test the position against")]
    UnresolvableJurisdiction(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Obligation,
    Prohibition,
    Permission,
    Entitlement,
}

impl Modality {
    pub fn parse(s: &str) -> Option<Modality> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "obligation" => Modality::Obligation,
            "prohibition" => Modality::Prohibition,
            "permission" => Modality::Permission,
            "entitlement" => Modality::Entitlement,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Obligation => "obligation",
            Modality::Prohibition => "prohibition",
            Modality::Permission => "permission",
            Modality::Entitlement => "entitlement",
        }
    }

    /// A prohibition opposes every other modality.
    pub fn opposes(self, other: Modality) -> bool {
        (self == Modality::Prohibition) != (other == Modality::Prohibition)
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The parts of an obligation trigger that decide applicability.
#[derive(Debug, Clone, PartialEq)]
pub struct DeonticTrigger {
    pub id: NodeId,
    pub modality: Option<Modality>,
    pub holder: Option<NodeId>,
    pub condition_roots: Vec<NodeId>,
    pub jurisdictions: Vec<NodeId>,
    /// Temporal constraints, each paired with the edge that attaches it.
    pub windows: Vec<(EdgeId, TimeWindow)>,
    pub what: Vec<NodeId>,
}

fn trigger_node<'g>(graph: &'g PropertyGraph, id: &str) -> Result<&'g NodeRecord, DefeasibilityError> {
    let n = graph
        .node(id)
        .ok_or_else(|| DefeasibilityError::MissingNode(id.to_string()))?;
    if !n.is_a("obligation_trigger") {
        return Err(DefeasibilityError::NotATrigger(id.to_string()));
    }
    Ok(n)
}

impl DeonticTrigger {
    pub fn extract(graph: &PropertyGraph, id: &str) -> Result<Self, DefeasibilityError> {
        let node = trigger_node(graph, id)?;
        let ix = node.ix();
        let modality_edge = graph.out_typed(ix, "deontic_modality").next();
        let raw_modality = modality_edge
            .and_then(|e| e.str_prop("type"))
            .or_else(|| node.str_prop("modality"));
        let modality = raw_modality
            .map(|m| {
                Modality::parse(m).ok_or_else(|| DefeasibilityError::BadModality {
                    node: id.to_string(),
                    value: m.to_string(),
                })
            })
            .transpose()?;
        let condition_roots = graph
            .out_typed(ix, "if_true")
            .map(|e| graph.node_at(e.dst_ix()))
            .filter(|n| n.is_a("logic_node") || n.is_a("condition"))
            .map(|n| n.id.clone())
            .collect();
        let jurisdictions = graph
            .in_typed(ix, "has_jurisdiction")
            .map(|e| e.src.clone())
            .collect();
        let mut windows = Vec::new();
        for e in graph.out_edges(ix) {
            let timex = graph.node_at(e.dst_ix());
            let at = timex.prop("at").and_then(Value::as_instant).copied();
            let w = match e.edge_type.as_str() {
                "during" | "on" | "recurring" => timex.prop("window").and_then(Value::as_window).cloned(),
                "before" => at.map(TimeWindow::until),
                "after" => at.map(TimeWindow::from_instant),
                _ => None,
            };
            if let Some(w) = w {
                windows.push((e.id.clone(), w));
            }
        }
        Ok(DeonticTrigger {
            id: node.id.clone(),
            modality,
            holder: modality_edge.map(|e| e.dst.clone()),
            condition_roots,
            jurisdictions,
            windows,
            what: graph.out_typed(ix, "whatRel").map(|e| e.dst.clone()).collect(),
        })
    }
}

/// Applicability of one trigger with the reason it failed, if it did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applicability {
    pub applicable: bool,
    pub reason: String,
}

impl Applicability {
    fn yes() -> Self {
        Applicability {
            applicable: true,
            reason: "applicable".into(),
        }
    }

    fn no(reason: String) -> Self {
        Applicability {
            applicable: false,
            reason,
        }
    }
}

/// Checks status, holder, jurisdiction, time windows and conditions in
/// that order. A check is skipped when the context lacks its input.
pub fn assess(graph: &PropertyGraph, id: &str, ctx: &EvalContext) -> Result<Applicability, DefeasibilityError> {
    let node = trigger_node(graph, id)?;
    if node.base.status != Status::Active {
        return Ok(Applicability::no(format!("status is {}", node.base.status.as_str())));
    }
    let t = DeonticTrigger::extract(graph, id)?;
    if let (Some(holder), Some(party)) = (&t.holder, &ctx.party) {
        if !party_matches(graph, holder.as_str(), party.as_str(), ctx.instant.as_ref()) {
            return Ok(Applicability::no(format!("party {party} is not bound as {holder}")));
        }
    }
    if let (false, Some(p)) = (t.jurisdictions.is_empty(), ctx.position) {
        let mut inside = false;
        for j in &t.jurisdictions {
            let jn = graph.node(j.as_str()).expect("edge endpoint exists");
            let region = region_of(jn).ok_or_else(|| DefeasibilityError::UnresolvableJurisdiction(j.to_string()))??;
            if region.contains(&p) {
                inside = true;
                break;
            }
        }
        if !inside {
            let names: Vec<_> = t.jurisdictions.iter().map(NodeId::as_str).collect();
            return Ok(Applicability::no(format!(
                "position ({}, {}) is outside {}",
                p.x,
                p.y,
                names.join(", ")
            )));
        }
    }
    if let (false, Some(at)) = (t.windows.is_empty(), &ctx.instant) {
        let live: Vec<_> = t
            .windows
            .iter()
            .filter(|(e, _)| graph.edge(e.as_str()).is_some_and(|e| e.valid_at(Some(at))))
            .collect();
        if !live.is_empty() && !live.iter().any(|(_, w)| in_window(at, w)) {
            return Ok(Applicability::no(format!(
                "{} is outside {}",
                crate::temporal::fmt_instant(at),
                live.iter().map(|(_, w)| w.to_string()).collect::<Vec<_>>().join(", ")
            )));
        }
    }
    for root in &t.condition_roots {
        let tree = build_tree(graph, root.as_str())?;
        if !evaluate(&tree, ctx, graph)? {
            return Ok(Applicability::no(format!("condition {tree} is false")));
        }
    }
    Ok(Applicability::yes())
}

pub fn applicable(graph: &PropertyGraph, id: &str, ctx: &EvalContext) -> Result<bool, DefeasibilityError> {
    assess(graph, id, ctx).map(|a| a.applicable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DefeatReason {
    Excepted,
    Overridden,
    Precedence,
}

impl DefeatReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DefeatReason::Excepted => "excepted",
            DefeatReason::Overridden => "overridden",
            DefeatReason::Precedence => "precedence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Defeat {
    pub loser: NodeId,
    pub winner: NodeId,
    pub reason: DefeatReason,
    /// Edges from `winner` to `loser` that justify the defeat.
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TraceTag {
    Eval,
    Defeat,
    Winner,
    Warn,
    Conflict,
}

impl fmt::Display for TraceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceTag::Eval => "EVAL",
            TraceTag::Defeat => "DEFEAT",
            TraceTag::Winner => "WINNER",
            TraceTag::Warn => "WARN",
            TraceTag::Conflict => "CONFLICT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceLine {
    pub tag: TraceTag,
    pub text: String,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tag, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub a: NodeId,
    pub b: NodeId,
    pub modalities: (Modality, Modality),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ruling {
    /// In id order.
    pub winners: Vec<NodeId>,
    pub defeated: Vec<Defeat>,
    /// Winners with opposing modalities over the same subject; reported,
    /// not resolved.
    pub conflicts: Vec<Conflict>,
    pub trace: Vec<TraceLine>,
}

impl Ruling {
    pub fn losers(&self) -> BTreeSet<&NodeId> {
        self.defeated.iter().map(|d| &d.loser).collect()
    }
}

fn edge_in_force(e: &EdgeRecord, at: Option<&NaiveDateTime>) -> bool {
    e.base.status == Status::Active && e.valid_at(at)
}

/// Shortest path (fewest edges, then edge order) from `from` to `to`
/// over edges of `edge_type` whose nodes satisfy `allowed`.
fn shortest_path(
    graph: &PropertyGraph,
    from: NodeIx,
    to: NodeIx,
    edge_type: &str,
    at: Option<&NaiveDateTime>,
    allowed: &dyn Fn(NodeIx) -> bool,
) -> Option<Vec<EdgeId>> {
    let mut prev: BTreeMap<NodeIx, &EdgeRecord> = BTreeMap::new();
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for e in graph.out_typed(v, edge_type).filter(|e| edge_in_force(e, at)) {
            let w = e.dst_ix();
            if !allowed(w) || !seen.insert(w) {
                continue;
            }
            prev.insert(w, e);
            if w == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let e = prev[&cur];
                    path.push(e.id.clone());
                    cur = e.src_ix();
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(w);
        }
    }
    None
}

/// A cycle among `nodes` in the `edge_type` subgraph restricted to
/// `allowed`, reported in id order.
fn find_cycle(
    graph: &PropertyGraph,
    edge_type: &str,
    at: Option<&NaiveDateTime>,
    allowed: &dyn Fn(NodeIx) -> bool,
    must_touch: &BTreeSet<NodeIx>,
) -> Option<Vec<NodeIx>> {
    // A node is on a cycle iff it can reach itself.
    for &v in must_touch {
        if !allowed(v) {
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for e in graph.out_typed(u, edge_type).filter(|e| edge_in_force(e, at)) {
                let w = e.dst_ix();
                if !allowed(w) {
                    continue;
                }
                if w == v {
                    // Collect the component through v for the message.
                    let back = reachers(graph, v, edge_type, at, allowed);
                    let mut comp: Vec<NodeIx> = seen.iter().copied().filter(|x| back.contains(x)).collect();
                    comp.push(v);
                    comp.sort();
                    comp.dedup();
                    return Some(comp);
                }
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    None
}

fn reachers(
    graph: &PropertyGraph,
    v: NodeIx,
    edge_type: &str,
    at: Option<&NaiveDateTime>,
    allowed: &dyn Fn(NodeIx) -> bool,
) -> BTreeSet<NodeIx> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        for e in graph.in_typed(u, edge_type).filter(|e| edge_in_force(e, at)) {
            let w = e.src_ix();
            if allowed(w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

fn label_of(graph: &PropertyGraph, ix: NodeIx) -> String {
    let n = graph.node_at(ix);
    if n.label.is_empty() {
        n.id.to_string()
    } else {
        format!("{} ({})", n.id, n.label)
    }
}

/// Resolves the triggers in `scope` (all obligation triggers when `None`).
pub fn resolve(
    graph: &PropertyGraph,
    ctx: &EvalContext,
    scope: Option<&[NodeId]>,
) -> Result<Ruling, DefeasibilityError> {
    let at = ctx.instant.as_ref();
    let candidates: BTreeSet<NodeIx> = match scope {
        Some(ids) => ids
            .iter()
            .map(|id| trigger_node(graph, id.as_str()).map(NodeRecord::ix))
            .collect::<Result<_, _>>()?,
        None => graph.nodes_of_type("obligation_trigger").iter().copied().collect(),
    };
    let mut trace = Vec::new();
    let push = |trace: &mut Vec<TraceLine>, tag, text: String| trace.push(TraceLine { tag, text });

    let mut applicable_set = BTreeSet::new();
    for &c in &candidates {
        let a = assess(graph, graph.node_at(c).id.as_str(), ctx)?;
        push(
            &mut trace,
            TraceTag::Eval,
            format!(
                "{} {}",
                graph.node_at(c).id,
                if a.applicable { "applicable".to_string() } else { format!("not applicable: {}", a.reason) }
            ),
        );
        if a.applicable {
            applicable_set.insert(c);
        }
    }

    let in_applicable = |ix: NodeIx| applicable_set.contains(&ix);
    if let Some(cycle) = find_cycle(graph, "exception", at, &in_applicable, &applicable_set) {
        return Err(DefeasibilityError::DefeasibilityCycle {
            kind: "exception",
            nodes: cycle.iter().map(|&ix| graph.node_at(ix).id.to_string()).collect(),
        });
    }
    let anything = |_: NodeIx| true;
    if let Some(cycle) = find_cycle(graph, "override", at, &anything, &applicable_set) {
        return Err(DefeasibilityError::DefeasibilityCycle {
            kind: "override",
            nodes: cycle.iter().map(|&ix| graph.node_at(ix).id.to_string()).collect(),
        });
    }

    let mut defeated = Vec::new();
    // Exceptions: both ends and every intermediate node applicable.
    let mut excepted = BTreeSet::new();
    for &loser in &applicable_set {
        for &winner in &applicable_set {
            if winner == loser {
                continue;
            }
            if let Some(path) = shortest_path(graph, winner, loser, "exception", at, &in_applicable) {
                excepted.insert(loser);
                defeated.push(Defeat {
                    loser: graph.node_at(loser).id.clone(),
                    winner: graph.node_at(winner).id.clone(),
                    reason: DefeatReason::Excepted,
                    edges: path,
                });
            }
        }
    }
    let survivors: BTreeSet<NodeIx> = applicable_set.difference(&excepted).copied().collect();

    // Overrides: between survivors, through any intermediate trigger.
    let mut overridden = BTreeSet::new();
    for &loser in &survivors {
        for &winner in &survivors {
            if winner == loser {
                continue;
            }
            if let Some(path) = shortest_path(graph, winner, loser, "override", at, &anything) {
                overridden.insert(loser);
                defeated.push(Defeat {
                    loser: graph.node_at(loser).id.clone(),
                    winner: graph.node_at(winner).id.clone(),
                    reason: DefeatReason::Overridden,
                    edges: path,
                });
            }
        }
    }
    let survivors: BTreeSet<NodeIx> = survivors.difference(&overridden).copied().collect();

    // Precedence: pairwise levels between survivors.
    let mut outranked = BTreeSet::new();
    let mut warnings = Vec::new();
    let level = |from: NodeIx, to: NodeIx| -> Option<(f64, Vec<EdgeId>)> {
        let edges: Vec<&EdgeRecord> = graph
            .out_typed(from, "precedence")
            .filter(|e| e.dst_ix() == to && edge_in_force(e, at))
            .collect();
        if edges.is_empty() {
            return None;
        }
        let lvl = edges
            .iter()
            .map(|e| e.prop("level").and_then(Value::as_f64).unwrap_or(1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        Some((lvl, edges.iter().map(|e| e.id.clone()).collect()))
    };
    for &x in &survivors {
        for &y in survivors.range(x..).skip(1) {
            let (lx, ex) = level(x, y).map_or((0.0, Vec::new()), |(l, e)| (l, e));
            let (ly, ey) = level(y, x).map_or((0.0, Vec::new()), |(l, e)| (l, e));
            if ex.is_empty() && ey.is_empty() {
                continue;
            }
            let mut edges = ex;
            edges.extend(ey);
            let (winner, loser) = if lx > ly {
                (x, y)
            } else if ly > lx {
                (y, x)
            } else {
                warnings.push(format!(
                    "precedence tie at level {} between {} and {} via {}; both kept",
                    crate::value::fmt_number(lx),
                    graph.node_at(x).id,
                    graph.node_at(y).id,
                    edges.iter().map(EdgeId::as_str).collect::<Vec<_>>().join(", ")
                ));
                continue;
            };
            outranked.insert(loser);
            defeated.push(Defeat {
                loser: graph.node_at(loser).id.clone(),
                winner: graph.node_at(winner).id.clone(),
                reason: DefeatReason::Precedence,
                edges,
            });
        }
    }
    let winners: BTreeSet<NodeIx> = survivors.difference(&outranked).copied().collect();

    for d in &defeated {
        let verb = match d.reason {
            DefeatReason::Excepted => "excepted by",
            DefeatReason::Overridden => "overridden by",
            DefeatReason::Precedence => "outranked by",
        };
        push(
            &mut trace,
            TraceTag::Defeat,
            format!(
                "{} {verb} {} via {}",
                d.loser,
                d.winner,
                d.edges.iter().map(EdgeId::as_str).collect::<Vec<_>>().join(" -> ")
            ),
        );
    }
    for w in warnings {
        push(&mut trace, TraceTag::Warn, w);
    }

    let mut extracted = BTreeMap::new();
    for &w in &winners {
        extracted.insert(w, DeonticTrigger::extract(graph, graph.node_at(w).id.as_str())?);
    }
    for &w in &winners {
        let m = extracted[&w].modality.map_or("unspecified modality", Modality::as_str);
        push(&mut trace, TraceTag::Winner, format!("{} [{m}]", label_of(graph, w)));
    }
    let mut conflicts = Vec::new();
    for &a in &winners {
        for &b in winners.range(a..).skip(1) {
            let (ta, tb) = (&extracted[&a], &extracted[&b]);
            let (Some(ma), Some(mb)) = (ta.modality, tb.modality) else {
                continue;
            };
            let same_subject = (ta.what.is_empty() && tb.what.is_empty())
                || ta.what.iter().any(|w| tb.what.contains(w));
            if ma.opposes(mb) && same_subject {
                push(
                    &mut trace,
                    TraceTag::Conflict,
                    format!("{} ({ma}) and {} ({mb}) both apply", ta.id, tb.id),
                );
                conflicts.push(Conflict {
                    a: ta.id.clone(),
                    b: tb.id.clone(),
                    modalities: (ma, mb),
                });
            }
        }
    }
    Ok(Ruling {
        winners: winners.into_iter().map(|w| graph.node_at(w).id.clone()).collect(),
        defeated,
        conflicts,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    True,
    False,
    Late,
}

impl Outcome {
    fn edge_type(self) -> &'static str {
        match self {
            Outcome::True => "if_true",
            Outcome::False => "if_false",
            Outcome::Late => "if_late",
        }
    }
}

/// Triggers that follow from `antecedent` under `outcome`, in edge order.
pub fn consequences(graph: &PropertyGraph, antecedent: &str, outcome: Outcome) -> Result<Vec<NodeId>, DefeasibilityError> {
    let ix = graph
        .node_ix(antecedent)
        .ok_or_else(|| DefeasibilityError::MissingNode(antecedent.to_string()))?;
    Ok(graph
        .out_typed(ix, outcome.edge_type())
        .filter(|e| {
            let n = graph.node_at(e.dst_ix());
            n.is_a("obligation_trigger") || n.is_a("event_trigger")
        })
        .map(|e| e.dst.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnmetPrerequisite {
    pub node: NodeId,
    pub edge: EdgeId,
    pub mandatory: bool,
    /// Minutes; informational only.
    pub grace_period: Option<i64>,
}

/// Prerequisite sources of `trigger` not in `satisfied`, in edge order.
pub fn check_prerequisites(
    graph: &PropertyGraph,
    trigger: &str,
    satisfied: &BTreeSet<NodeId>,
) -> Result<Vec<UnmetPrerequisite>, DefeasibilityError> {
    let ix = graph
        .node_ix(trigger)
        .ok_or_else(|| DefeasibilityError::MissingNode(trigger.to_string()))?;
    Ok(graph
        .in_typed(ix, "prerequisite")
        .filter(|e| !satisfied.contains(&e.src))
        .map(|e| UnmetPrerequisite {
            node: e.src.clone(),
            edge: e.id.clone(),
            mandatory: e.prop("mandatory").and_then(Value::as_bool).unwrap_or(true),
            grace_period: e.prop("grace_period").and_then(Value::as_minutes),
        })
        .collect())
}

/// Pairs of active triggers joined by a `mutual_exclusivity` edge, each
/// unordered pair once, oriented as its first edge, in edge order.
pub fn check_mutual_exclusivity(graph: &PropertyGraph, active: &BTreeSet<NodeId>) -> Vec<(NodeId, NodeId)> {
    let mut seen = BTreeSet::new();
    graph
        .edges()
        .filter(|e| e.edge_type == "mutual_exclusivity")
        .filter(|e| active.contains(&e.src) && active.contains(&e.dst))
        .filter(|e| {
            let key = if e.src <= e.dst { (e.src.clone(), e.dst.clone()) } else { (e.dst.clone(), e.src.clone()) };
            seen.insert(key)
        })
        .map(|e| (e.src.clone(), e.dst.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NewEdge, NewNode};
    use crate::schema::TypeSchema;
    use std::sync::Arc;

    fn triggers(ids: &[&str]) -> PropertyGraph {
        let mut g = PropertyGraph::new(Arc::new(TypeSchema::builtin()));
        for id in ids {
            g.add_node(NewNode::new("obligation_trigger").id(*id)).unwrap();
        }
        g
    }

    fn ids(v: &[NodeId]) -> Vec<&str> {
        v.iter().map(NodeId::as_str).collect()
    }

    #[test]
    fn exception_chain_defeats_transitively() {
        let mut g = triggers(&["o1", "o2", "o3"]);
        g.add_edge(NewEdge::new("EXCEPTS", "o2", "o1").id("x21")).unwrap();
        g.add_edge(NewEdge::new("EXCEPTS", "o3", "o2").id("x32")).unwrap();
        let r = resolve(&g, &EvalContext::default(), None).unwrap();
        assert_eq!(ids(&r.winners), ["o3"]);
        let via_o3 = r.defeated.iter().find(|d| d.loser.as_str() == "o1" && d.winner.as_str() == "o3").unwrap();
        assert_eq!(via_o3.edges, vec![EdgeId::from("x32"), EdgeId::from("x21")]);
        assert!(r.trace.iter().any(|l| l.to_string() == "DEFEAT o1 excepted by o3 via x32 -> x21"));
    }

    #[test]
    fn exception_needs_applicable_intermediates() {
        let mut g = triggers(&["o1", "o2", "o3"]);
        g.add_node(NewNode::new("condition").id("never")).unwrap();
        g.add_edge(NewEdge::new("if_true", "o2", "never")).unwrap();
        g.add_edge(NewEdge::new("EXCEPTS", "o2", "o1")).unwrap();
        g.add_edge(NewEdge::new("EXCEPTS", "o3", "o2")).unwrap();
        let r = resolve(&g, &EvalContext::default(), None).unwrap();
        assert_eq!(ids(&r.winners), ["o1", "o3"]);
    }

    #[test]
    fn override_reaches_through_inapplicable() {
        let mut g = triggers(&["ob1", "ob2", "ob3"]);
        g.add_node(NewNode::new("condition").id("permit")).unwrap();
        g.add_edge(NewEdge::new("if_true", "ob2", "permit")).unwrap();
        g.add_edge(NewEdge::new("OVERRIDES", "ob2", "ob1")).unwrap();
        g.add_edge(NewEdge::new("OVERRIDES", "ob3", "ob2")).unwrap();
        let r = resolve(&g, &EvalContext::default(), None).unwrap();
        assert_eq!(ids(&r.winners), ["ob3"]);
    }

    #[test]
    fn cycles_among_applicable_are_errors() {
        let mut g = triggers(&["a", "b"]);
        g.add_edge(NewEdge::new("EXCEPTS", "a", "b")).unwrap();
        g.add_edge(NewEdge::new("EXCEPTS", "b", "a")).unwrap();
        assert!(matches!(
            resolve(&g, &EvalContext::default(), None),
            Err(DefeasibilityError::DefeasibilityCycle { kind: "exception", .. })
        ));
    }

    #[test]
    fn precedence_levels_and_ties() {
        let mut g = triggers(&["a", "b", "c", "d"]);
        g.add_edge(NewEdge::new("precedence", "a", "b").prop("level", 2.0)).unwrap();
        g.add_edge(NewEdge::new("precedence", "c", "d").prop("level", 1.0)).unwrap();
        g.add_edge(NewEdge::new("precedence", "d", "c").prop("level", 1.0)).unwrap();
        let r = resolve(&g, &EvalContext::default(), None).unwrap();
        assert_eq!(ids(&r.winners), ["a", "c", "d"]);
        assert!(r.trace.iter().any(|l| l.tag == TraceTag::Warn));
    }

    #[test]
    fn expired_edges_are_ignored() {
        let mut g = triggers(&["o1", "o2"]);
        let w = TimeWindow::absolute(
            crate::temporal::parse_instant("2020-01-01").unwrap(),
            crate::temporal::parse_instant("2021-01-01").unwrap(),
        )
        .unwrap();
        g.add_edge(NewEdge::new("EXCEPTS", "o2", "o1").validity(w)).unwrap();
        let ctx = EvalContext::default().at_instant(crate::temporal::parse_instant("2024-01-01").unwrap());
        assert_eq!(ids(&resolve(&g, &ctx, None).unwrap().winners), ["o1", "o2"]);
        let ctx = EvalContext::default().at_instant(crate::temporal::parse_instant("2020-06-01").unwrap());
        assert_eq!(ids(&resolve(&g, &ctx, None).unwrap().winners), ["o2"]);
    }

    #[test]
    fn modality_conflicts_flagged() {
        let mut g = triggers(&["p", "q"]);
        g.add_node(NewNode::new("party").id("v")).unwrap();
        g.add_edge(NewEdge::new("performed_by", "p", "v").prop("type", "prohibition")).unwrap();
        g.add_edge(NewEdge::new("performed_by", "q", "v").prop("type", "permission")).unwrap();
        let r = resolve(&g, &EvalContext::default(), None).unwrap();
        assert_eq!(r.conflicts.len(), 1);
        assert_eq!(ids(&r.winners), ["p", "q"]);
    }

    #[test]
    fn holder_filter() {
        let mut g = triggers(&["t"]);
        g.add_node(NewNode::new("party").id("v")).unwrap();
        g.add_node(NewNode::new("party").id("w")).unwrap();
        g.add_edge(NewEdge::new("performed_by", "t", "v").prop("type", "obligation")).unwrap();
        assert!(applicable(&g, "t", &EvalContext::default().with_party("v")).unwrap());
        assert!(!applicable(&g, "t", &EvalContext::default().with_party("w")).unwrap());
        assert!(applicable(&g, "t", &EvalContext::default()).unwrap());
    }

    #[test]
    fn consequences_prereqs_exclusivity() {
        let mut g = triggers(&["a", "b", "c"]);
        g.add_node(NewNode::new("event_trigger").id("e")).unwrap();
        g.add_node(NewNode::new("semantic").id("license")).unwrap();
        g.add_edge(NewEdge::new("if_true", "e", "a")).unwrap();
        g.add_edge(NewEdge::new("if_false", "e", "b")).unwrap();
        g.add_edge(NewEdge::new("prerequisite", "license", "a")).unwrap();
        g.add_edge(NewEdge::new("prerequisite", "c", "a")).unwrap();
        g.add_edge(NewEdge::new("mutual_exclusivity", "a", "b")).unwrap();
        g.add_edge(NewEdge::new("mutual_exclusivity", "b", "a")).unwrap();
        assert_eq!(ids(&consequences(&g, "e", Outcome::True).unwrap()), ["a"]);
        assert!(consequences(&g, "c", Outcome::Late).unwrap().is_empty());
        let sat = BTreeSet::from([NodeId::from("c")]);
        let unmet = check_prerequisites(&g, "a", &sat).unwrap();
        assert_eq!(unmet.len(), 1);
        assert_eq!(unmet[0].node.as_str(), "license");
        let active = BTreeSet::from([NodeId::from("a"), NodeId::from("b")]);
        assert_eq!(check_mutual_exclusivity(&g, &active), vec![(NodeId::from("a"), NodeId::from("b"))]);
        let only_a = BTreeSet::from([NodeId::from("a")]);
        assert!(check_mutual_exclusivity(&g, &only_a).is_empty());
    }
}
