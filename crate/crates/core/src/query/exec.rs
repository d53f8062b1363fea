use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::ast::*;
use super::{QueryError, ResultTable};
use crate::graph::{EdgeIx, NodeIx, PropertyGraph};
use crate::schema::subclass_ancestors;
use crate::value::Value;

pub const DEFAULT_MAX_BINDINGS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Maximum number of complete bindings before execution fails.
    pub max_bindings: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            max_bindings: DEFAULT_MAX_BINDINGS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Elem {
    Node(NodeIx),
    Edge(EdgeIx),
}

type Binding = Vec<Option<Elem>>;

/// Node constraint: slot, label, property equalities.
#[derive(Debug)]
struct NodeTest<'q> {
    slot: usize,
    label: Option<&'q str>,
    props: Vec<(&'q str, CExpr<'q>)>,
}

#[derive(Debug)]
enum Atom<'q> {
    Node(NodeTest<'q>),
    Edge {
        slot: usize,
        label: Option<&'q str>,
        props: Vec<(&'q str, CExpr<'q>)>,
        src: usize,
        dst: usize,
    },
}

/// A conjunctive pattern with filters placed after the atom that binds
/// their last variable. `filters[0]` runs before any atom.
#[derive(Debug)]
struct Plan<'q> {
    atoms: Vec<Atom<'q>>,
    filters: Vec<Vec<CExpr<'q>>>,
    /// Slots below the floor belong to enclosing queries.
    floor: usize,
}

/// Expression with variables resolved to slots.
#[derive(Debug)]
enum CExpr<'q> {
    Null,
    Lit(&'q Value),
    List(Vec<CExpr<'q>>),
    Var(usize),
    Prop(usize, &'q str),
    Cmp(Box<CExpr<'q>>, CmpOp, Box<CExpr<'q>>),
    IsNull(Box<CExpr<'q>>, bool),
    And(Vec<CExpr<'q>>),
    Or(Vec<CExpr<'q>>),
    Not(Box<CExpr<'q>>),
    Exists(Box<Plan<'q>>),
    Case {
        whens: Vec<(CExpr<'q>, CExpr<'q>)>,
        otherwise: Option<Box<CExpr<'q>>>,
    },
}

struct Compiler<'q> {
    slots: BTreeMap<&'q str, usize>,
    nslots: usize,
}

impl<'q> Compiler<'q> {
    fn slot(&mut self, name: Option<&'q str>) -> usize {
        match name {
            Some(n) => {
                if let Some(&s) = self.slots.get(n) {
                    return s;
                }
                let s = self.nslots;
                self.nslots += 1;
                self.slots.insert(n, s);
                s
            }
            None => {
                self.nslots += 1;
                self.nslots - 1
            }
        }
    }

    fn props(&mut self, props: &'q [(String, Expr)]) -> Vec<(&'q str, CExpr<'q>)> {
        props.iter().map(|(k, v)| (k.as_str(), self.expr(v))).collect()
    }

    fn node(&mut self, n: &'q NodePat) -> NodeTest<'q> {
        let slot = self.slot(n.var.as_deref());
        NodeTest {
            slot,
            label: n.label.as_deref(),
            props: self.props(&n.props),
        }
    }

    fn path_atoms(&mut self, p: &'q Path, atoms: &mut Vec<Atom<'q>>) {
        let start = self.node(&p.start);
        let mut prev = start.slot;
        atoms.push(Atom::Node(start));
        for (e, n) in &p.steps {
            let slot = self.slot(e.var.as_deref());
            let props = self.props(&e.props);
            let next = self.node(n);
            let (src, dst) = match e.dir {
                Direction::Out => (prev, next.slot),
                Direction::In => (next.slot, prev),
            };
            atoms.push(Atom::Edge {
                slot,
                label: e.label.as_deref(),
                props,
                src,
                dst,
            });
            prev = next.slot;
            atoms.push(Atom::Node(next));
        }
    }

    /// Compiles a conjunctive body. Variables already holding slots are
    /// correlated with the enclosing query.
    fn plan(&mut self, paths: Vec<&'q Path>, filters: Vec<&'q Expr>) -> Plan<'q> {
        let outer: BTreeSet<usize> = self.slots.values().copied().collect();
        let floor = self.nslots;
        let mut atoms = Vec::new();
        for p in paths {
            self.path_atoms(p, &mut atoms);
        }
        // Position after which each slot is bound.
        let mut bound_at: BTreeMap<usize, usize> = outer.iter().map(|&s| (s, 0)).collect();
        for (i, a) in atoms.iter().enumerate() {
            let slots: Vec<usize> = match a {
                Atom::Node(t) => vec![t.slot],
                Atom::Edge { slot, src, dst, .. } => vec![*slot, *src, *dst],
            };
            for s in slots {
                bound_at.entry(s).or_insert(i + 1);
            }
        }
        let mut placed: Vec<Vec<CExpr<'q>>> = (0..=atoms.len()).map(|_| Vec::new()).collect();
        for f in filters {
            for conjunct in conjuncts(f) {
                let c = self.expr(conjunct);
                let mut free = BTreeSet::new();
                free_slots(&c, &mut free);
                let at = free.iter().map(|s| bound_at.get(s).copied().unwrap_or(atoms.len())).max().unwrap_or(0);
                placed[at].push(c);
            }
        }
        Plan {
            atoms,
            filters: placed,
            floor,
        }
    }

    fn sub_plan(&mut self, clauses: &'q [Clause]) -> Plan<'q> {
        let saved = self.slots.clone();
        let mut paths = Vec::new();
        let mut filters = Vec::new();
        for c in clauses {
            match c {
                Clause::Match(ps) => paths.extend(ps.iter()),
                Clause::Where(e) => filters.push(e),
            }
        }
        let plan = self.plan(paths, filters);
        self.slots = saved;
        plan
    }

    fn expr(&mut self, e: &'q Expr) -> CExpr<'q> {
        match e {
            Expr::Null => CExpr::Null,
            Expr::Lit(v) => CExpr::Lit(v),
            Expr::List(items) => CExpr::List(items.iter().map(|i| self.expr(i)).collect()),
            // Unknown names only occur in ORDER BY aliases, handled earlier.
            Expr::Var(v) => self.slots.get(v.as_str()).map_or(CExpr::Null, |&s| CExpr::Var(s)),
            Expr::Prop(v, k) => self.slots.get(v.as_str()).map_or(CExpr::Null, |&s| CExpr::Prop(s, k)),
            Expr::Cmp(a, op, b) => CExpr::Cmp(Box::new(self.expr(a)), *op, Box::new(self.expr(b))),
            Expr::IsNull(a, neg) => CExpr::IsNull(Box::new(self.expr(a)), *neg),
            Expr::And(items) => CExpr::And(items.iter().map(|i| self.expr(i)).collect()),
            Expr::Or(items) => CExpr::Or(items.iter().map(|i| self.expr(i)).collect()),
            Expr::Not(a) => CExpr::Not(Box::new(self.expr(a))),
            Expr::Exists(sub) => CExpr::Exists(Box::new(self.sub_plan(&sub.clauses))),
            Expr::Pattern(p) => {
                let saved = self.slots.clone();
                let plan = self.plan(vec![p], Vec::new());
                self.slots = saved;
                CExpr::Exists(Box::new(plan))
            }
            Expr::Case { whens, otherwise } => CExpr::Case {
                whens: whens.iter().map(|(c, v)| (self.expr(c), self.expr(v))).collect(),
                otherwise: otherwise.as_ref().map(|o| Box::new(self.expr(o))),
            },
        }
    }
}

fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::And(items) => items.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

/// Slots read by an expression that are not bound inside it.
fn free_slots(e: &CExpr<'_>, out: &mut BTreeSet<usize>) {
    match e {
        CExpr::Null | CExpr::Lit(_) => {}
        CExpr::Var(s) | CExpr::Prop(s, _) => {
            out.insert(*s);
        }
        CExpr::List(items) | CExpr::And(items) | CExpr::Or(items) => items.iter().for_each(|i| free_slots(i, out)),
        CExpr::Cmp(a, _, b) => {
            free_slots(a, out);
            free_slots(b, out);
        }
        CExpr::IsNull(a, _) | CExpr::Not(a) => free_slots(a, out),
        CExpr::Exists(plan) => {
            let mut inner = BTreeSet::new();
            for a in &plan.atoms {
                match a {
                    Atom::Node(t) => {
                        inner.insert(t.slot);
                        t.props.iter().for_each(|(_, v)| free_slots(v, &mut inner));
                    }
                    Atom::Edge {
                        slot, src, dst, props, ..
                    } => {
                        inner.extend([*slot, *src, *dst]);
                        props.iter().for_each(|(_, v)| free_slots(v, &mut inner));
                    }
                }
            }
            plan.filters.iter().flatten().for_each(|f| free_slots(f, &mut inner));
            out.extend(inner.into_iter().filter(|s| *s < plan.floor));
        }
        CExpr::Case { whens, otherwise } => {
            for (c, v) in whens {
                free_slots(c, out);
                free_slots(v, out);
            }
            if let Some(o) = otherwise {
                free_slots(o, out);
            }
        }
    }
}

struct Exec<'g, 'q> {
    graph: &'g PropertyGraph,
    /// Nodes matching each label.
    labels: BTreeMap<&'q str, Vec<NodeIx>>,
    label_sets: BTreeMap<&'q str, Vec<bool>>,
    max_bindings: usize,
    produced: usize,
}

impl<'g, 'q> Exec<'g, 'q> {
    fn node_ok(&mut self, ix: NodeIx, t: &NodeTest<'q>) -> bool {
        if let Some(l) = t.label {
            if !self.label_sets[l][ix.0 as usize] {
                return false;
            }
        }
        let n = self.graph.node_at(ix);
        t.props.iter().all(|(k, v)| match (n.lookup(k), literal(v)) {
            (Some(a), Some(b)) => a.loose_eq(&b),
            _ => false,
        })
    }

    fn edge_ok(&mut self, ix: EdgeIx, label: Option<&str>, props: &[(&'q str, CExpr<'q>)]) -> bool {
        let e = self.graph.edge_at(ix);
        if let Some(l) = label {
            if !self.graph.schema().edge_label_matches(&e.edge_type, l) {
                return false;
            }
        }
        props.iter().all(|(k, v)| match (e.lookup(k), literal(v)) {
            (Some(a), Some(b)) => a.loose_eq(&b),
            _ => false,
        })
    }

    /// Enumerates extensions of `b` through `plan` from atom `i`, calling
    /// `emit` on each complete binding; `emit` returns false to stop.
    fn run(
        &mut self,
        plan: &Plan<'q>,
        i: usize,
        b: &mut Binding,
        emit: &mut dyn FnMut(&mut Self, &Binding) -> Result<bool, QueryError>,
    ) -> Result<bool, QueryError> {
        for f in &plan.filters[i] {
            if !self.truthy(f, b)? {
                return Ok(true);
            }
        }
        let Some(atom) = plan.atoms.get(i) else {
            return emit(self, b);
        };
        match atom {
            Atom::Node(t) => match b[t.slot] {
                Some(Elem::Node(ix)) => {
                    if self.node_ok(ix, t) {
                        return self.run(plan, i + 1, b, emit);
                    }
                    Ok(true)
                }
                Some(Elem::Edge(_)) => Ok(true),
                None => {
                    let cands: Vec<NodeIx> = match t.label {
                        Some(l) => self.labels[l].clone(),
                        None => (0..self.graph.node_count() as u32).map(NodeIx).collect(),
                    };
                    for ix in cands {
                        if self.node_ok(ix, t) {
                            b[t.slot] = Some(Elem::Node(ix));
                            let go = self.run(plan, i + 1, b, emit);
                            b[t.slot] = None;
                            if !go? {
                                return Ok(false);
                            }
                        }
                    }
                    Ok(true)
                }
            },
            Atom::Edge {
                slot,
                label,
                props,
                src,
                dst,
            } => {
                let node_of = |s: usize, b: &Binding| match b[s] {
                    Some(Elem::Node(ix)) => Some(ix),
                    _ => None,
                };
                let cands: Vec<EdgeIx> = match (b[*slot], node_of(*src, b), node_of(*dst, b)) {
                    (Some(Elem::Edge(e)), _, _) => vec![e],
                    (Some(Elem::Node(_)), _, _) => vec![],
                    (None, Some(s), _) => self.graph.out_edges(s).map(|e| e.ix()).collect(),
                    (None, None, Some(d)) => self.graph.in_edges(d).map(|e| e.ix()).collect(),
                    (None, None, None) => (0..self.graph.edge_count() as u32).map(EdgeIx).collect(),
                };
                let edge_was_bound = b[*slot].is_some();
                for eix in cands {
                    let e = self.graph.edge_at(eix);
                    let (es, ed) = (e.src_ix(), e.dst_ix());
                    if node_of(*src, b).is_some_and(|s| s != es) || node_of(*dst, b).is_some_and(|d| d != ed) {
                        continue;
                    }
                    if !self.edge_ok(eix, *label, props) {
                        continue;
                    }
                    let src_was = b[*src];
                    let dst_was = b[*dst];
                    // A self-loop pattern `(a)-[]->(a)` shares one slot.
                    if src == dst && es != ed {
                        continue;
                    }
                    b[*slot] = Some(Elem::Edge(eix));
                    b[*src] = Some(Elem::Node(es));
                    b[*dst] = Some(Elem::Node(ed));
                    let go = self.run(plan, i + 1, b, emit);
                    if !edge_was_bound {
                        b[*slot] = None;
                    }
                    b[*src] = src_was;
                    b[*dst] = dst_was;
                    if !go? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn exists(&mut self, plan: &Plan<'q>, b: &Binding) -> Result<bool, QueryError> {
        let mut local = b.clone();
        let mut found = false;
        self.run(plan, 0, &mut local, &mut |_, _| {
            found = true;
            Ok(false)
        })?;
        Ok(found)
    }

    fn value(&mut self, e: &CExpr<'q>, b: &Binding) -> Result<Option<Value>, QueryError> {
        Ok(match e {
            CExpr::Null => None,
            CExpr::Lit(v) => Some((*v).clone()),
            CExpr::List(items) => {
                let mut out = Vec::new();
                for i in items {
                    out.extend(self.value(i, b)?);
                }
                Some(Value::List(out))
            }
            CExpr::Var(s) => match b[*s] {
                None => None,
                Some(Elem::Node(ix)) => Some(Value::Str(self.graph.node_at(ix).id.to_string())),
                Some(Elem::Edge(ix)) => Some(Value::Str(self.graph.edge_at(ix).id.to_string())),
            },
            CExpr::Prop(s, k) => match b[*s] {
                None => None,
                Some(Elem::Node(ix)) => self.graph.node_at(ix).lookup(k),
                Some(Elem::Edge(ix)) => self.graph.edge_at(ix).lookup(k),
            },
            CExpr::Case { whens, otherwise } => {
                for (c, v) in whens {
                    if self.truthy(c, b)? {
                        return self.value(v, b);
                    }
                }
                match otherwise {
                    Some(o) => self.value(o, b)?,
                    None => None,
                }
            }
            other => Some(Value::Bool(self.truthy(other, b)?)),
        })
    }

    /// Two-valued: a comparison with a missing operand is false.
    fn truthy(&mut self, e: &CExpr<'q>, b: &Binding) -> Result<bool, QueryError> {
        Ok(match e {
            CExpr::And(items) => {
                for i in items {
                    if !self.truthy(i, b)? {
                        return Ok(false);
                    }
                }
                true
            }
            CExpr::Or(items) => {
                for i in items {
                    if self.truthy(i, b)? {
                        return Ok(true);
                    }
                }
                false
            }
            CExpr::Not(a) => !self.truthy(a, b)?,
            CExpr::Exists(plan) => self.exists(plan, b)?,
            CExpr::IsNull(a, negated) => self.value(a, b)?.is_none() != *negated,
            CExpr::Cmp(l, op, r) => match (self.value(l, b)?, self.value(r, b)?) {
                (Some(x), Some(y)) => compare(&x, *op, &y),
                _ => false,
            },
            other => matches!(self.value(other, b)?, Some(Value::Bool(true))),
        })
    }
}

/// Pattern property values are literals.
fn literal(e: &CExpr<'_>) -> Option<Value> {
    match e {
        CExpr::Lit(v) => Some((*v).clone()),
        CExpr::List(items) => Some(Value::List(items.iter().filter_map(literal).collect())),
        _ => None,
    }
}

pub(crate) fn compare(x: &Value, op: CmpOp, y: &Value) -> bool {
    let ordered = |x: &Value, y: &Value| match (x, y) {
        (Value::Num(a), Value::Num(b)) => a.partial_cmp(b),
        (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
        _ => None,
    };
    match op {
        CmpOp::Eq => x.loose_eq(y),
        CmpOp::Ne => !x.loose_eq(y),
        CmpOp::Lt => ordered(x, y) == Some(Ordering::Less),
        CmpOp::Le => matches!(ordered(x, y), Some(Ordering::Less | Ordering::Equal)),
        CmpOp::Gt => ordered(x, y) == Some(Ordering::Greater),
        CmpOp::Ge => matches!(ordered(x, y), Some(Ordering::Greater | Ordering::Equal)),
        CmpOp::Contains => match (x, y) {
            (Value::Str(a), Value::Str(b)) => a.contains(b.as_str()),
            (Value::List(items), v) => items.iter().any(|i| i.loose_eq(v)),
            _ => false,
        },
        CmpOp::StartsWith => matches!((x, y), (Value::Str(a), Value::Str(b)) if a.starts_with(b.as_str())),
        CmpOp::EndsWith => matches!((x, y), (Value::Str(a), Value::Str(b)) if a.ends_with(b.as_str())),
        CmpOp::In => matches!(y, Value::List(items) if items.iter().any(|i| i.loose_eq(x))),
    }
}

fn collect_labels<'q>(q: &'q Query) -> BTreeSet<&'q str> {
    fn path<'q>(p: &'q Path, out: &mut BTreeSet<&'q str>) {
        out.extend(p.start.label.as_deref());
        for (_, n) in &p.steps {
            out.extend(n.label.as_deref());
        }
    }
    fn expr<'q>(e: &'q Expr, out: &mut BTreeSet<&'q str>) {
        match e {
            Expr::List(items) | Expr::And(items) | Expr::Or(items) => items.iter().for_each(|i| expr(i, out)),
            Expr::Cmp(a, _, b) => {
                expr(a, out);
                expr(b, out);
            }
            Expr::IsNull(a, _) | Expr::Not(a) => expr(a, out),
            Expr::Exists(sub) => clauses(&sub.clauses, out),
            Expr::Pattern(p) => path(p, out),
            Expr::Case { whens, otherwise } => {
                for (c, v) in whens {
                    expr(c, out);
                    expr(v, out);
                }
                if let Some(o) = otherwise {
                    expr(o, out);
                }
            }
            _ => {}
        }
    }
    fn clauses<'q>(cs: &'q [Clause], out: &mut BTreeSet<&'q str>) {
        for c in cs {
            match c {
                Clause::Match(ps) => ps.iter().for_each(|p| path(p, out)),
                Clause::Where(e) => expr(e, out),
            }
        }
    }
    let mut out = BTreeSet::new();
    clauses(&q.clauses, &mut out);
    q.ret.items.iter().for_each(|i| expr(&i.expr, &mut out));
    out
}

/// Runs a parsed query. Unknown labels and types match nothing.
pub fn execute_with(q: &Query, graph: &PropertyGraph, opts: ExecOptions) -> Result<ResultTable, QueryError> {
    let n = graph.node_count();
    let mut labels = BTreeMap::new();
    let mut label_sets = BTreeMap::new();
    for l in collect_labels(q) {
        let mut set = vec![false; n];
        for node in graph.nodes() {
            if graph.schema().node_label_matches(node, l) {
                set[node.ix().0 as usize] = true;
            }
        }
        if q.subclass_match {
            let direct: Vec<usize> = (0..n).filter(|&i| set[i]).collect();
            for i in direct {
                let id = graph.node_at(NodeIx(i as u32)).id.clone();
                // A cycle leaves the label without inherited matches.
                if let Ok(anc) = subclass_ancestors(graph, id.as_str()) {
                    for a in anc {
                        set[graph.node_ix(a.as_str()).expect("ancestor exists").0 as usize] = true;
                    }
                }
            }
        }
        labels.insert(l, (0..n).filter(|&i| set[i]).map(|i| NodeIx(i as u32)).collect());
        label_sets.insert(l, set);
    }

    let mut comp = Compiler {
        slots: BTreeMap::new(),
        nslots: 0,
    };
    // Atoms compile before filters, so subqueries correlate with
    // variables bound by any top-level MATCH.
    let mut paths = Vec::new();
    let mut filters = Vec::new();
    for c in &q.clauses {
        match c {
            Clause::Match(ps) => paths.extend(ps.iter()),
            Clause::Where(e) => filters.push(e),
        }
    }
    let plan = comp.plan(paths, filters);

    let aliases: BTreeMap<&str, usize> = q
        .ret
        .items
        .iter()
        .enumerate()
        .filter_map(|(i, it)| it.alias.as_deref().map(|a| (a, i)))
        .collect();
    let items: Vec<CExpr> = q.ret.items.iter().map(|i| comp.expr(&i.expr)).collect();
    let names: Vec<String> = q.ret.items.iter().map(ReturnItem::name).collect();
    // An ORDER BY key is a column (by alias or by text) or an expression.
    enum Key<'q> {
        Column(usize),
        Expr(CExpr<'q>),
    }
    let keys: Vec<(Key, bool)> = q
        .ret
        .order_by
        .iter()
        .map(|k| {
            let key = match &k.expr {
                Expr::Var(v) if aliases.contains_key(v.as_str()) => Key::Column(aliases[v.as_str()]),
                e => match names.iter().position(|n| *n == e.to_string()) {
                    Some(i) => Key::Column(i),
                    None => Key::Expr(comp.expr(e)),
                },
            };
            (key, k.descending)
        })
        .collect();
    if q.ret.distinct && keys.iter().any(|(k, _)| matches!(k, Key::Expr(_))) {
        return Err(QueryError::OrderByNotReturned);
    }

    let mut exec = Exec {
        graph,
        labels,
        label_sets,
        max_bindings: opts.max_bindings,
        produced: 0,
    };
    let mut rows: Vec<(Vec<Option<Value>>, Vec<Option<Value>>)> = Vec::new();
    let mut binding = vec![None; comp.nslots];
    exec.run(&plan, 0, &mut binding, &mut |ex, b| {
        ex.produced += 1;
        if ex.produced > ex.max_bindings {
            return Err(QueryError::BindingLimit(ex.max_bindings));
        }
        let mut row = Vec::with_capacity(items.len());
        for e in &items {
            row.push(ex.value(e, b)?);
        }
        let mut extra = Vec::with_capacity(keys.len());
        for (k, _) in &keys {
            extra.push(match k {
                Key::Column(_) => None,
                Key::Expr(e) => ex.value(e, b)?,
            });
        }
        rows.push((row, extra));
        Ok(true)
    })?;

    if q.ret.distinct {
        let mut seen = HashSet::new();
        rows.retain(|(r, _)| seen.insert(row_key(r)));
    }
    if !keys.is_empty() {
        rows.sort_by(|(ra, ea), (rb, eb)| {
            for (i, (k, desc)) in keys.iter().enumerate() {
                let (a, b) = match k {
                    Key::Column(c) => (&ra[*c], &rb[*c]),
                    Key::Expr(_) => (&ea[i], &eb[i]),
                };
                // Nulls sort last in either direction.
                let o = match (a, b) {
                    (None, None) => Ordering::Equal,
                    (None, Some(_)) => Ordering::Greater,
                    (Some(_), None) => Ordering::Less,
                    (Some(x), Some(y)) => {
                        let o = x.total_cmp(y);
                        if *desc {
                            o.reverse()
                        } else {
                            o
                        }
                    }
                };
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }
    Ok(ResultTable {
        columns: names,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    })
}

pub(crate) fn row_key(r: &[Option<Value>]) -> String {
    format!("{r:?}")
}
