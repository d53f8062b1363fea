//! Random conjunctive queries over random graphs, with an exhaustive
//! binding-enumeration oracle that shares no code with the executor.

use std::sync::Arc;

use olgpp::graph::{NewEdge, NewNode};
use olgpp::query::{run_query, ResultTable};
use olgpp::{PropertyGraph, TypeSchema, Value};
use rand::seq::SliceRandom;
use rand::Rng;

const LABELS: [&str; 3] = ["A", "B", "C"];
const TYPES: [&str; 2] = ["R", "S"];
const NODE_VARS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
pub struct GNode {
    pub label: usize,
    pub v: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct GEdge {
    pub src: usize,
    pub dst: usize,
    pub ty: usize,
    pub w: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct GGraph {
    pub nodes: Vec<GNode>,
    pub edges: Vec<GEdge>,
}

pub fn random_graph(rng: &mut impl Rng) -> GGraph {
    let n = rng.gen_range(1..=30);
    let nodes = (0..n)
        .map(|_| GNode {
            label: rng.gen_range(0..LABELS.len()),
            v: rng.gen_bool(0.8).then(|| rng.gen_range(0..4)),
        })
        .collect();
    let m = rng.gen_range(n / 2..=(n * 3 / 2).min(40));
    let edges = (0..m)
        .map(|_| GEdge {
            src: rng.gen_range(0..n),
            dst: rng.gen_range(0..n),
            ty: rng.gen_range(0..TYPES.len()),
            w: rng.gen_bool(0.7).then(|| rng.gen_range(0..3)),
        })
        .collect();
    GGraph { nodes, edges }
}

pub fn build_graph(g: &GGraph) -> PropertyGraph {
    let mut pg = PropertyGraph::new(Arc::new(TypeSchema::open()));
    for (i, n) in g.nodes.iter().enumerate() {
        let mut spec = NewNode::new(LABELS[n.label]).id(format!("n{i}"));
        if let Some(v) = n.v {
            spec = spec.prop("v", v as f64);
        }
        pg.add_node(spec).unwrap();
    }
    for (k, e) in g.edges.iter().enumerate() {
        let mut spec = NewEdge::new(TYPES[e.ty], format!("n{}", e.src), format!("n{}", e.dst)).id(format!("e{k}"));
        if let Some(w) = e.w {
            spec = spec.prop("w", w as f64);
        }
        pg.add_edge(spec).unwrap();
    }
    pg
}

#[derive(Debug, Clone)]
pub struct NPat {
    pub var: Option<usize>,
    pub label: Option<usize>,
    pub v: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct EPat {
    pub var: Option<usize>,
    pub ty: Option<usize>,
    pub w: Option<i64>,
    pub out: bool,
}

#[derive(Debug, Clone)]
pub struct PathPat {
    pub start: NPat,
    pub steps: Vec<(EPat, NPat)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Key {
    Id,
    V,
    W,
}

#[derive(Debug, Clone)]
pub enum Operand {
    Node(usize, Key),
    Edge(usize, Key),
    Lit(i64),
}

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

const OPS: [Op; 6] = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge];

impl Op {
    fn text(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cond {
    Cmp(Operand, Op, Operand),
    IsNull(Operand, bool),
    Not(Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    /// `[NOT] EXISTS { MATCH (from)-[:ty]->(s:label) [WHERE s.v op from.v] }`
    Exists {
        negated: bool,
        from: usize,
        edge: EPat,
        to: NPat,
        cmp: Option<Op>,
    },
}

#[derive(Debug, Clone)]
pub struct GenQuery {
    pub paths: Vec<PathPat>,
    /// Index of the MATCH clause each path lands in (non-decreasing).
    pub clause_of: Vec<usize>,
    pub conds: Vec<Cond>,
    /// MATCH clause each WHERE follows.
    pub where_after: Vec<usize>,
    pub distinct: bool,
    pub ret: Vec<Operand>,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    node_vars: Vec<usize>,
    edge_vars: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn npat(&mut self, force_var: bool) -> NPat {
        let var = if force_var || self.rng.gen_bool(0.7) {
            let v = self.rng.gen_range(0..NODE_VARS.len());
            if !self.node_vars.contains(&v) {
                self.node_vars.push(v);
            }
            Some(v)
        } else {
            None
        };
        NPat {
            var,
            label: self.rng.gen_bool(0.35).then(|| self.rng.gen_range(0..LABELS.len())),
            v: self.rng.gen_bool(0.1).then(|| self.rng.gen_range(0..4)),
        }
    }

    fn epat(&mut self, named: bool) -> EPat {
        let var = (named && self.rng.gen_bool(0.5)).then(|| {
            self.edge_vars += 1;
            self.edge_vars - 1
        });
        EPat {
            var,
            ty: self.rng.gen_bool(0.6).then(|| self.rng.gen_range(0..TYPES.len())),
            w: self.rng.gen_bool(0.1).then(|| self.rng.gen_range(0..3)),
            out: self.rng.gen_bool(0.6),
        }
    }

    fn operand(&mut self) -> Operand {
        let r = self.rng.gen_range(0..10);
        if r < 2 || (self.edge_vars == 0 && r < 3) {
            Operand::Lit(self.rng.gen_range(0..4))
        } else if r < 8 || self.edge_vars == 0 {
            let v = *self.node_vars.choose(self.rng).unwrap();
            Operand::Node(v, if self.rng.gen_bool(0.8) { Key::V } else { Key::Id })
        } else {
            let e = self.rng.gen_range(0..self.edge_vars);
            Operand::Edge(e, Key::W)
        }
    }

    /// Comparisons pair values of the same kind.
    fn cmp(&mut self) -> Cond {
        let op = *OPS.choose(self.rng).unwrap();
        let a = self.operand();
        let b = match &a {
            Operand::Node(_, Key::Id) => {
                let v = *self.node_vars.choose(self.rng).unwrap();
                Operand::Node(v, Key::Id)
            }
            _ => loop {
                let b = self.operand();
                if !matches!(b, Operand::Node(_, Key::Id)) {
                    break b;
                }
            },
        };
        Cond::Cmp(a, op, b)
    }

    fn cond(&mut self, depth: usize) -> Cond {
        match self.rng.gen_range(0..10) {
            0..=4 => self.cmp(),
            5 => {
                let o = loop {
                    let o = self.operand();
                    if !matches!(o, Operand::Lit(_)) {
                        break o;
                    }
                };
                Cond::IsNull(o, self.rng.gen_bool(0.5))
            }
            6 if depth > 0 => Cond::Not(Box::new(self.cond(depth - 1))),
            7 if depth > 0 => Cond::Or(Box::new(self.cond(depth - 1)), Box::new(self.cond(depth - 1))),
            _ => {
                let from = *self.node_vars.choose(self.rng).unwrap();
                let edge = self.epat(false);
                let to = NPat {
                    var: None,
                    label: self.rng.gen_bool(0.5).then(|| self.rng.gen_range(0..LABELS.len())),
                    v: None,
                };
                Cond::Exists {
                    negated: self.rng.gen_bool(0.7),
                    from,
                    edge,
                    to,
                    cmp: self.rng.gen_bool(0.6).then(|| *OPS.choose(self.rng).unwrap()),
                }
            }
        }
    }
}

pub fn random_query(rng: &mut impl Rng) -> GenQuery {
    let mut g = Gen {
        rng,
        node_vars: Vec::new(),
        edge_vars: 0,
    };
    let npaths = g.rng.gen_range(1..=3);
    let mut paths = Vec::new();
    let mut edge_positions = 0;
    for i in 0..npaths {
        let start = g.npat(i == 0);
        let max_steps = 3 - edge_positions.min(3);
        let nsteps = g.rng.gen_range(0..=max_steps.min(2));
        edge_positions += nsteps;
        let steps = (0..nsteps).map(|_| (g.epat(true), g.npat(false))).collect();
        paths.push(PathPat { start, steps });
    }
    let mut clause_of = Vec::new();
    let mut clause = 0;
    for i in 0..npaths {
        if i > 0 && g.rng.gen_bool(0.5) {
            clause += 1;
        }
        clause_of.push(clause);
    }
    let nconds = g.rng.gen_range(0..=2);
    let conds: Vec<Cond> = (0..nconds).map(|_| g.cond(1)).collect();
    let where_after = conds.iter().map(|_| g.rng.gen_range(0..=clause)).collect();
    let nret = g.rng.gen_range(1..=3);
    let ret = (0..nret)
        .map(|_| {
            if g.edge_vars > 0 && g.rng.gen_bool(0.25) {
                let e = g.rng.gen_range(0..g.edge_vars);
                Operand::Edge(e, if g.rng.gen_bool(0.5) { Key::Id } else { Key::W })
            } else {
                let v = *g.node_vars.choose(g.rng).unwrap();
                Operand::Node(v, if g.rng.gen_bool(0.6) { Key::Id } else { Key::V })
            }
        })
        .collect();
    let distinct = g.rng.gen_bool(0.3);
    GenQuery {
        paths,
        clause_of,
        conds,
        where_after,
        distinct,
        ret,
    }
}

fn render_npat(n: &NPat, inner_name: Option<&str>) -> String {
    let mut s = String::from("(");
    if let Some(name) = inner_name {
        s.push_str(name);
    } else if let Some(v) = n.var {
        s.push_str(NODE_VARS[v]);
    }
    if let Some(l) = n.label {
        s.push(':');
        s.push_str(LABELS[l]);
    }
    if let Some(v) = n.v {
        s.push_str(&format!(" {{v: {v}}}"));
    }
    s.push(')');
    s
}

fn render_epat(e: &EPat) -> String {
    let mut body = String::new();
    if let Some(v) = e.var {
        body.push_str(&format!("e{v}"));
    }
    if let Some(t) = e.ty {
        body.push(':');
        body.push_str(TYPES[t]);
    }
    if let Some(w) = e.w {
        body.push_str(&format!(" {{w: {w}}}"));
    }
    if e.out {
        format!("-[{body}]->")
    } else {
        format!("<-[{body}]-")
    }
}

fn render_operand(o: &Operand) -> String {
    match o {
        Operand::Lit(i) => i.to_string(),
        Operand::Node(v, k) => format!("{}.{}", NODE_VARS[*v], if *k == Key::Id { "id" } else { "v" }),
        Operand::Edge(e, k) => format!("e{e}.{}", if *k == Key::Id { "id" } else { "w" }),
    }
}

fn render_cond(c: &Cond, sub: &mut usize) -> String {
    match c {
        Cond::Cmp(a, op, b) => format!("{} {} {}", render_operand(a), op.text(), render_operand(b)),
        Cond::IsNull(o, neg) => format!("{} IS {}NULL", render_operand(o), if *neg { "NOT " } else { "" }),
        Cond::Not(c) => format!("NOT ({})", render_cond(c, sub)),
        Cond::Or(a, b) => format!("({} OR {})", render_cond(a, sub), render_cond(b, sub)),
        Cond::Exists {
            negated,
            from,
            edge,
            to,
            cmp,
        } => {
            let name = format!("s{sub}");
            *sub += 1;
            let from_name = NODE_VARS[*from];
            let mut s = format!(
                "{}EXISTS {{ MATCH ({from_name}){}{}",
                if *negated { "NOT " } else { "" },
                render_epat(edge),
                render_npat(to, Some(&name))
            );
            if let Some(op) = cmp {
                s.push_str(&format!(" WHERE {name}.v {} {from_name}.v", op.text()));
            }
            s.push_str(" }");
            s
        }
    }
}

pub fn render(q: &GenQuery) -> String {
    let mut out = String::new();
    let nclauses = q.clause_of.last().map_or(0, |c| c + 1);
    let mut sub = 0;
    for c in 0..nclauses {
        let paths: Vec<String> = q
            .paths
            .iter()
            .zip(&q.clause_of)
            .filter(|(_, &k)| k == c)
            .map(|(p, _)| {
                let mut s = render_npat(&p.start, None);
                for (e, n) in &p.steps {
                    s.push_str(&render_epat(e));
                    s.push_str(&render_npat(n, None));
                }
                s
            })
            .collect();
        out.push_str(&format!("MATCH {}\n", paths.join(", ")));
        let conds: Vec<String> = q
            .conds
            .iter()
            .zip(&q.where_after)
            .filter(|(_, &k)| k == c)
            .map(|(cond, _)| render_cond(cond, &mut sub))
            .collect();
        if !conds.is_empty() {
            out.push_str(&format!("WHERE {}\n", conds.join(" AND ")));
        }
    }
    let items: Vec<String> = q
        .ret
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{} AS r{i}", render_operand(o)))
        .collect();
    out.push_str(&format!(
        "RETURN {}{}",
        if q.distinct { "DISTINCT " } else { "" },
        items.join(", ")
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum OVal {
    I(i64),
    S(String),
}

impl OVal {
    fn text(&self) -> String {
        match self {
            OVal::I(i) => i.to_string(),
            OVal::S(s) => s.clone(),
        }
    }
}

fn cmp(a: Option<OVal>, op: Op, b: Option<OVal>) -> bool {
    let (Some(a), Some(b)) = (a, b) else {
        return false;
    };
    let same_kind = matches!((&a, &b), (OVal::I(_), OVal::I(_)) | (OVal::S(_), OVal::S(_)));
    match op {
        Op::Eq => a == b,
        Op::Ne => a != b,
        _ if !same_kind => false,
        Op::Lt => a < b,
        Op::Le => a <= b,
        Op::Gt => a > b,
        Op::Ge => a >= b,
    }
}

struct Binding {
    nodes: [Option<usize>; 4],
    edges: Vec<Option<usize>>,
}

struct Oracle<'a> {
    g: &'a GGraph,
    q: &'a GenQuery,
}

impl Oracle<'_> {
    fn node_ok(&self, p: &NPat, n: usize) -> bool {
        let node = &self.g.nodes[n];
        p.label.is_none_or(|l| node.label == l) && p.v.is_none_or(|v| node.v == Some(v))
    }

    fn edge_ok(&self, p: &EPat, k: usize) -> bool {
        let e = &self.g.edges[k];
        p.ty.is_none_or(|t| e.ty == t) && p.w.is_none_or(|w| e.w == Some(w))
    }

    fn value(&self, o: &Operand, b: &Binding) -> Option<OVal> {
        match o {
            Operand::Lit(i) => Some(OVal::I(*i)),
            Operand::Node(v, k) => {
                let n = b.nodes[*v].expect("bound node variable");
                match k {
                    Key::Id => Some(OVal::S(format!("n{n}"))),
                    Key::V => self.g.nodes[n].v.map(OVal::I),
                    Key::W => None,
                }
            }
            Operand::Edge(e, k) => {
                let x = b.edges[*e].expect("bound edge variable");
                match k {
                    Key::Id => Some(OVal::S(format!("e{x}"))),
                    Key::W => self.g.edges[x].w.map(OVal::I),
                    Key::V => None,
                }
            }
        }
    }

    fn holds(&self, c: &Cond, b: &Binding) -> bool {
        match c {
            Cond::Cmp(x, op, y) => cmp(self.value(x, b), *op, self.value(y, b)),
            Cond::IsNull(o, neg) => self.value(o, b).is_none() != *neg,
            Cond::Not(c) => !self.holds(c, b),
            Cond::Or(x, y) => self.holds(x, b) || self.holds(y, b),
            Cond::Exists {
                negated,
                from,
                edge,
                to,
                cmp: op,
            } => {
                let f = b.nodes[*from].expect("bound node variable");
                let found = (0..self.g.edges.len()).any(|k| {
                    let e = &self.g.edges[k];
                    let other = if edge.out {
                        (e.src == f).then_some(e.dst)
                    } else {
                        (e.dst == f).then_some(e.src)
                    };
                    let Some(o) = other else { return false };
                    self.edge_ok(edge, k)
                        && self.node_ok(to, o)
                        && op.is_none_or(|op| {
                            cmp(self.g.nodes[o].v.map(OVal::I), op, self.g.nodes[f].v.map(OVal::I))
                        })
                });
                found != *negated
            }
        }
    }

    /// Every assignment of edges to edge positions and nodes to isolated
    /// node positions, filtered by all constraints.
    fn rows(&self) -> Vec<Vec<Option<String>>> {
        // Node positions: (path, index along the path).
        let mut npos: Vec<&NPat> = Vec::new();
        let mut epos: Vec<(&EPat, usize, usize)> = Vec::new();
        let mut isolated = Vec::new();
        for p in &self.q.paths {
            let first = npos.len();
            npos.push(&p.start);
            if p.steps.is_empty() {
                isolated.push(first);
            }
            for (e, n) in &p.steps {
                let left = npos.len() - 1;
                npos.push(n);
                epos.push((e, left, npos.len() - 1));
            }
        }
        let nedge_vars = epos.iter().filter_map(|(e, ..)| e.var).map(|v| v + 1).max().unwrap_or(0);
        let mut out = Vec::new();
        let mut choice_e = vec![0usize; epos.len()];
        let mut choice_n = vec![0usize; isolated.len()];
        let ne = self.g.edges.len();
        let nn = self.g.nodes.len();
        let total_e = ne.pow(epos.len() as u32);
        let total_n = nn.pow(isolated.len() as u32);
        for ie in 0..total_e {
            let mut r = ie;
            for c in choice_e.iter_mut() {
                *c = r % ne;
                r /= ne;
            }
            if epos.iter().zip(&choice_e).any(|((p, ..), &k)| !self.edge_ok(p, k)) {
                continue;
            }
            for inn in 0..total_n {
                let mut r = inn;
                for c in choice_n.iter_mut() {
                    *c = r % nn;
                    r /= nn;
                }
                if let Some(row) = self.complete(&npos, &epos, &isolated, &choice_e, &choice_n, nedge_vars) {
                    out.push(row);
                }
            }
        }
        if self.q.distinct {
            let mut seen = std::collections::BTreeSet::new();
            out.retain(|r| seen.insert(r.clone()));
        }
        out
    }

    fn complete(
        &self,
        npos: &[&NPat],
        epos: &[(&EPat, usize, usize)],
        isolated: &[usize],
        choice_e: &[usize],
        choice_n: &[usize],
        nedge_vars: usize,
    ) -> Option<Vec<Option<String>>> {
        let mut at: Vec<Option<usize>> = vec![None; npos.len()];
        let set = |pos: usize, n: usize, at: &mut Vec<Option<usize>>| match at[pos] {
            Some(m) => m == n,
            None => {
                at[pos] = Some(n);
                true
            }
        };
        for ((p, left, right), &k) in epos.iter().zip(choice_e) {
            let e = &self.g.edges[k];
            let (s, d) = if p.out { (*left, *right) } else { (*right, *left) };
            if !set(s, e.src, &mut at) || !set(d, e.dst, &mut at) {
                return None;
            }
        }
        for (&pos, &n) in isolated.iter().zip(choice_n) {
            if !set(pos, n, &mut at) {
                return None;
            }
        }
        let mut b = Binding {
            nodes: [None; 4],
            edges: vec![None; nedge_vars],
        };
        for (p, n) in npos.iter().zip(&at) {
            let n = n.expect("every node position is assigned");
            if !self.node_ok(p, n) {
                return None;
            }
            if let Some(v) = p.var {
                match b.nodes[v] {
                    Some(m) if m != n => return None,
                    _ => b.nodes[v] = Some(n),
                }
            }
        }
        for ((p, ..), &k) in epos.iter().zip(choice_e) {
            if let Some(v) = p.var {
                b.edges[v] = Some(k);
            }
        }
        if !self.q.conds.iter().all(|c| self.holds(c, &b)) {
            return None;
        }
        Some(self.q.ret.iter().map(|o| self.value(o, &b).map(|v| v.text())).collect())
    }
}

pub fn oracle_rows(g: &GGraph, q: &GenQuery) -> Vec<Vec<Option<String>>> {
    Oracle { g, q }.rows()
}

pub fn table_rows(t: &ResultTable) -> Vec<Vec<Option<String>>> {
    t.rows
        .iter()
        .map(|r| r.iter().map(|v| v.as_ref().map(Value::render)).collect())
        .collect()
}

/// Compares executor and oracle row multisets for one random case.
pub fn check(g: &GGraph, q: &GenQuery) -> Result<usize, String> {
    let text = render(q);
    let pg = build_graph(g);
    let table = run_query(&text, &pg).map_err(|e| format!("{text}\n=> {e}"))?;
    let mut got = table_rows(&table);
    let mut want = oracle_rows(g, q);
    got.sort();
    want.sort();
    if got != want {
        return Err(format!(
            "{text}\n{} rows from executor, {} from oracle\nexecutor: {:?}\noracle:   {:?}",
            got.len(),
            want.len(),
            &got[..got.len().min(8)],
            &want[..want.len().min(8)]
        ));
    }
    Ok(want.len())
}
