//! Random defeasibility graphs and a brute-force transitive-defeat oracle.
//!
//! The oracle works on adjacency matrices closed with Floyd-Warshall and
//! never calls into the resolver.

use std::collections::BTreeSet;
use std::sync::Arc;

use olgpp::defeasibility::{resolve, DefeasibilityError, DefeatReason};
use olgpp::graph::{NewEdge, NewNode};
use olgpp::{EvalContext, PropertyGraph, TypeSchema};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Exception,
    Override,
    Precedence,
}

impl Kind {
    fn edge_type(self) -> &'static str {
        match self {
            Kind::Exception => "EXCEPTS",
            Kind::Override => "OVERRIDES",
            Kind::Precedence => "precedence",
        }
    }
}

const MODALITIES: [&str; 4] = ["obligation", "prohibition", "permission", "entitlement"];

#[derive(Debug, Clone)]
pub struct Spec {
    pub applicable: Vec<bool>,
    /// Applicable triggers without any condition edge.
    pub unconditional: Vec<bool>,
    pub modality: Vec<usize>,
    pub edges: Vec<(Kind, usize, usize, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Ruling {
        winners: BTreeSet<usize>,
        /// (loser, winner, reason)
        defeats: BTreeSet<(usize, usize, &'static str)>,
        conflicts: BTreeSet<(usize, usize)>,
    },
    Cycle(&'static str),
}

pub fn random_spec(rng: &mut impl Rng) -> Spec {
    let n = rng.gen_range(1..=6);
    let applicable: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    let unconditional = applicable.iter().map(|&a| a && rng.gen_bool(0.5)).collect();
    let modality = (0..n).map(|_| rng.gen_range(0..MODALITIES.len())).collect();
    let mut edges = Vec::new();
    if n > 1 {
        for _ in 0..rng.gen_range(0..=6) {
            let kind = *[Kind::Exception, Kind::Override, Kind::Precedence].choose(rng).unwrap();
            let src = rng.gen_range(0..n);
            let mut dst = rng.gen_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            let level = (kind == Kind::Precedence && rng.gen_bool(0.6)).then(|| rng.gen_range(0..3) as f64);
            edges.push((kind, src, dst, level));
        }
    }
    Spec {
        applicable,
        unconditional,
        modality,
        edges,
    }
}

/// A spec with a cycle of exception or override edges injected among at
/// least two applicable triggers.
pub fn cyclic_spec(rng: &mut impl Rng) -> Spec {
    let mut s = random_spec(rng);
    while s.applicable.len() < 2 {
        s = random_spec(rng);
    }
    let n = s.applicable.len();
    let mut ring: Vec<usize> = (0..n).collect();
    ring.shuffle(rng);
    ring.truncate(rng.gen_range(2..=n));
    for &v in &ring {
        s.applicable[v] = true;
    }
    let kind = if rng.gen_bool(0.5) { Kind::Exception } else { Kind::Override };
    for i in 0..ring.len() {
        s.edges.push((kind, ring[i], ring[(i + 1) % ring.len()], None));
    }
    s
}

pub fn trigger_id(i: usize) -> String {
    format!("t{i}")
}

pub fn build(spec: &Spec) -> (PropertyGraph, EvalContext) {
    let mut g = PropertyGraph::new(Arc::new(TypeSchema::builtin()));
    let mut ctx = EvalContext::default();
    for i in 0..spec.applicable.len() {
        g.add_node(
            NewNode::new("obligation_trigger")
                .id(trigger_id(i))
                .prop("modality", MODALITIES[spec.modality[i]]),
        )
        .unwrap();
        if spec.unconditional[i] {
            continue;
        }
        let fact = format!("f{i}");
        g.add_node(
            NewNode::new("condition")
                .id(format!("c{i}"))
                .prop("evaluator", "fact")
                .prop("fact", fact.as_str()),
        )
        .unwrap();
        g.add_edge(NewEdge::new("if_true", trigger_id(i), format!("c{i}"))).unwrap();
        ctx = ctx.with_fact(fact, spec.applicable[i]);
    }
    for (k, &(kind, src, dst, level)) in spec.edges.iter().enumerate() {
        let mut e = NewEdge::new(kind.edge_type(), trigger_id(src), trigger_id(dst)).id(format!("e{k}"));
        if let Some(l) = level {
            e = e.prop("level", l);
        }
        g.add_edge(e).unwrap();
    }
    (g, ctx)
}

const UNREACHABLE: usize = usize::MAX / 4;

/// Shortest path lengths over `kind` edges whose endpoints are all in
/// `allowed`; `d[i][i]` is the shortest cycle through `i`.
fn distances(spec: &Spec, kind: Kind, allowed: &[bool]) -> Vec<Vec<usize>> {
    let n = spec.applicable.len();
    let mut d = vec![vec![UNREACHABLE; n]; n];
    for &(k, s, t, _) in &spec.edges {
        if k == kind && allowed[s] && allowed[t] {
            d[s][t] = 1;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    d
}

fn opposes(a: usize, b: usize) -> bool {
    (MODALITIES[a] == "prohibition") != (MODALITIES[b] == "prohibition")
}

pub fn oracle(spec: &Spec) -> Expected {
    let n = spec.applicable.len();
    let app = &spec.applicable;
    let everything = vec![true; n];
    let exc = distances(spec, Kind::Exception, app);
    let ovr = distances(spec, Kind::Override, &everything);
    if (0..n).any(|v| app[v] && exc[v][v] < UNREACHABLE) {
        return Expected::Cycle("exception");
    }
    if (0..n).any(|v| app[v] && ovr[v][v] < UNREACHABLE) {
        return Expected::Cycle("override");
    }
    let a: Vec<usize> = (0..n).filter(|&v| app[v]).collect();
    let mut defeats = BTreeSet::new();
    let mut excepted = BTreeSet::new();
    for &x in &a {
        for &y in &a {
            if x != y && exc[y][x] < UNREACHABLE {
                excepted.insert(x);
                defeats.insert((x, y, "excepted"));
            }
        }
    }
    let s1: Vec<usize> = a.iter().copied().filter(|v| !excepted.contains(v)).collect();
    let mut overridden = BTreeSet::new();
    for &x in &s1 {
        for &y in &s1 {
            if x != y && ovr[y][x] < UNREACHABLE {
                overridden.insert(x);
                defeats.insert((x, y, "overridden"));
            }
        }
    }
    let s2: Vec<usize> = s1.iter().copied().filter(|v| !overridden.contains(v)).collect();
    let level = |from: usize, to: usize| -> Option<f64> {
        spec.edges
            .iter()
            .filter(|&&(k, s, t, _)| k == Kind::Precedence && s == from && t == to)
            .map(|&(_, _, _, l)| l.unwrap_or(1.0))
            .reduce(f64::max)
    };
    let mut outranked = BTreeSet::new();
    for (i, &x) in s2.iter().enumerate() {
        for &y in &s2[i + 1..] {
            let (lx, ly) = (level(x, y), level(y, x));
            if lx.is_none() && ly.is_none() {
                continue;
            }
            let (lx, ly) = (lx.unwrap_or(0.0), ly.unwrap_or(0.0));
            if lx > ly {
                outranked.insert(y);
                defeats.insert((y, x, "precedence"));
            } else if ly > lx {
                outranked.insert(x);
                defeats.insert((x, y, "precedence"));
            }
        }
    }
    let winners: BTreeSet<usize> = s2.iter().copied().filter(|v| !outranked.contains(v)).collect();
    let mut conflicts = BTreeSet::new();
    for &x in &winners {
        for &y in winners.range(x + 1..) {
            if opposes(spec.modality[x], spec.modality[y]) {
                conflicts.insert((x, y));
            }
        }
    }
    Expected::Ruling {
        winners,
        defeats,
        conflicts,
    }
}

fn index_of(id: &str) -> usize {
    id.strip_prefix('t').and_then(|s| s.parse().ok()).expect("trigger ids are t<N>")
}

/// Runs the resolver on `spec` and compares with the oracle, including
/// that every exception or override defeat cites a shortest witness path.
pub fn check(spec: &Spec) -> Result<Expected, String> {
    let (g, ctx) = build(spec);
    let want = oracle(spec);
    let got = resolve(&g, &ctx, None);
    match (&want, got) {
        (Expected::Cycle(kind), Err(DefeasibilityError::DefeasibilityCycle { kind: k, .. })) if *kind == k => {
            Ok(want)
        }
        (Expected::Cycle(kind), other) => Err(format!("{spec:?}: expected {kind} cycle, got {other:?}")),
        (Expected::Ruling { .. }, Err(e)) => Err(format!("{spec:?}: unexpected error {e}")),
        (
            Expected::Ruling {
                winners,
                defeats,
                conflicts,
            },
            Ok(r),
        ) => {
            let got_winners: BTreeSet<usize> = r.winners.iter().map(|w| index_of(w.as_str())).collect();
            let got_defeats: BTreeSet<(usize, usize, &str)> = r
                .defeated
                .iter()
                .map(|d| (index_of(d.loser.as_str()), index_of(d.winner.as_str()), d.reason.as_str()))
                .collect();
            let got_conflicts: BTreeSet<(usize, usize)> = r
                .conflicts
                .iter()
                .map(|c| (index_of(c.a.as_str()), index_of(c.b.as_str())))
                .collect();
            if &got_winners != winners || &got_defeats != defeats || &got_conflicts != conflicts {
                return Err(format!(
                    "{spec:?}:\n winners {got_winners:?} vs {winners:?}\n defeats {got_defeats:?} vs {defeats:?}\n conflicts {got_conflicts:?} vs {conflicts:?}"
                ));
            }
            let everything = vec![true; spec.applicable.len()];
            for d in &r.defeated {
                let (kind, allowed) = match d.reason {
                    DefeatReason::Excepted => (Kind::Exception, &spec.applicable),
                    DefeatReason::Overridden => (Kind::Override, &everything),
                    DefeatReason::Precedence => continue,
                };
                let (winner, loser) = (index_of(d.winner.as_str()), index_of(d.loser.as_str()));
                let mut at = winner;
                for e in &d.edges {
                    let k: usize = e.as_str()[1..].parse().map_err(|_| format!("bad edge id {e}"))?;
                    let (ek, s, t, _) = spec.edges[k];
                    if ek != kind || s != at || !allowed[t] {
                        return Err(format!("{spec:?}: {d:?} cites a broken path"));
                    }
                    at = t;
                }
                if at != loser || d.edges.len() != distances(spec, kind, allowed)[winner][loser] {
                    return Err(format!("{spec:?}: {d:?} path is not a shortest witness"));
                }
            }
            Ok(want)
        }
    }
}
