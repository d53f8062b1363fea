//! Planar geometry for locations and jurisdictions.
//!
//! Coordinates are meters in a local frame. Containment is closed: points
//! within [`BOUNDARY_EPS`] of an edge count as inside.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, NodeIx, NodeRecord, PropertyGraph};
use crate::value::Value;

pub const BOUNDARY_EPS: f64 = 1e-9;

/// Mean earth radius used by the equirectangular projection.
const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("degenerate region{}: {reason}", name.as_ref().map(|n| format!(" `{n}`")).unwrap_or_default())]
    DegenerateRegion { name: Option<String>, reason: String },
    #[error("invalid spatial predicate: {0}")]
    InvalidPredicate(String),
    #[error("`within` containment cycle through [{}]", .0.join(", "))]
    ContainmentCycle(Vec<String>),
    #[error("no node `{0}`")]
    MissingNode(String),
    #[error("`{0}` is not a location")]
    NotALocation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GeoPoint { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Projects WGS84 degrees onto a planar frame centred on `origin`
/// (`(lat, long)` in degrees). Returns easting/northing in meters.
pub fn project(origin: (f64, f64), lat: f64, long: f64) -> GeoPoint {
    let (lat0, long0) = origin;
    let x = (long - long0).to_radians() * lat0.to_radians().cos() * EARTH_RADIUS_M;
    let y = (lat - lat0).to_radians() * EARTH_RADIUS_M;
    GeoPoint::new(x, y)
}

fn cross(o: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Distance from `p` to the closed segment `a`-`b`.
fn segment_distance(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&GeoPoint::new(a.x + t * dx, a.y + t * dy))
}

fn on_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: &GeoPoint, b: &GeoPoint, c: &GeoPoint, d: &GeoPoint) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// A simple polygon with nonzero area. The ring is closed implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    name: Option<String>,
    vertices: Vec<GeoPoint>,
}

impl Region {
    pub fn new(name: Option<String>, vertices: Vec<GeoPoint>) -> Result<Self, SpatialError> {
        let bad = |reason: &str| SpatialError::DegenerateRegion {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if vertices.len() < 3 {
            return Err(bad(&format!("{} vertices, need at least 3", vertices.len())));
        }
        if !vertices.iter().all(GeoPoint::is_finite) {
            return Err(bad("non-finite coordinate"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(bad("repeated consecutive vertex"));
            }
        }
        if shoelace(&vertices).abs() <= f64::EPSILON {
            return Err(bad("zero area"));
        }
        for i in 0..n {
            for j in i + 1..n {
                // Adjacent edges share a vertex by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
                let (c, d) = (&vertices[j], &vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(bad("self-intersecting boundary"));
                }
            }
        }
        Ok(Region { name, vertices })
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rect(name: Option<String>, a: GeoPoint, b: GeoPoint) -> Result<Self, SpatialError> {
        let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
        let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
        Region::new(
            name,
            vec![
                GeoPoint::new(x0, y0),
                GeoPoint::new(x1, y0),
                GeoPoint::new(x1, y1),
                GeoPoint::new(x0, y1),
            ],
        )
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).abs()
    }

    fn edges(&self) -> impl Iterator<Item = (&GeoPoint, &GeoPoint)> {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// Distance from `p` to the boundary ring.
    pub fn boundary_distance(&self, p: &GeoPoint) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed containment: interior or within [`BOUNDARY_EPS`] of the ring.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        if self.boundary_distance(p) <= BOUNDARY_EPS {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Zero inside the region, otherwise the distance to its boundary.
    pub fn distance_to(&self, p: &GeoPoint) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }
}

fn shoelace(v: &[GeoPoint]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (&v[i], &v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

/// Closed containment of `p` in `region`.
pub fn contains(region: &Region, p: &GeoPoint) -> bool {
    region.contains(p)
}

/// What a spatial predicate is measured against.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialTarget {
    Point(GeoPoint),
    Region(Region),
}

impl SpatialTarget {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        match self {
            SpatialTarget::Point(p) => (p.x, p.y, p.x, p.y),
            SpatialTarget::Region(r) => r.bounds(),
        }
    }

    fn distance_to(&self, p: &GeoPoint) -> f64 {
        match self {
            SpatialTarget::Point(t) => t.distance(p),
            SpatialTarget::Region(r) => r.distance_to(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialKind {
    Within,
    Outside,
    NorthOf,
    SouthOf,
    EastOf,
    WestOf,
    WithinDistance,
}

impl SpatialKind {
    /// Accepts snake_case and camelCase spellings (`north_of`, `northOf`).
    pub fn parse(s: &str) -> Option<SpatialKind> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '_' && *c != ' ')
            .flat_map(char::to_lowercase)
            .collect();
        Some(match norm.as_str() {
            "within" | "inside" => SpatialKind::Within,
            "outside" => SpatialKind::Outside,
            "northof" => SpatialKind::NorthOf,
            "southof" => SpatialKind::SouthOf,
            "eastof" => SpatialKind::EastOf,
            "westof" => SpatialKind::WestOf,
            "withindistance" | "proximityto" => SpatialKind::WithinDistance,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpatialKind::Within => "within",
            SpatialKind::Outside => "outside",
            SpatialKind::NorthOf => "north_of",
            SpatialKind::SouthOf => "south_of",
            SpatialKind::EastOf => "east_of",
            SpatialKind::WestOf => "west_of",
            SpatialKind::WithinDistance => "within_distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialPredicate {
    kind: SpatialKind,
    target: SpatialTarget,
    distance: Option<f64>,
}

impl SpatialPredicate {
    /// `distance` must be present, finite and positive exactly when
    /// `kind` is `WithinDistance`.
    pub fn new(
        kind: SpatialKind,
        target: SpatialTarget,
        distance: Option<f64>,
    ) -> Result<Self, SpatialError> {
        match (kind, distance) {
            (SpatialKind::WithinDistance, Some(d)) if d.is_finite() && d > 0.0 => {}
            (SpatialKind::WithinDistance, Some(d)) => {
                return Err(SpatialError::InvalidPredicate(format!(
                    "distance must be positive, got {d}"
                )))
            }
            (SpatialKind::WithinDistance, None) => {
                return Err(SpatialError::InvalidPredicate(
                    "within_distance needs a distance".into(),
                ))
            }
            (k, Some(_)) => {
                return Err(SpatialError::InvalidPredicate(format!(
                    "{} takes no distance",
                    k.as_str()
                )))
            }
            (_, None) => {}
        }
        Ok(SpatialPredicate {
            kind,
            target,
            distance,
        })
    }

    pub fn kind(&self) -> SpatialKind {
        self.kind
    }

    pub fn target(&self) -> &SpatialTarget {
        &self.target
    }

    pub fn distance(&self) -> Option<f64> {
        self.distance
    }
}

pub fn eval_spatial(pred: &SpatialPredicate, p: &GeoPoint) -> bool {
    let (min_x, min_y, max_x, max_y) = pred.target.bounds();
    match pred.kind {
        SpatialKind::Within => pred.target.distance_to(p) <= BOUNDARY_EPS,
        SpatialKind::Outside => pred.target.distance_to(p) > BOUNDARY_EPS,
        SpatialKind::NorthOf => p.y > max_y,
        SpatialKind::SouthOf => p.y < min_y,
        SpatialKind::EastOf => p.x > max_x,
        SpatialKind::WestOf => p.x < min_x,
        SpatialKind::WithinDistance => {
            pred.target.distance_to(p) <= pred.distance.expect("checked in new")
        }
    }
}

/// The node's `boundary` polygon as a region. `None` when the node has no
/// polygon boundary (a textual boundary does not count).
pub fn region_of(node: &NodeRecord) -> Option<Result<Region, SpatialError>> {
    let ring = node.prop("boundary").and_then(Value::as_polygon)?;
    Some(Region::new(Some(node.id.to_string()), ring.to_vec()))
}

/// A node's geometry: its boundary region, else its `position` point.
pub fn shape_of(node: &NodeRecord) -> Option<Result<SpatialTarget, SpatialError>> {
    if let Some(r) = region_of(node) {
        return Some(r.map(SpatialTarget::Region));
    }
    node.prop("position")
        .and_then(Value::as_point)
        .map(|p| Ok(SpatialTarget::Point(p)))
}

fn within_parents(graph: &PropertyGraph, ix: NodeIx) -> impl Iterator<Item = NodeIx> + '_ {
    graph
        .out_typed(ix, "location_predicate")
        .filter(|e| {
            e.str_prop("type")
                .and_then(SpatialKind::parse)
                .is_some_and(|k| k == SpatialKind::Within)
        })
        .map(|e| e.dst_ix())
        .filter(move |&d| graph.node_at(d).is_a("location"))
}

/// Enclosing jurisdictions of a location, innermost first, following
/// `within` location predicates. Non-jurisdiction locations on the way are
/// traversed but not reported.
pub fn jurisdiction_chain(graph: &PropertyGraph, id: &str) -> Result<Vec<NodeId>, SpatialError> {
    let start = graph
        .node_ix(id)
        .ok_or_else(|| SpatialError::MissingNode(id.to_string()))?;
    if !graph.node_at(start).is_a("location") {
        return Err(SpatialError::NotALocation(id.to_string()));
    }
    detect_within_cycle(graph, start)?;
    let mut seen = BTreeSet::from([start]);
    let mut frontier = vec![start];
    let mut out = Vec::new();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in frontier {
            for p in within_parents(graph, v) {
                if seen.insert(p) {
                    if graph.node_at(p).is_a("jurisdiction") {
                        out.push(graph.node_at(p).id.clone());
                    }
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// Errors when a `within` cycle is reachable from `start`.
fn detect_within_cycle(graph: &PropertyGraph, start: NodeIx) -> Result<(), SpatialError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; graph.node_count()];
    let mut path: Vec<NodeIx> = Vec::new();
    let mut stack: Vec<(NodeIx, Vec<NodeIx>)> = vec![(start, within_parents(graph, start).collect())];
    mark[start.0 as usize] = Mark::Open;
    path.push(start);
    while let Some((_, children)) = stack.last_mut() {
        match children.pop() {
            Some(c) => match mark[c.0 as usize] {
                Mark::New => {
                    mark[c.0 as usize] = Mark::Open;
                    path.push(c);
                    let kids = within_parents(graph, c).collect();
                    stack.push((c, kids));
                }
                Mark::Open => {
                    let from = path.iter().position(|&v| v == c).expect("open node on path");
                    return Err(SpatialError::ContainmentCycle(
                        path[from..]
                            .iter()
                            .map(|&v| graph.node_at(v).id.to_string())
                            .collect(),
                    ));
                }
                Mark::Done => {}
            },
            None => {
                let (v, _) = stack.pop().expect("non-empty");
                mark[v.0 as usize] = Mark::Done;
                path.pop();
            }
        }
    }
    Ok(())
}

/// Obligation triggers attached by `has_jurisdiction` to the node or any
/// enclosing jurisdiction, in id order, before defeasibility.
pub fn effective_obligations(graph: &PropertyGraph, id: &str) -> Result<Vec<NodeId>, SpatialError> {
    let mut scope = vec![graph
        .node_ix(id)
        .ok_or_else(|| SpatialError::MissingNode(id.to_string()))?];
    for j in jurisdiction_chain(graph, id)? {
        scope.extend(graph.node_ix(j.as_str()));
    }
    let triggers: BTreeSet<NodeIx> = scope
        .into_iter()
        .flat_map(|j| graph.out_typed(j, "has_jurisdiction"))
        .map(|e| e.dst_ix())
        .filter(|&t| graph.node_at(t).is_a("obligation_trigger"))
        .collect();
    Ok(triggers.into_iter().map(|t| graph.node_at(t).id.clone()).collect())
}
