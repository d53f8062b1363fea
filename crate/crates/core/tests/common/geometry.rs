//! Random convex polygons and a half-plane classifier for grid sampling.

use olgpp::spatial::contains;
use olgpp::{GeoPoint, Region};
use rand::Rng;

pub const BAND: f64 = 1e-9;

/// Vertices on a rotated ellipse at sorted, well separated angles, so the
/// ring is convex and counter-clockwise.
pub fn random_convex(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let n = rng.gen_range(3..=12);
    let (cx, cy) = (rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
    let (a, b) = (rng.gen_range(1.0..200.0), rng.gen_range(1.0..200.0));
    let rot: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let angles = loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        t.sort_by(f64::total_cmp);
        let gaps_ok = t.windows(2).all(|w| w[1] - w[0] > 0.05) && t[0] + std::f64::consts::TAU - t[n - 1] > 0.05;
        if gaps_ok {
            break t;
        }
    };
    angles
        .iter()
        .map(|t| {
            let (x, y) = (a * t.cos(), b * t.sin());
            (cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos())
        })
        .collect()
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

pub fn boundary_distance(ring: &[(f64, f64)], p: (f64, f64)) -> f64 {
    (0..ring.len())
        .map(|i| segment_distance(p, ring[i], ring[(i + 1) % ring.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn signed_area(ring: &[(f64, f64)]) -> f64 {
    (0..ring.len())
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        / 2.0
}

/// Inside a convex ring: on the interior side of (or on) every edge.
pub fn inside_convex(ring: &[(f64, f64)], p: (f64, f64)) -> bool {
    let sign = signed_area(ring).signum();
    (0..ring.len()).all(|i| {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        sign * ((b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)) >= 0.0
    })
}

pub struct GridReport {
    pub points: usize,
    pub banded: usize,
    pub disagreements: Vec<(f64, f64)>,
}

/// Classifies a `side` x `side` grid over the ring's bounding box (grown
/// by a tenth on every side) with `contains` and with the oracle.
pub fn grid_check(ring: &[(f64, f64)], side: usize) -> GridReport {
    let region = Region::new(None, ring.iter().map(|&(x, y)| GeoPoint::new(x, y)).collect()).expect("valid polygon");
    let xs = ring.iter().map(|p| p.0);
    let ys = ring.iter().map(|p| p.1);
    let (x0, x1) = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let (mx, my) = ((x1 - x0) * 0.1, (y1 - y0) * 0.1);
    let mut report = GridReport {
        points: 0,
        banded: 0,
        disagreements: Vec::new(),
    };
    for i in 0..side {
        for j in 0..side {
            let p = (
                x0 - mx + (x1 - x0 + 2.0 * mx) * i as f64 / (side - 1) as f64,
                y0 - my + (y1 - y0 + 2.0 * my) * j as f64 / (side - 1) as f64,
            );
            report.points += 1;
            if boundary_distance(ring, p) <= BAND {
                report.banded += 1;
                continue;
            }
            if contains(&region, &GeoPoint::new(p.0, p.1)) != inside_convex(ring, p) {
                report.disagreements.push(p);
            }
        }
    }
    report
}
