//! Ambient-space primitives: points, vector helpers, angles and the local
//! optimality conditions at a branching vertex.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine arguments within this distance of [-1, 1] are clamped.
pub const COS_CLAMP_TOL: f64 = 1e-12;
/// Absolute tolerance for angle comparisons, in radians.
pub const ANGLE_TOL: f64 = 1e-9;
/// Tolerance on the norm of a cone ray direction.
pub const UNIT_TOL: f64 = 1e-12;

/// A location in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("point must have at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(Point(coords))
    }

    /// Builds a point without validation. Coordinates must be finite.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    /// Lexicographic total order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        lex_cmp(&self.0, &other.0)
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    pub fn translated(&self, v: &[f64]) -> Point {
        Point(self.0.iter().zip(v).map(|(a, b)| a + b).collect())
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c.to_vec())
    }
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Unit vector along `a`, or `None` for the zero vector.
pub fn unit(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0).then(|| a.iter().map(|x| x / n).collect())
}

/// Distance from `p` to the segment `[a, b]` and the clamped parameter of
/// the closest point.
pub fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return (dist(p, a), 0.0);
    }
    let t = (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0);
    let q: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    (dist(p, &q), t)
}

/// Diameter of a point set (0 for fewer than two points).
pub fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(p.dist(q));
        }
    }
    d
}

/// Clamps a cosine argument, reporting `None` when it lies outside
/// [-1, 1] by more than [`COS_CLAMP_TOL`].
fn clamp_cos(c: f64) -> Option<f64> {
    if c > 1.0 + COS_CLAMP_TOL || c < -1.0 - COS_CLAMP_TOL || c.is_nan() {
        None
    } else {
        Some(c.clamp(-1.0, 1.0))
    }
}

/// Angle between two nonzero vectors, in [0, pi].
pub fn angle_between(u: &[f64], v: &[f64]) -> Result<f64> {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("angle with a zero vector".into()));
    }
    if u.len() != v.len() {
        return Err(Error::Domain("angle between vectors of different dimension".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// Angles at an optimal three-edge branching vertex merging flows `a1` and
/// `a2` (or splitting `a1 + a2` into them).
///
/// `theta1` (`theta2`) is the deflection between edge 1 (edge 2) and the
/// common edge; `theta12` is obtained independently from its own cosine
/// formula and equals `theta1 + theta2` whenever the configuration is
/// feasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta12: f64,
}

pub fn branch_angles(a1: f64, a2: f64, alpha: f64) -> Result<BranchAngles> {
    if !(a1 > 0.0 && a2 > 0.0) || !a1.is_finite() || !a2.is_finite() {
        return Err(Error::Domain(format!("branch weights must be positive, got {a1}, {a2}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let k1 = a1 / (a1 + a2);
    let k2 = a2 / (a1 + a2);
    let (p1, p2) = (k1.powf(alpha), k2.powf(alpha));
    let (q1, q2) = (p1 * p1, p2 * p2);
    let c1 = (q1 + 1.0 - q2) / (2.0 * p1);
    let c2 = (q2 + 1.0 - q1) / (2.0 * p2);
    let c12 = (1.0 - q1 - q2) / (2.0 * p1 * p2);
    match (clamp_cos(c1), clamp_cos(c2), clamp_cos(c12)) {
        (Some(c1), Some(c2), Some(c12)) => Ok(BranchAngles {
            theta1: c1.acos(),
            theta2: c2.acos(),
            theta12: c12.acos(),
        }),
        _ => Err(Error::InfeasibleAngles(format!(
            "cosines ({c1}, {c2}, {c12}) for a1={a1}, a2={a2}, alpha={alpha}"
        ))),
    }
}

/// A ray of a tangent cone: a unit direction leaving the vertex and the
/// signed flow along it (positive when mass leaves the vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct ConeRay {
    direction: Vec<f64>,
    multiplicity: f64,
}

impl ConeRay {
    pub fn new(direction: Vec<f64>, multiplicity: f64) -> Result<Self> {
        if (norm(&direction) - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("cone ray direction {direction:?} is not unit")));
        }
        if multiplicity == 0.0 || !multiplicity.is_finite() {
            return Err(Error::Domain("cone ray multiplicity must be nonzero".into()));
        }
        Ok(ConeRay { direction, multiplicity })
    }

    /// Normalizes `direction` before building the ray.
    pub fn towards(direction: &[f64], multiplicity: f64) -> Result<Self> {
        let u = unit(direction).ok_or_else(|| Error::Domain("zero cone direction".into()))?;
        ConeRay::new(u, multiplicity)
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn multiplicity(&self) -> f64 {
        self.multiplicity
    }
}

/// Residuals of the balancing conditions at a cone vertex: the net mass
/// `sum m_i` and the force `sum |m_i|^alpha p_i`.
///
/// The force uses unsigned weights: moving the vertex by `v` changes the
/// length of ray `i` at rate `-<p_i, v>` whatever the flow direction, so a
/// straight line through the vertex (rays `+m` and `-m` in opposite
/// directions) is balanced.
pub fn cone_balance_residual(rays: &[ConeRay], alpha: f64) -> Result<(f64, Vec<f64>)> {
    let first = rays
        .first()
        .ok_or_else(|| Error::Domain("cone needs at least one ray".into()))?;
    let d = first.direction.len();
    let mut force = vec![0.0; d];
    let mut mass = 0.0;
    for r in rays {
        if r.direction.len() != d {
            return Err(Error::Domain("cone rays of different dimension".into()));
        }
        mass += r.multiplicity;
        let w = r.multiplicity.abs().powf(alpha);
        for (f, p) in force.iter_mut().zip(&r.direction) {
            *f += w * p;
        }
    }
    Ok((mass, force))
}

/// Planar unit vector at angle `phi`.
pub fn polar(phi: f64) -> Vec<f64> {
    vec![phi.cos(), phi.sin()]
}

/// Deflection angle of a 3-ray branching from its outward ray directions:
/// `pi - angle(p_i, p_common)`.
pub fn deflection(p_i: &[f64], p_common: &[f64]) -> Result<f64> {
    Ok(PI - angle_between(p_i, p_common)?)
}
