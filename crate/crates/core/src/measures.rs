//! Signed atomic measures (0-currents), their Jordan decomposition, and the
//! flat norm as a partial transport problem with unit discard price.

use std::ops::Deref;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mcf::MinCostFlow;

/// Relative tolerance for the total weight of a boundary.
pub const BALANCE_TOL: f64 = 1e-12;

/// A weighted point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: Point,
    pub weight: f64,
}

impl Atom {
    pub fn new(position: Point, weight: f64) -> Result<Self> {
        if weight == 0.0 || !weight.is_finite() {
            return Err(Error::Domain(format!("atom weight must be finite and nonzero, got {weight}")));
        }
        Ok(Atom { position, weight })
    }
}

/// A finite signed atomic measure with pairwise distinct positions, kept
/// sorted by lexicographic position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    /// Consolidates atoms at identical positions by summing weights. Sums
    /// that cancel to rounding are dropped.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if a.weight == 0.0 || !a.weight.is_finite() {
                return Err(Error::Domain(format!("atom weight must be finite and nonzero, got {}", a.weight)));
            }
        }
        Self::from_pairs(atoms.into_iter().map(|a| (a.position, a.weight)))
    }

    /// Like [`AtomicMeasure::new`] but silently skips zero weights.
    pub fn from_pairs<I: IntoIterator<Item = (Point, f64)>>(pairs: I) -> Result<Self> {
        let mut raw: Vec<(Point, f64)> = pairs.into_iter().collect();
        if let Some((p0, _)) = raw.first() {
            let d = p0.dim();
            if let Some((p, _)) = raw.iter().find(|(p, _)| p.dim() != d) {
                return Err(Error::Domain(format!("mixed dimensions {} and {}", d, p.dim())));
            }
        }
        if let Some((_, w)) = raw.iter().find(|(_, w)| !w.is_finite()) {
            return Err(Error::Domain(format!("non-finite weight {w}")));
        }
        raw.sort_by(|a, b| a.0.lex_cmp(&b.0));
        let mut atoms: Vec<Atom> = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            let mut j = i;
            let mut sum = 0.0;
            let mut scale: f64 = 0.0;
            while j < raw.len() && raw[j].0 == raw[i].0 {
                sum += raw[j].1;
                scale = scale.max(raw[j].1.abs());
                j += 1;
            }
            if sum != 0.0 && sum.abs() > 1e-14 * scale {
                atoms.push(Atom { position: raw[i].0.clone(), weight: sum });
            }
            i = j;
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Ambient dimension, or `None` for the zero measure.
    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.position.dim())
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn support(&self) -> Vec<Point> {
        self.atoms.iter().map(|a| a.position.clone()).collect()
    }

    /// Weight at `p`, zero off the support.
    pub fn weight_at(&self, p: &Point) -> f64 {
        self.atoms
            .binary_search_by(|a| a.position.lex_cmp(p))
            .map(|i| self.atoms[i].weight)
            .unwrap_or(0.0)
    }

    pub fn jordan(&self) -> (AtomicMeasure, AtomicMeasure) {
        let pos = self.atoms.iter().filter(|a| a.weight > 0.0).cloned().collect();
        let neg = self
            .atoms
            .iter()
            .filter(|a| a.weight < 0.0)
            .map(|a| Atom { position: a.position.clone(), weight: -a.weight })
            .collect();
        (AtomicMeasure { atoms: pos }, AtomicMeasure { atoms: neg })
    }

    pub fn add(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        Self::from_pairs(
            self.atoms.iter().chain(other.atoms.iter()).map(|a| (a.position.clone(), a.weight)),
        )
    }

    pub fn sub(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> AtomicMeasure {
        if s == 0.0 {
            return AtomicMeasure::empty();
        }
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { position: a.position.clone(), weight: a.weight * s })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self
            .atoms
            .iter()
            .map(|a| json!({"x": a.position.coords(), "w": a.weight}))
            .collect();
        json!({ "atoms": atoms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let list = v
            .get("atoms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected an object with an \"atoms\" array".into()))?;
        let mut atoms = Vec::with_capacity(list.len());
        for (i, item) in list.iter().enumerate() {
            let x = item
                .get("x")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("atoms[{i}]: missing \"x\" array")))?;
            let coords = x
                .iter()
                .map(|c| c.as_f64().ok_or_else(|| Error::Parse(format!("atoms[{i}]: non-numeric coordinate"))))
                .collect::<Result<Vec<f64>>>()?;
            let w = item
                .get("w")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("atoms[{i}]: missing numeric \"w\"")))?;
            let p = Point::new(coords).map_err(|e| Error::Parse(format!("atoms[{i}]: {e}")))?;
            atoms.push(Atom::new(p, w).map_err(|e| Error::Parse(format!("atoms[{i}]: {e}")))?);
        }
        AtomicMeasure::new(atoms)
    }
}

/// A signed atomic measure with zero total weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Boundary {
    measure: AtomicMeasure,
}

impl Boundary {
    pub fn new(measure: AtomicMeasure) -> Result<Self> {
        let total = measure.total_weight();
        if total.abs() > BALANCE_TOL * measure.mass() {
            return Err(Error::Domain(format!("boundary weights sum to {total}, not 0")));
        }
        Ok(Boundary { measure })
    }

    /// `sinks - sources`.
    pub fn from_parts(sinks: &AtomicMeasure, sources: &AtomicMeasure) -> Result<Self> {
        Self::new(sinks.sub(sources)?)
    }

    pub fn measure(&self) -> &AtomicMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> AtomicMeasure {
        self.measure
    }
}

impl Deref for Boundary {
    type Target = AtomicMeasure;
    fn deref(&self) -> &AtomicMeasure {
        &self.measure
    }
}

pub fn mass(m: &AtomicMeasure) -> f64 {
    m.mass()
}

pub fn jordan(m: &AtomicMeasure) -> (AtomicMeasure, AtomicMeasure) {
    m.jordan()
}

/// Flat norm of an atomic 0-current: the cheapest partial transport between
/// its positive and negative parts, where untransported mass costs 1 per
/// unit on either side. Also defined for unbalanced measures.
pub fn flat_norm_0(m: &AtomicMeasure) -> f64 {
    let (pos, neg) = m.jordan();
    let (mp, mn) = (pos.mass(), neg.mass());
    if mp == 0.0 && mn == 0.0 {
        return 0.0;
    }
    let np = pos.len();
    let nn = neg.len();
    // nodes: s, P_0.., N_0.., dP (source-side discard), dN (sink-side discard), t
    let s = 0;
    let p0 = 1;
    let n0 = 1 + np;
    let dp = n0 + nn;
    let dn = dp + 1;
    let t = dn + 1;
    let mut g = MinCostFlow::new(t + 1);
    let big = 2.0 * (mp + mn) + 1.0;
    for (i, a) in pos.atoms().iter().enumerate() {
        g.add_edge(s, p0 + i, a.weight, 0.0);
        g.add_edge(p0 + i, dn, big, 1.0);
        for (j, b) in neg.atoms().iter().enumerate() {
            let d = a.position.dist(&b.position);
            if d < 2.0 {
                g.add_edge(p0 + i, n0 + j, big, d);
            }
        }
    }
    for (j, b) in neg.atoms().iter().enumerate() {
        g.add_edge(dp, n0 + j, big, 1.0);
        g.add_edge(n0 + j, t, b.weight, 0.0);
    }
    g.add_edge(s, dp, mn, 0.0);
    g.add_edge(dp, dn, big, 0.0);
    g.add_edge(dn, t, mp, 0.0);
    let eps = 1e-13 * (mp + mn);
    let (_, cost) = g.run(s, t, mp + mn, eps);
    cost.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(pairs: &[(f64, f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::from_pairs(pairs.iter().map(|&(x, y, w)| (Point::xy(x, y), w))).unwrap()
    }

    #[test]
    fn mass_examples() {
        assert_eq!(mass(&AtomicMeasure::empty()), 0.0);
        assert_eq!(mass(&m(&[(0.0, 0.0, 1.0), (1.0, 0.0, -1.0)])), 2.0);
        assert_eq!(mass(&m(&[(0.0, 0.0, 3.0), (1.0, 0.0, -3.0)])), 6.0);
    }

    #[test]
    fn jordan_examples() {
        let mu = m(&[(0.0, 0.0, 1.0), (1.0, 0.0, -1.0)]);
        let (p, n) = jordan(&mu);
        assert_eq!(p, m(&[(0.0, 0.0, 1.0)]));
        assert_eq!(n, m(&[(1.0, 0.0, 1.0)]));

        let pos = m(&[(0.0, 0.0, 1.0), (2.0, 0.0, 4.0)]);
        let (p, n) = jordan(&pos);
        assert_eq!(p, pos);
        assert!(n.is_empty());

        let merged = AtomicMeasure::new(vec![
            Atom::new(Point::xy(0.5, 0.5), 2.0).unwrap(),
            Atom::new(Point::xy(0.5, 0.5), -3.0).unwrap(),
        ])
        .unwrap();
        let (p, n) = jordan(&merged);
        assert!(p.is_empty());
        assert_eq!(n, m(&[(0.5, 0.5, 1.0)]));
    }

    #[test]
    fn consolidation_drops_cancelled_atoms() {
        let mu = m(&[(0.0, 0.0, 0.1), (0.0, 0.0, 0.2), (0.0, 0.0, -0.3), (1.0, 0.0, 1.0)]);
        assert_eq!(mu.len(), 1);
        assert!(Atom::new(Point::xy(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn boundary_balance() {
        assert!(Boundary::new(m(&[(0.0, 0.0, 1.0), (1.0, 0.0, -1.0)])).is_ok());
        let e = Boundary::new(m(&[(0.0, 0.0, 1.0), (1.0, 0.0, -0.9)])).unwrap_err();
        assert_eq!(e.kind(), "domain");
    }

    #[test]
    fn flat_norm_two_atoms() {
        assert_eq!(flat_norm_0(&AtomicMeasure::empty()), 0.0);
        for &d in &[0.0625, 0.5, 1.0, 1.5, 1.999, 2.0, 2.5, 10.0] {
            let b = m(&[(d, 0.0, 1.0), (0.0, 0.0, -1.0)]);
            assert!((flat_norm_0(&b) - d.min(2.0)).abs() < 1e-12, "d = {d}");
            let b2 = m(&[(d, 0.0, 2.0), (0.0, 0.0, -2.0)]);
            assert!((flat_norm_0(&b2) - 2.0 * d.min(2.0)).abs() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn flat_norm_unbalanced() {
        // one unit transported over 0.5, one unit discarded
        let b = m(&[(0.5, 0.0, 2.0), (0.0, 0.0, -1.0)]);
        assert!((flat_norm_0(&b) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mu = m(&[(1.0, 2.0, -1.5), (0.0, 3.0, 1.5)]);
        let v = mu.to_json();
        assert_eq!(v.to_string(), r#"{"atoms":[{"w":1.5,"x":[0.0,3.0]},{"w":-1.5,"x":[1.0,2.0]}]}"#);
        assert_eq!(AtomicMeasure::from_json(&v).unwrap(), mu);
        let bad: Value = serde_json::from_str(r#"{"atoms":[{"x":[0],"w":0}]}"#).unwrap();
        assert_eq!(AtomicMeasure::from_json(&bad).unwrap_err().kind(), "parse");
    }
}
