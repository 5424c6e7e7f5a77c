//! Exact local solvers: the three-terminal Gilbert problem and the
//! four-point local-topology classifier.

use std::fmt;

use rayon::prelude::*;

use crate::chains::PolyChain;
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::optimizer::{self, PlacementProblem, MERGE_TOL};
use crate::topology::{self, Topology};

/// Two sources `x1`, `x2` of masses `a1`, `a2` and a sink `y` receiving
/// `a1 + a2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePointInstance {
    pub x1: Point,
    pub a1: f64,
    pub x2: Point,
    pub a2: f64,
    pub y: Point,
    pub alpha: f64,
}

impl ThreePointInstance {
    fn check(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a2 > 0.0 && self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::Domain(format!("masses must be positive, got {} and {}", self.a1, self.a2)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        let d = self.x1.dim();
        if self.x2.dim() != d || self.y.dim() != d {
            return Err(Error::Domain("points of mixed dimension".into()));
        }
        if self.x1 == self.x2 || self.x1 == self.y || self.x2 == self.y {
            return Err(Error::Domain("points must be pairwise distinct".into()));
        }
        Ok(())
    }
}

/// Optimal network for a three-point instance: the cheapest of the Y with
/// an optimized branch point and the three two-edge degenerations.
pub fn solve_three_point(inst: &ThreePointInstance) -> Result<PolyChain> {
    inst.check()?;
    let (a1, a2, b) = (inst.a1, inst.a2, inst.a1 + inst.a2);
    let (x1, x2, y) = (&inst.x1, &inst.x2, &inst.y);
    let two_edge = [
        // both sources straight into y
        vec![(x1, y, a1), (x2, y, a2)],
        // x2 routed through x1
        vec![(x2, x1, a2), (x1, y, b)],
        // x1 routed through x2
        vec![(x1, x2, a1), (x2, y, b)],
    ];
    let mut best: Option<(f64, PolyChain)> = None;
    for segs in &two_edge {
        let segs: Vec<(Point, Point, f64)> = segs.iter().map(|(p, q, w)| ((*p).clone(), (*q).clone(), *w)).collect();
        let chain = PolyChain::from_segments(&segs)?;
        let v = chain.alpha_mass(inst.alpha);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, chain));
        }
    }

    let topo = Topology::new(3, 1, vec![(0, 3), (1, 3), (2, 3)])?;
    let flows = vec![a1, a2, -b];
    let p = PlacementProblem::new(topo, flows, vec![x1.clone(), x2.clone(), y.clone()], inst.alpha)?;
    let r = optimizer::minimize_placement_default(&p);
    let e = &r.steiner_positions[0];
    let scale = geometry::diameter(&[x1.clone(), x2.clone(), y.clone()]);
    let collapsed = [x1, x2, y].iter().any(|t| t.dist(e) <= MERGE_TOL * scale);
    let (bv, _) = best.as_ref().expect("three two-edge candidates");
    if !collapsed && r.value < *bv {
        return Ok(p.chain(&r.steiner_positions));
    }
    Ok(best.expect("three two-edge candidates").1)
}

/// Boundary `theta (delta_D - delta_A) + (theta / k)(delta_B - delta_C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourPointInstance {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
    pub theta: f64,
    pub k: u32,
    pub alpha: f64,
}

impl FourPointInstance {
    pub fn points(&self) -> [Point; 4] {
        [self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone()]
    }

    /// Boundary weights of `A, B, C, D`.
    pub fn weights(&self) -> [f64; 4] {
        let delta = self.theta / self.k as f64;
        [-self.theta, delta, -delta, self.theta]
    }

    fn check(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Domain(format!("theta must be positive, got {}", self.theta)));
        }
        if self.k < 1 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let pts = self.points();
        let d = pts[0].dim();
        if pts.iter().any(|p| p.dim() != d) {
            return Err(Error::Domain("points of mixed dimension".into()));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if pts[i] == pts[j] {
                    return Err(Error::Domain(format!("points {} and {} coincide", NAMES[i], NAMES[j])));
                }
            }
        }
        Ok(())
    }

    /// `W = theta ([AB] + [CD] + (k - 1)/k [BC])`.
    pub fn w_chain(&self) -> PolyChain {
        let t = self.theta;
        let segs = vec![
            (self.a.clone(), self.b.clone(), t),
            (self.c.clone(), self.d.clone(), t),
            (self.b.clone(), self.c.clone(), t * (self.k as f64 - 1.0) / self.k as f64),
        ];
        PolyChain::from_segments(&segs).expect("distinct points")
    }

    /// `Z = theta ([AD] + 1/k [CB])`.
    pub fn z_chain(&self) -> PolyChain {
        let t = self.theta;
        let segs = vec![(self.a.clone(), self.d.clone(), t), (self.c.clone(), self.b.clone(), t / self.k as f64)];
        PolyChain::from_segments(&segs).expect("distinct points")
    }

    /// Closed form of the alpha-mass of `W`.
    pub fn w_alpha_mass(&self) -> f64 {
        let k = self.k as f64;
        self.theta.powf(self.alpha)
            * (self.a.dist(&self.b) + self.c.dist(&self.d) + ((k - 1.0) / k).powf(self.alpha) * self.b.dist(&self.c))
    }

    /// Closed form of the alpha-mass of `Z`.
    pub fn z_alpha_mass(&self) -> f64 {
        let k = self.k as f64;
        self.theta.powf(self.alpha) * (self.a.dist(&self.d) + k.powf(-self.alpha) * self.b.dist(&self.c))
    }
}

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FourPointLabel {
    W,
    Z,
    Other(String),
}

impl fmt::Display for FourPointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FourPointLabel::W => write!(f, "W"),
            FourPointLabel::Z => write!(f, "Z"),
            FourPointLabel::Other(id) => write!(f, "OTHER({id})"),
        }
    }
}

/// One support shape of the catalogue. Vertices `0..4` are `A, B, C, D`,
/// `4` is `E` and `5` is `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogueEntry {
    pub id: String,
    pub steiner_count: usize,
    pub edges: Vec<(usize, usize)>,
}

fn pair(s: &str) -> (usize, usize) {
    let idx = |c: char| match c {
        'A' => 0,
        'B' => 1,
        'C' => 2,
        'D' => 3,
        'E' => 4,
        'F' => 5,
        _ => unreachable!("catalogue letters"),
    };
    let mut it = s.chars();
    (idx(it.next().unwrap()), idx(it.next().unwrap()))
}

/// The full candidate catalogue in order: 19 branchless supports, the
/// one-branch-point families (each of `(2a)`..`(2d)` with its three
/// choices of the extra segment), `(2e)`, and the two-branch-point
/// families.
pub fn catalogue() -> Vec<CatalogueEntry> {
    let branchless: [(&str, &[&str]); 19] = [
        ("1a", &["AB", "AC", "AD"]),
        ("1b", &["AB", "AC", "BD"]),
        ("1c", &["AB", "AC", "CD"]),
        ("1d", &["AB", "AD", "BC"]),
        ("1e", &["AB", "AD", "CD"]),
        ("1f", &["AB", "BC", "BD"]),
        ("1g", &["AB", "BC", "CD"]),
        ("1h", &["AB", "BD", "CD"]),
        ("1i", &["AB", "CD"]),
        ("1j", &["AC", "AD", "BC"]),
        ("1k", &["AC", "AD", "BD"]),
        ("1l", &["AC", "BC", "BD"]),
        ("1m", &["AC", "BC", "CD"]),
        ("1n", &["AC", "BD"]),
        ("1o", &["AC", "BD", "CD"]),
        ("1p", &["AD", "BC"]),
        ("1q", &["AD", "BC", "BD"]),
        ("1r", &["AD", "BC", "CD"]),
        ("1s", &["AD", "BD", "CD"]),
    ];
    let mut out: Vec<CatalogueEntry> = branchless
        .iter()
        .map(|(id, segs)| CatalogueEntry {
            id: id.to_string(),
            steiner_count: 0,
            edges: segs.iter().map(|s| pair(s)).collect(),
        })
        .collect();
    for (id, star, rest) in [("2a", "ABC", 'D'), ("2b", "ABD", 'C'), ("2c", "ACD", 'B'), ("2d", "BCD", 'A')] {
        for other in star.chars() {
            let mut seg = [other, rest];
            seg.sort();
            let seg: String = seg.iter().collect();
            let mut edges: Vec<(usize, usize)> = star.chars().map(|c| pair(&format!("{c}E"))).collect();
            edges.push(pair(&seg));
            out.push(CatalogueEntry { id: format!("{id}-{seg}"), steiner_count: 1, edges });
        }
    }
    out.push(CatalogueEntry {
        id: "2e".into(),
        steiner_count: 1,
        edges: ["AE", "BE", "CE", "DE"].iter().map(|s| pair(s)).collect(),
    });
    for (id, segs) in [
        ("3a", ["EF", "AE", "BE", "CF", "DF"]),
        ("3b", ["EF", "AE", "CE", "BF", "DF"]),
        ("3c", ["EF", "AE", "DE", "BF", "CF"]),
    ] {
        out.push(CatalogueEntry { id: id.into(), steiner_count: 2, edges: segs.iter().map(|s| pair(s)).collect() });
    }
    out
}

/// A realizable catalogue candidate with optimized branch points.
#[derive(Debug, Clone, PartialEq)]
pub struct FourPointCandidate {
    pub id: String,
    pub alpha_mass: f64,
    pub chain: PolyChain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourPointClassification {
    pub label: FourPointLabel,
    /// `(candidate id, alpha-mass)` ascending, ties in catalogue order.
    pub ranking: Vec<(String, f64)>,
    /// Realizable candidates in ranking order.
    pub candidates: Vec<FourPointCandidate>,
}

/// Relative mass tolerance under which two currents are identified.
pub const CURRENT_TOL: f64 = 1e-9;

/// True when `t` equals `reference` as a current, up to [`CURRENT_TOL`]
/// relative to the mass of `reference`.
pub fn same_current(t: &PolyChain, reference: &PolyChain) -> bool {
    t.sub(reference).mass() <= CURRENT_TOL * reference.mass().max(f64::MIN_POSITIVE)
}

/// Evaluates one catalogue entry; `None` if the support cannot carry the
/// boundary with nonzero multiplicity on every segment.
fn evaluate(inst: &FourPointInstance, entry: &CatalogueEntry) -> Option<FourPointCandidate> {
    let topo = Topology::new(4, entry.steiner_count, entry.edges.clone()).ok()?;
    let flows = topology::edge_flows(&topo, &inst.weights()).ok()?;
    if flows.contains(&0.0) {
        return None;
    }
    let p = PlacementProblem::new(topo, flows, inst.points().to_vec(), inst.alpha).ok()?;
    let steiner = if entry.steiner_count == 0 {
        Vec::new()
    } else {
        optimizer::minimize_placement_default(&p).steiner_positions
    };
    let chain = p.chain(&steiner).refined();
    Some(FourPointCandidate { id: entry.id.clone(), alpha_mass: chain.alpha_mass(inst.alpha), chain })
}

/// Ranks every realizable catalogue candidate by alpha-mass. The label is
/// `Z` when the winner coincides with `Z` as a current, else `W` when it
/// coincides with `W`, else the winner's id.
pub fn classify_four_point(inst: &FourPointInstance) -> Result<FourPointClassification> {
    inst.check()?;
    let cat = catalogue();
    let evaluated: Vec<Option<FourPointCandidate>> = cat.par_iter().map(|e| evaluate(inst, e)).collect();
    let mut candidates: Vec<FourPointCandidate> = evaluated.into_iter().flatten().collect();
    candidates.sort_by(|a, b| a.alpha_mass.total_cmp(&b.alpha_mass));
    let winner = candidates.first().ok_or_else(|| Error::Domain("no realizable candidate".into()))?;
    let label = if same_current(&winner.chain, &inst.z_chain()) {
        FourPointLabel::Z
    } else if same_current(&winner.chain, &inst.w_chain()) {
        FourPointLabel::W
    } else {
        FourPointLabel::Other(winner.id.clone())
    };
    let ranking = candidates.iter().map(|c| (c.id.clone(), c.alpha_mass)).collect();
    Ok(FourPointClassification { label, ranking, candidates })
}

/// Near-collinear instance in the frame of a perturbed point:
/// `A = (-1, s0 rho)`, `B = (-beta, s1 rho)`, `C = (beta, s2 rho)`,
/// `D = (1, s3 rho)` with `rho = rho_frac * 2`.
pub fn near_collinear_instance(theta: f64, k: u32, alpha: f64, beta: f64, rho_frac: f64, s: [f64; 4]) -> FourPointInstance {
    let rho = rho_frac * 2.0;
    FourPointInstance {
        a: Point::xy(-1.0, s[0] * rho),
        b: Point::xy(-beta, s[1] * rho),
        c: Point::xy(beta, s[2] * rho),
        d: Point::xy(1.0, s[3] * rho),
        theta,
        k,
        alpha,
    }
}

/// Offset patterns used by [`probe_k0`].
pub const PROBE_OFFSETS: [[f64; 4]; 6] = [
    [0.0, 0.0, 0.0, 0.0],
    [1.0, -1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
    [0.5, -0.25, 0.75, 1.0],
    [-0.3, 0.9, -0.6, 0.2],
];

/// Empirical threshold: labels per `k`, and the least `k0` such that every
/// offset pattern is labeled `W` or `Z` for all `k0 <= k <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct K0Probe {
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    pub rho_frac: f64,
    pub labels: Vec<(u32, Vec<FourPointLabel>)>,
    pub k0: Option<u32>,
}

impl K0Probe {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "theta": self.theta,
            "beta": self.beta,
            "rho_frac": self.rho_frac,
            "k0": self.k0,
            "labels": self.labels.iter().map(|(k, ls)| serde_json::json!({
                "k": k,
                "labels": ls.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn probe_k0(alpha: f64, theta: f64, beta: f64, rho_frac: f64, k_max: u32) -> Result<K0Probe> {
    let mut labels = Vec::new();
    for k in 1..=k_max {
        let ls = PROBE_OFFSETS
            .iter()
            .map(|s| classify_four_point(&near_collinear_instance(theta, k, alpha, beta, rho_frac, *s)).map(|c| c.label))
            .collect::<Result<Vec<_>>>()?;
        labels.push((k, ls));
    }
    let good = |ls: &[FourPointLabel]| ls.iter().all(|l| matches!(l, FourPointLabel::W | FourPointLabel::Z));
    let mut k0 = None;
    for (k, ls) in labels.iter().rev() {
        if !good(ls) {
            break;
        }
        k0 = Some(*k);
    }
    Ok(K0Probe { alpha, theta, beta, rho_frac, labels, k0 })
}
