//! End-to-end Gilbert solver: every full Steiner topology is reduced by its
//! boundary flow, placed by the convex optimizer, and ranked by the α-mass
//! of the resulting network.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::chains::{same_support, validate_kirchhoff, PolyChain, UnionFind};
use crate::error::{Error, Result};
use crate::geometry::{self, branch_angles, cone_balance_residual, ConeRay, Point};
use crate::measures::Boundary;
use crate::optimizer::{minimize_placement, PlacementProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::topology::{canonical_code, edge_flows, enumerate_full_topologies, Topology};

pub const DEFAULT_ATOM_CAP: usize = 8;
/// Angle-condition tolerance at degree-3 branch points, in radians.
pub const ANGLE_CHECK_TOL: f64 = 1e-5;
/// Relative tolerance of the cone-balance certificate.
pub const CONE_CHECK_TOL: f64 = 1e-6;
/// Relative tolerance when comparing network supports.
pub const SUPPORT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub atom_cap: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { atom_cap: DEFAULT_ATOM_CAP, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// A locally optimal network for one topology class.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub code: String,
    pub value: f64,
    pub chain: PolyChain,
    pub converged: bool,
}

/// Structural checks on the optimal network.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificates {
    pub tree: bool,
    pub kirchhoff: bool,
    pub angles: bool,
    pub max_angle_error: f64,
    pub cone_balance: bool,
    pub max_cone_residual: f64,
    pub monotonicity: bool,
    pub converged: bool,
}

impl Certificates {
    pub fn all_ok(&self) -> bool {
        self.tree && self.kirchhoff && self.angles && self.cone_balance && self.monotonicity && self.converged
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tree": self.tree,
            "kirchhoff": self.kirchhoff,
            "angles": self.angles,
            "max_angle_error": self.max_angle_error,
            "cone_balance": self.cone_balance,
            "max_cone_residual": self.max_cone_residual,
            "monotonicity": self.monotonicity,
            "converged": self.converged,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best: PolyChain,
    pub value: f64,
    /// Support-distinct networks by ascending `(value, code)`.
    pub ranking: Vec<(String, f64)>,
    pub gap: f64,
    pub certificates: Certificates,
    /// The networks behind `ranking`, in the same order.
    pub candidates: Vec<Candidate>,
}

impl SolveResult {
    pub fn to_json(&self) -> Value {
        let ranking: Vec<Value> = self.ranking.iter().map(|(c, v)| json!({"code": c, "value": v})).collect();
        json!({
            "network": self.best.to_json(),
            "value": self.value,
            "gap": self.gap,
            "ranking": ranking,
            "certificates": self.certificates.to_json(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Uniqueness {
    Unique(PolyChain),
    Ambiguous(Vec<PolyChain>),
}

pub fn solve_gilbert(b: &Boundary, alpha: f64) -> Result<SolveResult> {
    solve_gilbert_with(b, alpha, &SolveOptions::default())
}

pub fn solve_gilbert_with(b: &Boundary, alpha: f64, opts: &SolveOptions) -> Result<SolveResult> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let n = b.len();
    if n == 0 {
        return Err(Error::Domain("boundary is zero".into()));
    }
    if n > opts.atom_cap {
        return Err(Error::Capacity { atoms: n, cap: opts.atom_cap });
    }
    let terminals: Vec<Point> = b.support();
    let weights: Vec<f64> = b.atoms().iter().map(|a| a.weight).collect();

    let mut problems: BTreeMap<String, (Topology, Vec<f64>)> = BTreeMap::new();
    for full in enumerate_full_topologies(n) {
        let flows = edge_flows(&full, &weights)?;
        let (t, f) = full.reduce(&flows);
        problems.entry(t.canonical_code().to_string()).or_insert((t, f));
    }
    let jobs: Vec<(Topology, Vec<f64>)> = problems.into_values().collect();
    let mut found: Vec<Candidate> = jobs
        .into_par_iter()
        .map(|(t, f)| {
            let p = PlacementProblem::new(t, f, terminals.clone(), alpha)?;
            let r = minimize_placement(&p, opts.tol, opts.max_iter);
            let chain = p.chain(&r.steiner_positions).refined();
            let value = chain.alpha_mass(alpha);
            let code = network_code(&chain, &terminals);
            Ok(Candidate { code, value, chain, converged: r.converged })
        })
        .collect::<Result<Vec<_>>>()?;
    found.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.code.cmp(&b.code)));

    let mut candidates: Vec<Candidate> = Vec::new();
    for c in found {
        // a later entry with the same support is never better
        let dup = candidates.iter().any(|k| {
            (k.code == c.code && (c.value - k.value).abs() <= 1e-9 * (1.0 + k.value))
                || ((c.value - k.value).abs() <= 1e-6 * (1.0 + k.value)
                    && same_support(&k.chain, &c.chain, SUPPORT_TOL))
        });
        if !dup {
            candidates.push(c);
        }
    }
    let ranking: Vec<(String, f64)> = candidates.iter().map(|c| (c.code.clone(), c.value)).collect();
    let best = candidates[0].chain.clone();
    let value = candidates[0].value;
    let gap = if ranking.len() > 1 {
        (ranking[1].1 - value) / value.max(f64::MIN_POSITIVE)
    } else {
        f64::INFINITY
    };
    let certificates = certify_network(&best, b, alpha, candidates[0].converged);
    Ok(SolveResult { best, value, ranking, gap, certificates, candidates })
}

/// Reports every support-distinct network whose value is within `gap_tol`
/// (relative) of the optimum.
pub fn uniqueness_probe(b: &Boundary, alpha: f64, gap_tol: f64) -> Result<Uniqueness> {
    uniqueness_probe_with(b, alpha, gap_tol, &SolveOptions::default())
}

pub fn uniqueness_probe_with(b: &Boundary, alpha: f64, gap_tol: f64, opts: &SolveOptions) -> Result<Uniqueness> {
    let r = solve_gilbert_with(b, alpha, opts)?;
    let v = r.value.max(f64::MIN_POSITIVE);
    let near: Vec<PolyChain> = r
        .candidates
        .iter()
        .filter(|c| (c.value - r.value) / v <= gap_tol)
        .map(|c| c.chain.clone())
        .collect();
    if near.len() >= 2 {
        Ok(Uniqueness::Ambiguous(near))
    } else {
        Ok(Uniqueness::Unique(r.best))
    }
}

/// Topology code of a concrete network: vertices at terminal positions take
/// the terminal's index, straight degree-2 pass-through vertices are
/// spliced out, and the remaining forest is encoded.
pub fn network_code(chain: &PolyChain, terminals: &[Point]) -> String {
    let n = terminals.len();
    let scale = geometry::diameter(terminals).max(1.0);
    let mut id = vec![usize::MAX; chain.vertices().len()];
    let mut next = n;
    for (i, p) in chain.vertices().iter().enumerate() {
        if let Some(t) = terminals.iter().position(|q| q.dist(p) <= 1e-9 * scale) {
            id[i] = t;
        }
    }
    for slot in id.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let mut edges: Vec<(usize, usize)> = chain.edges().iter().map(|e| (id[e.tail], id[e.head])).collect();
    loop {
        let mut deg = vec![0usize; next];
        for &(u, v) in &edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        let Some(s) = (n..next).find(|&s| deg[s] == 2) else { break };
        let inc: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].0 == s || edges[i].1 == s).collect();
        let other = |i: usize| if edges[i].0 == s { edges[i].1 } else { edges[i].0 };
        let (a, b) = (other(inc[0]), other(inc[1]));
        edges[inc[0]] = (a, b);
        edges.remove(inc[1]);
    }
    // compact Steiner ids
    let mut used = vec![false; next];
    for &(u, v) in &edges {
        used[u] = true;
        used[v] = true;
    }
    let mut relabel = vec![usize::MAX; next];
    let mut m = n;
    for v in 0..next {
        if v < n {
            relabel[v] = v;
        } else if used[v] {
            relabel[v] = m;
            m += 1;
        }
    }
    let edges: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (relabel[u], relabel[v])).collect();
    let mut uf = UnionFind::new(m);
    let acyclic = edges.iter().all(|&(u, v)| uf.union(u, v));
    let code = canonical_code(n, m, &edges);
    if acyclic {
        code
    } else {
        format!("cyclic:{code}")
    }
}

/// Interior vertex indices of a network: vertices off the boundary support.
pub fn interior_vertices(chain: &PolyChain) -> Vec<usize> {
    let vb = chain.vertex_boundary();
    let wmax = vb.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let deg = chain.degrees();
    (0..chain.vertices().len())
        .filter(|&v| deg[v] > 0 && vb[v].abs() <= 1e-9 * wmax.max(1e-300))
        .collect()
}

/// Rays leaving vertex `v`, with multiplicity equal to the outgoing flow.
pub fn vertex_rays(chain: &PolyChain, v: usize) -> Vec<ConeRay> {
    let x = chain.vertices()[v].coords();
    chain
        .edges()
        .iter()
        .filter(|e| e.tail == v || e.head == v)
        .filter_map(|e| {
            let (other, m) = if e.tail == v { (e.head, e.w) } else { (e.tail, -e.w) };
            let dir = geometry::sub(chain.vertices()[other].coords(), x);
            ConeRay::towards(&dir, m).ok()
        })
        .collect()
}

/// Largest deviation of a degree-3 vertex from the branching angles, or
/// `None` if the flows there admit no feasible angles.
pub fn angle_error(chain: &PolyChain, v: usize, alpha: f64) -> Option<f64> {
    let rays = vertex_rays(chain, v);
    if rays.len() != 3 {
        return Some(0.0);
    }
    let big = (0..3)
        .max_by(|&i, &j| rays[i].multiplicity().abs().total_cmp(&rays[j].multiplicity().abs()))
        .unwrap();
    let small: Vec<usize> = (0..3).filter(|&i| i != big).collect();
    let (a1, a2) = (rays[small[0]].multiplicity().abs(), rays[small[1]].multiplicity().abs());
    let ba = branch_angles(a1, a2, alpha).ok()?;
    let p_big = rays[big].direction();
    let th1 = PI - geometry::angle_between(rays[small[0]].direction(), p_big).ok()?;
    let th2 = PI - geometry::angle_between(rays[small[1]].direction(), p_big).ok()?;
    Some((th1 - ba.theta1).abs().max((th2 - ba.theta2).abs()))
}

/// Relative cone-balance residual at vertex `v`.
pub fn cone_residual(chain: &PolyChain, v: usize, alpha: f64) -> f64 {
    let rays = vertex_rays(chain, v);
    if rays.is_empty() {
        return 0.0;
    }
    let scale: f64 = rays.iter().map(|r| r.multiplicity().abs().powf(alpha)).sum();
    let mscale: f64 = rays.iter().map(|r| r.multiplicity().abs()).sum();
    match cone_balance_residual(&rays, alpha) {
        Ok((m, f)) => (m.abs() / mscale).max(geometry::norm(&f) / scale),
        Err(_) => f64::INFINITY,
    }
}

/// Nondecreasing-ratio check at the midpoints of up to three longest
/// interior edges.
pub fn monotonicity_ok(chain: &PolyChain, alpha: f64, points: &[Point]) -> bool {
    let bsupp: Vec<Point> = chain.boundary().atoms().iter().map(|a| a.position.clone()).collect();
    points.iter().all(|x| {
        let reach = bsupp.iter().map(|q| q.dist(x)).fold(f64::INFINITY, f64::min);
        if !(reach.is_finite() && reach > 0.0) {
            return true;
        }
        let radii: Vec<f64> = (1..=8).map(|i| reach * i as f64 / 8.5).collect();
        match chain.monotonicity_profile(x, &radii, alpha) {
            Ok(prof) => prof.windows(2).all(|w| w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs())),
            Err(_) => false,
        }
    })
}

fn certify_network(best: &PolyChain, b: &Boundary, alpha: f64, converged: bool) -> Certificates {
    let (plus, minus) = b.jordan();
    let tree = best.is_tree();
    let kirchhoff = validate_kirchhoff(best, &minus, &plus);
    let interior = interior_vertices(best);
    let mut max_angle_error: f64 = 0.0;
    let mut angles = true;
    let mut max_cone_residual: f64 = 0.0;
    for &v in &interior {
        match angle_error(best, v, alpha) {
            Some(e) => max_angle_error = max_angle_error.max(e),
            None => angles = false,
        }
        max_cone_residual = max_cone_residual.max(cone_residual(best, v, alpha));
    }
    angles &= max_angle_error <= ANGLE_CHECK_TOL;
    let cone_balance = max_cone_residual <= CONE_CHECK_TOL;
    let mut edges: Vec<_> = best.edges().to_vec();
    edges.sort_by(|a, b| best.edge_length(b).total_cmp(&best.edge_length(a)));
    let probes: Vec<Point> = edges
        .iter()
        .take(3)
        .map(|e| best.vertices()[e.tail].lerp(&best.vertices()[e.head], 0.5))
        .collect();
    let monotonicity = monotonicity_ok(best, alpha, &probes);
    Certificates {
        tree,
        kirchhoff,
        angles,
        max_angle_error,
        cone_balance,
        max_cone_residual,
        monotonicity,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AtomicMeasure;

    fn boundary(atoms: &[([f64; 2], f64)]) -> Boundary {
        Boundary::new(AtomicMeasure::from_pairs(atoms.iter().map(|(p, w)| (Point::from(*p), *w))).unwrap()).unwrap()
    }

    #[test]
    fn two_atoms_single_segment() {
        let b = boundary(&[([0.0, 0.0], -1.0), ([3.0, 4.0], 1.0)]);
        let r = solve_gilbert(&b, 0.5).unwrap();
        assert_eq!(r.best.edges().len(), 1);
        assert!((r.value - 5.0).abs() < 1e-12);
        assert!(r.certificates.all_ok(), "{:?}", r.certificates);
        assert!(matches!(uniqueness_probe(&b, 0.5, 1e-6).unwrap(), Uniqueness::Unique(_)));
    }

    #[test]
    fn collinear_sources_share_a_segment() {
        let b = boundary(&[([0.0, 0.0], -1.0), ([1.0, 0.0], -1.0), ([3.0, 0.0], 2.0)]);
        let r = solve_gilbert(&b, 0.5).unwrap();
        assert!((r.value - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-9, "{}", r.value);
        assert_eq!(r.best.edges().len(), 2);
        assert!(r.certificates.all_ok(), "{:?}", r.certificates);
    }

    #[test]
    fn symmetric_y_certificates() {
        let b = boundary(&[([0.0, 1.0], -1.0), ([0.0, -1.0], -1.0), ([6.0, 0.0], 2.0)]);
        let r = solve_gilbert(&b, 0.5).unwrap();
        assert_eq!(r.best.edges().len(), 3);
        assert!(r.certificates.all_ok(), "{:?}", r.certificates);
        assert!(r.certificates.max_angle_error < 1e-6);
    }

    #[test]
    fn capacity_and_domain_errors() {
        let atoms: Vec<([f64; 2], f64)> = (0..9).map(|i| ([i as f64, (i * i) as f64], if i < 8 { 1.0 } else { -8.0 })).collect();
        let b = boundary(&atoms);
        assert_eq!(solve_gilbert(&b, 0.5).unwrap_err().kind(), "capacity");
        let b = boundary(&[([0.0, 0.0], -1.0), ([1.0, 0.0], 1.0)]);
        assert_eq!(solve_gilbert(&b, 1.0).unwrap_err().kind(), "domain");
    }
}
