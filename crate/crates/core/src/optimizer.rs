//! Convex placement of Steiner vertices for a fixed topology and fixed
//! edge flows.
//!
//! The objective `F(x) = sum_e |f_e|^alpha |x_u - x_v|` is a weighted sum of
//! Euclidean norms. It is minimized through the smoothed objective
//! `sum_e c_e sqrt(|x_u - x_v|^2 + eps^2)` by damped Newton steps with
//! continuation in `eps`. The smoothed gradient doubles as a dual point,
//! which yields a lower bound on the true minimum.

use nalgebra::{DMatrix, DVector};

use crate::chains::{Edge, PolyChain, UnionFind};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::topology::Topology;

/// Vertices closer than this fraction of the terminal diameter are merged.
pub const MERGE_TOL: f64 = 1e-7;
/// Default relative accuracy of [`minimize_placement`].
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default Newton iteration budget of [`minimize_placement`].
pub const DEFAULT_MAX_ITER: usize = 10_000;

const EPS_START: f64 = 1e-2;
const EPS_FINAL: f64 = 1e-10;
const EPS_FLOOR: f64 = 1e-14;

/// A fixed topology with fixed flows over fixed terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    pub topology: Topology,
    /// Per-edge flow, signed along `(min, max)` of the edge.
    pub flows: Vec<f64>,
    pub terminal_positions: Vec<Point>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub steiner_positions: Vec<Point>,
    /// Objective value at `steiner_positions`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Topology edges `(u, v)` whose endpoints were merged.
    pub collapsed_pairs: Vec<(usize, usize)>,
    /// Certified lower bound on the minimum of the objective.
    pub lower_bound: f64,
}

impl PlacementResult {
    pub fn gap(&self) -> f64 {
        (self.value - self.lower_bound).max(0.0)
    }
}

impl PlacementProblem {
    pub fn new(topology: Topology, flows: Vec<f64>, terminal_positions: Vec<Point>, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if flows.len() != topology.edges().len() {
            return Err(Error::Domain(format!(
                "{} flows for {} edges",
                flows.len(),
                topology.edges().len()
            )));
        }
        if terminal_positions.len() != topology.n_terminals() {
            return Err(Error::Domain(format!(
                "{} terminal positions for {} terminals",
                terminal_positions.len(),
                topology.n_terminals()
            )));
        }
        let d = terminal_positions[0].dim();
        if terminal_positions.iter().any(|p| p.dim() != d) {
            return Err(Error::Domain("terminals of mixed dimension".into()));
        }
        let mut net = vec![0.0; topology.n_vertices()];
        let scale: f64 = flows.iter().map(|f| f.abs()).sum();
        for (&(u, v), &f) in topology.edges().iter().zip(&flows) {
            net[u] -= f;
            net[v] += f;
        }
        if let Some(s) = (topology.n_terminals()..topology.n_vertices()).find(|&s| net[s].abs() > 1e-9 * scale) {
            return Err(Error::Domain(format!("flow is not conserved at Steiner vertex {s}")));
        }
        Ok(PlacementProblem { topology, flows, terminal_positions, alpha })
    }

    pub fn dim(&self) -> usize {
        self.terminal_positions[0].dim()
    }

    /// Edge costs `|f_e|^alpha`, zero on zero-flow edges.
    pub fn weights(&self) -> Vec<f64> {
        self.flows
            .iter()
            .map(|f| if *f == 0.0 { 0.0 } else { f.abs().powf(self.alpha) })
            .collect()
    }

    fn position<'a>(&'a self, v: usize, steiner: &'a [Point]) -> &'a Point {
        let n = self.topology.n_terminals();
        if v < n {
            &self.terminal_positions[v]
        } else {
            &steiner[v - n]
        }
    }

    pub fn objective(&self, steiner: &[Point]) -> f64 {
        self.topology
            .edges()
            .iter()
            .zip(self.weights())
            .map(|(&(u, v), c)| {
                if c == 0.0 {
                    0.0
                } else {
                    c * self.position(u, steiner).dist(self.position(v, steiner))
                }
            })
            .sum()
    }

    /// Smoothed objective and its gradient, flattened Steiner-major.
    pub fn smoothed(&self, steiner: &[Point], eps: f64) -> (f64, Vec<f64>) {
        let n = self.topology.n_terminals();
        let d = self.dim();
        let mut g = vec![0.0; steiner.len() * d];
        let mut f = 0.0;
        for (&(u, v), c) in self.topology.edges().iter().zip(self.weights()) {
            if c == 0.0 {
                continue;
            }
            let r = geometry::sub(self.position(u, steiner).coords(), self.position(v, steiner).coords());
            let s = (geometry::dot(&r, &r) + eps * eps).sqrt();
            f += c * s;
            for k in 0..d {
                let gk = c * r[k] / s;
                if u >= n {
                    g[(u - n) * d + k] += gk;
                }
                if v >= n {
                    g[(v - n) * d + k] -= gk;
                }
            }
        }
        (f, g)
    }

    /// The network realized by the given Steiner positions: terminals
    /// first, then Steiner vertices, zero-flow edges omitted.
    pub fn chain(&self, steiner: &[Point]) -> PolyChain {
        let mut vertices = self.terminal_positions.clone();
        vertices.extend(steiner.iter().cloned());
        let edges = self
            .topology
            .edges()
            .iter()
            .zip(&self.flows)
            .filter(|(_, f)| **f != 0.0)
            .map(|(&(u, v), &f)| Edge::new(u, v, f))
            .collect();
        PolyChain::new(vertices, edges).expect("topology edges index valid vertices")
    }
}

/// Problem in normalized coordinates: terminals centered and scaled to unit
/// diameter. Nodes `0..n` are fixed terminals, nodes `n..n + nv` are free
/// points flattened into `x`.
struct Scaled {
    n: usize,
    nv: usize,
    d: usize,
    /// `(u, v, c)` per edge; zero-cost edges are kept so indices match the
    /// topology.
    edges: Vec<(usize, usize, f64)>,
    terms: Vec<Vec<f64>>,
}

impl Scaled {
    fn at<'b>(&'b self, v: usize, x: &'b [f64]) -> &'b [f64] {
        if v < self.n {
            &self.terms[v]
        } else {
            &x[(v - self.n) * self.d..(v - self.n + 1) * self.d]
        }
    }

    fn len2(&self, u: usize, v: usize, x: &[f64]) -> f64 {
        self.at(u, x).iter().zip(self.at(v, x)).map(|(p, q)| (p - q) * (p - q)).sum()
    }

    fn value(&self, x: &[f64], eps: f64) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.2 != 0.0)
            .map(|&(u, v, c)| c * (self.len2(u, v, x) + eps * eps).sqrt())
            .sum()
    }

    fn exact(&self, x: &[f64]) -> f64 {
        self.value(x, 0.0)
    }

    /// Gradient and Hessian of the smoothed objective.
    fn derivatives(&self, x: &[f64], eps: f64) -> (DVector<f64>, DMatrix<f64>) {
        let (n, d) = (self.n, self.d);
        let m = self.nv * d;
        let mut g = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, m);
        for &(u, v, c) in &self.edges {
            if c == 0.0 {
                continue;
            }
            let r = geometry::sub(self.at(u, x), self.at(v, x));
            let s = (geometry::dot(&r, &r) + eps * eps).sqrt();
            for k in 0..d {
                let gk = c * r[k] / s;
                if u >= n {
                    g[(u - n) * d + k] += gk;
                }
                if v >= n {
                    g[(v - n) * d + k] -= gk;
                }
            }
            for k in 0..d {
                for l in 0..d {
                    let delta = if k == l { 1.0 } else { 0.0 };
                    let hk = c / s * (delta - r[k] * r[l] / (s * s));
                    if u >= n {
                        h[((u - n) * d + k, (u - n) * d + l)] += hk;
                    }
                    if v >= n {
                        h[((v - n) * d + k, (v - n) * d + l)] += hk;
                    }
                    if u >= n && v >= n {
                        h[((u - n) * d + k, (v - n) * d + l)] -= hk;
                        h[((v - n) * d + k, (u - n) * d + l)] -= hk;
                    }
                }
            }
        }
        (g, h)
    }

    /// Minimizer of the quadratic majorizer of the smoothed objective at
    /// `x` (one Weiszfeld step).
    fn irls_step(&self, x: &[f64], eps: f64) -> Vec<f64> {
        let w: Vec<f64> = self
            .edges
            .iter()
            .map(|&(u, v, c)| if c == 0.0 { 0.0 } else { c / (self.len2(u, v, x) + eps * eps).sqrt() })
            .collect();
        self.laplacian_solve(&w).unwrap_or_else(|| x.to_vec())
    }

    /// Minimizes `sum_e w_e |x_u - x_v|^2` over the free points.
    fn laplacian_solve(&self, w: &[f64]) -> Option<Vec<f64>> {
        let (n, d, s) = (self.n, self.d, self.nv);
        if s == 0 {
            return Some(Vec::new());
        }
        let mut l = DMatrix::<f64>::zeros(s, s);
        let mut rhs = DMatrix::<f64>::zeros(s, d);
        for (&(u, v, _), &we) in self.edges.iter().zip(w) {
            for (a, b) in [(u, v), (v, u)] {
                if a < n {
                    continue;
                }
                l[(a - n, a - n)] += we;
                if b >= n {
                    l[(a - n, b - n)] -= we;
                } else {
                    for k in 0..d {
                        rhs[(a - n, k)] += we * self.terms[b][k];
                    }
                }
            }
        }
        for i in 0..s {
            if l[(i, i)] == 0.0 {
                l[(i, i)] = 1.0;
            }
        }
        let sol = l.lu().solve(&rhs)?;
        let mut x = vec![0.0; s * d];
        for i in 0..s {
            for k in 0..d {
                x[i * d + k] = sol[(i, k)];
            }
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    /// Harmonic placement: every free point at the cost-weighted average of
    /// its neighbors.
    fn harmonic(&self) -> Vec<f64> {
        let cmax = self.edges.iter().fold(0.0f64, |a, e| a.max(e.2));
        let floor = 1e-6 * cmax.max(1e-300);
        let w: Vec<f64> = self.edges.iter().map(|e| e.2.max(floor)).collect();
        self.laplacian_solve(&w).unwrap_or_else(|| vec![0.0; self.nv * self.d])
    }

    /// The problem with the given vertex classes merged. Returns the
    /// quotient and, per vertex, its quotient node. `None` if a class holds
    /// two terminals.
    fn quotient(&self, class: &[usize]) -> Option<(Scaled, Vec<usize>)> {
        let n = self.n;
        let mut node = vec![usize::MAX; class.len()];
        let mut of_class: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
        for t in 0..n {
            if of_class.insert(class[t], t).is_some() {
                return None;
            }
            node[t] = t;
        }
        let mut nv = 0;
        for v in n..class.len() {
            let id = *of_class.entry(class[v]).or_insert_with(|| {
                nv += 1;
                n + nv - 1
            });
            node[v] = id;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v, c)| {
                let (a, b) = (node[u], node[v]);
                (a, b, if a == b { 0.0 } else { c })
            })
            .collect();
        Some((Scaled { n, nv, d: self.d, edges, terms: self.terms.clone() }, node))
    }
}

/// Minimizes the placement objective. `tol` is relative to `1 + F`; the
/// result is `converged` once the certified gap is below it.
///
/// When plain continuation stalls, short edges are contracted and the
/// smaller problem is solved and certified against the original one.
pub fn minimize_placement(p: &PlacementProblem, tol: f64, max_iter: usize) -> PlacementResult {
    let n = p.topology.n_terminals();
    let s = p.topology.steiner_count();
    let d = p.dim();
    let centroid: Vec<f64> = (0..d)
        .map(|k| p.terminal_positions.iter().map(|t| t.coords()[k]).sum::<f64>() / n as f64)
        .collect();
    let diam = geometry::diameter(&p.terminal_positions);
    let scale = if diam > 0.0 { diam } else { 1.0 };
    let terms: Vec<Vec<f64>> = p
        .terminal_positions
        .iter()
        .map(|t| t.coords().iter().zip(&centroid).map(|(a, z)| (a - z) / scale).collect())
        .collect();
    let radius = terms.iter().map(|t| geometry::norm(t)).fold(0.0, f64::max);
    let edges = p.topology.edges().iter().zip(p.weights()).map(|(&(u, v), c)| (u, v, c)).collect();
    let full = Scaled { n, nv: s, d, edges, terms };

    let mut iterations = 0;
    let mut best: Option<Certified> = None;
    let consider = |c: Certified, best: &mut Option<Certified>| {
        if best.as_ref().is_none_or(|b| c.gap() < b.gap()) {
            *best = Some(c);
        }
    };
    let mut x = full.harmonic();
    let budget = max_iter / 2;
    let c = continuation(&full, &full, &mut x, |q| q.to_vec(), radius, tol, budget, &mut iterations);
    let ok = c.ok;
    consider(c, &mut best);
    if !ok && s > 0 {
        let mut tried: Vec<Vec<usize>> = Vec::new();
        for theta in [1e-6, 1e-5, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
            if iterations >= max_iter {
                break;
            }
            let mut uf = UnionFind::new(n + s);
            for &(u, v, _) in &full.edges {
                if (u >= n || v >= n) && full.len2(u, v, &x).sqrt() <= theta {
                    let (ru, rv) = (uf.find(u), uf.find(v));
                    if !(ru < n && rv < n) {
                        uf.union(ru, rv);
                    }
                }
            }
            let class: Vec<usize> = (0..n + s).map(|v| uf.find(v)).collect();
            if tried.contains(&class) || (n..n + s).all(|v| class[v] == v) {
                continue;
            }
            tried.push(class.clone());
            let Some((q, node)) = full.quotient(&class) else { continue };
            let mut xq = vec![0.0; q.nv * d];
            let mut count = vec![0usize; q.nv];
            for v in n..n + s {
                if node[v] >= n {
                    let j = node[v] - n;
                    count[j] += 1;
                    for k in 0..d {
                        xq[j * d + k] += x[(v - n) * d + k];
                    }
                }
            }
            for j in 0..q.nv {
                for k in 0..d {
                    xq[j * d + k] /= count[j] as f64;
                }
            }
            let expand = |xq: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; s * d];
                for v in n..n + s {
                    out[(v - n) * d..(v - n + 1) * d].copy_from_slice(q.at(node[v], xq));
                }
                out
            };
            let left = max_iter.saturating_sub(iterations);
            let c = continuation(&q, &full, &mut xq, expand, radius, tol, left, &mut iterations);
            let ok = c.ok;
            consider(c, &mut best);
            if ok {
                break;
            }
        }
    }

    let Certified { snapped: xs, anchors, lb, ok: converged, .. } = best.expect("at least one certification pass");
    let steiner_positions: Vec<Point> = (0..s)
        .map(|j| match anchors[j] {
            Some(t) => p.terminal_positions[t].clone(),
            None => Point::from_vec((0..d).map(|k| xs[j * d + k] * scale + centroid[k]).collect()),
        })
        .collect();
    let value_unscaled = p.objective(&steiner_positions);
    let collapsed_pairs = p
        .topology
        .edges()
        .iter()
        .filter(|&&(u, v)| u >= n || v >= n)
        .filter(|&&(u, v)| p.position(u, &steiner_positions).dist(p.position(v, &steiner_positions)) <= MERGE_TOL * scale)
        .copied()
        .collect();
    PlacementResult {
        steiner_positions,
        value: value_unscaled,
        iterations,
        converged,
        collapsed_pairs,
        lower_bound: lb * scale,
    }
}

struct Certified {
    snapped: Vec<f64>,
    anchors: Vec<Option<usize>>,
    value: f64,
    lb: f64,
    ok: bool,
}

impl Certified {
    fn gap(&self) -> f64 {
        self.value - self.lb
    }
}

/// Continuation in `eps` on `sc`, certifying expanded points against
/// `full` once `eps` is small.
#[allow(clippy::too_many_arguments)]
fn continuation(
    sc: &Scaled,
    full: &Scaled,
    x: &mut [f64],
    expand: impl Fn(&[f64]) -> Vec<f64>,
    radius: f64,
    tol: f64,
    budget: usize,
    iterations: &mut usize,
) -> Certified {
    let start = *iterations;
    let mut eps = EPS_START;
    let mut best: Option<Certified> = None;
    loop {
        let used = *iterations - start;
        *iterations += newton_stage(sc, x, eps, budget.saturating_sub(used));
        let used = *iterations - start;
        if eps <= EPS_FINAL * 1.0001 || used >= budget {
            let (snapped, anchors, lb) = certify(full, &expand(x), radius);
            let value = full.exact(&snapped);
            let ok = value - lb <= tol * (1.0 + value);
            if best.as_ref().is_none_or(|b| value - lb < b.gap()) {
                best = Some(Certified { snapped, anchors, value, lb, ok });
            }
            if ok || used >= budget || eps <= EPS_FLOOR * 1.0001 {
                break;
            }
        }
        eps /= 10.0;
    }
    best.expect("loop certifies before leaving")
}

/// Damped Newton iterations on the smoothed objective. Returns the number
/// of iterations used.
fn newton_stage(sc: &Scaled, x: &mut [f64], eps: f64, budget: usize) -> usize {
    let m = x.len();
    if m == 0 {
        return 0;
    }
    let mut it = 0;
    let mut f = sc.value(x, eps);
    while it < budget.min(200) {
        it += 1;
        let (g, h) = sc.derivatives(x, eps);
        let tr = (0..m).map(|i| h[(i, i)]).fold(0.0f64, f64::max);
        let mut damping = 1e-14 * tr.max(1e-300);
        let step = loop {
            let mut hd = h.clone();
            for i in 0..m {
                hd[(i, i)] += damping;
            }
            if let Some(ch) = hd.cholesky() {
                break ch.solve(&(-&g));
            }
            damping *= 100.0;
            if damping > 1e6 * tr.max(1.0) {
                break -g.clone() / tr.max(1.0);
            }
        };
        let dec = -g.dot(&step);
        if !(dec > 1e-26 * (1.0 + f)) {
            break;
        }
        let newton: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let f_newton = sc.value(&newton, eps);
        let irls = sc.irls_step(x, eps);
        let f_irls = sc.value(&irls, eps);
        let f_before = f;
        if f_newton.min(f_irls) < f {
            if f_newton <= f_irls {
                x.copy_from_slice(&newton);
                f = f_newton;
            } else {
                x.copy_from_slice(&irls);
                f = f_irls;
            }
        } else if f_newton <= f * (1.0 + 1e-14) && sc.derivatives(&newton, eps).0.norm() < g.norm() {
            // objective flat to rounding: accept on gradient decrease
            x.copy_from_slice(&newton);
            f = f_newton;
            continue;
        } else {
            let mut t = 0.5;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                let ft = sc.value(&trial, eps);
                if ft < f {
                    x.copy_from_slice(&trial);
                    f = ft;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if f_before - f <= 1e-16 * f && dec <= 1e-20 * (1.0 + f) {
            break;
        }
    }
    it
}

/// Merges collapsed vertices and certifies the merged point with a dual
/// lower bound. Returns the merged positions, the terminal each Steiner
/// vertex was merged into, and the bound.
///
/// The dual point is `c_e` times the unit edge direction on open edges. On
/// collapsed edges it is solved from force balance at the Steiner vertices
/// of each merged cluster and clipped to norm `c_e`. Any remaining force
/// imbalance `g_j` is paid for by `|g_j|` times a bound on how far vertex
/// `j` can be from a minimizer inside the terminal hull.
fn certify(sc: &Scaled, x: &[f64], radius: f64) -> (Vec<f64>, Vec<Option<usize>>, f64) {
    let (n, d, s) = (sc.n, sc.d, sc.nv);
    let edges: Vec<(usize, usize)> = sc.edges.iter().map(|e| (e.0, e.1)).collect();
    let cost: Vec<f64> = sc.edges.iter().map(|e| e.2).collect();
    let mut uf = UnionFind::new(n + s);
    let mut collapsed = vec![false; edges.len()];
    for (i, &(u, v)) in edges.iter().enumerate() {
        if u < n && v < n {
            continue;
        }
        if geometry::dist(sc.at(u, x), sc.at(v, x)) <= MERGE_TOL {
            let (ru, rv) = (uf.find(u), uf.find(v));
            if !(ru < n && rv < n) {
                uf.union(ru, rv);
                collapsed[i] = true;
            }
        }
    }
    let mut snapped = x.to_vec();
    let mut anchors = vec![None; s];
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for j in 0..s {
        groups.entry(uf.find(n + j)).or_default().push(j);
    }
    for (root, members) in &groups {
        let target: Vec<f64> = if *root < n {
            sc.terms[*root].clone()
        } else {
            (0..d)
                .map(|k| members.iter().map(|&j| x[j * d + k]).sum::<f64>() / members.len() as f64)
                .collect()
        };
        for &j in members {
            snapped[j * d..(j + 1) * d].copy_from_slice(&target);
            if *root < n {
                anchors[j] = Some(*root);
            }
        }
    }

    let mut y = vec![vec![0.0; d]; edges.len()];
    for (i, (&(u, v), &c)) in edges.iter().zip(&cost).enumerate() {
        if c == 0.0 || collapsed[i] {
            continue;
        }
        let r = geometry::sub(sc.at(u, &snapped), sc.at(v, &snapped));
        let len = geometry::norm(&r);
        if len > 0.0 {
            y[i] = r.iter().map(|t| c * t / len).collect();
        }
    }
    // force at vertex w from edge i: +y for the first endpoint, -y for the second
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n + s];
    for (i, &(u, v)) in edges.iter().enumerate() {
        inc[u].push(i);
        inc[v].push(i);
    }
    let force = |w: usize, skip: usize, y: &[Vec<f64>]| -> Vec<f64> {
        let mut f = vec![0.0; d];
        for &i in &inc[w] {
            if i == skip {
                continue;
            }
            let sgn = if edges[i].0 == w { 1.0 } else { -1.0 };
            for k in 0..d {
                f[k] += sgn * y[i][k];
            }
        }
        f
    };
    for (root, members) in &groups {
        let start = if *root < n { *root } else { n + members[0] };
        // breadth-first order over collapsed edges from the cluster root
        let mut order = vec![(start, usize::MAX)];
        let mut k = 0;
        while k < order.len() {
            let (w, from) = order[k];
            k += 1;
            for &i in &inc[w] {
                if collapsed[i] && i != from {
                    let (a, b) = edges[i];
                    order.push((if a == w { b } else { a }, i));
                }
            }
        }
        for &(w, i) in order.iter().skip(1).rev() {
            let rest = force(w, i, &y);
            let sgn = if edges[i].0 == w { 1.0 } else { -1.0 };
            let mut yi: Vec<f64> = rest.iter().map(|t| -sgn * t).collect();
            let norm = geometry::norm(&yi);
            if norm > cost[i] {
                yi.iter_mut().for_each(|t| *t *= cost[i] / norm);
            }
            y[i] = yi;
        }
    }
    let mut lb = 0.0;
    for (i, &(u, v)) in edges.iter().enumerate() {
        let r = geometry::sub(sc.at(u, &snapped), sc.at(v, &snapped));
        lb += geometry::dot(&y[i], &r);
    }
    for j in 0..s {
        let g = force(n + j, usize::MAX, &y);
        let xj = geometry::norm(&snapped[j * d..(j + 1) * d]);
        lb -= geometry::norm(&g) * (radius + xj);
    }
    (snapped, anchors, lb)
}

/// Solves with the default tolerance and iteration budget.
pub fn minimize_placement_default(p: &PlacementProblem) -> PlacementResult {
    minimize_placement(p, DEFAULT_TOL, DEFAULT_MAX_ITER)
}
