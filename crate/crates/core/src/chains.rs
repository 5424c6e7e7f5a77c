//! Polyhedral 1-currents: weighted oriented segments in R^d.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{self, dot, point_segment_distance, sub, Point};
use crate::measures::AtomicMeasure;

/// Per-atom tolerance of [`validate_kirchhoff`].
pub const KIRCHHOFF_TOL: f64 = 1e-9;
/// Relative tolerance used when refining and validating segment geometry.
pub const GEOM_TOL: f64 = 1e-12;
/// Relative tolerance for vertex merging during common refinement.
pub const REFINE_TOL: f64 = 1e-10;

/// An oriented edge `tail -> head` carrying signed multiplicity `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, w: f64) -> Self {
        Edge { tail, head, w }
    }
}

/// A polyhedral 1-current. Parallel edges are consolidated on construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyChain {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
}

impl PolyChain {
    pub fn empty() -> Self {
        PolyChain::default()
    }

    pub fn new(vertices: Vec<Point>, edges: Vec<Edge>) -> Result<Self> {
        if let Some(p) = vertices.first() {
            let d = p.dim();
            if vertices.iter().any(|q| q.dim() != d) {
                return Err(Error::Domain("vertices of mixed dimension".into()));
            }
        }
        let n = vertices.len();
        let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out: Vec<Edge> = Vec::new();
        let mut scale: Vec<f64> = Vec::new();
        for e in edges {
            if e.tail >= n || e.head >= n {
                return Err(Error::Domain(format!("edge {}->{} references a missing vertex", e.tail, e.head)));
            }
            if e.tail == e.head {
                return Err(Error::Domain(format!("edge {0}->{0} is a loop", e.tail)));
            }
            if !e.w.is_finite() {
                return Err(Error::Domain(format!("non-finite multiplicity {}", e.w)));
            }
            let key = (e.tail.min(e.head), e.tail.max(e.head));
            match slot.get(&key) {
                Some(&i) => {
                    let s = if out[i].tail == e.tail { 1.0 } else { -1.0 };
                    out[i].w += s * e.w;
                    scale[i] = scale[i].max(e.w.abs());
                }
                None => {
                    slot.insert(key, out.len());
                    out.push(e);
                    scale.push(e.w.abs());
                }
            }
        }
        let edges = out
            .into_iter()
            .zip(scale)
            .filter(|(e, s)| e.w != 0.0 && e.w.abs() > 1e-14 * s)
            .map(|(e, _)| e)
            .collect();
        Ok(PolyChain { vertices, edges })
    }

    /// Builds a chain from explicit segments, sharing vertices at
    /// identical coordinates.
    pub fn from_segments(segments: &[(Point, Point, f64)]) -> Result<Self> {
        let mut vertices: Vec<Point> = Vec::new();
        let index = |p: &Point, vertices: &mut Vec<Point>| -> usize {
            match vertices.iter().position(|q| q == p) {
                Some(i) => i,
                None => {
                    vertices.push(p.clone());
                    vertices.len() - 1
                }
            }
        };
        let mut edges = Vec::new();
        for (a, b, w) in segments {
            let i = index(a, &mut vertices);
            let j = index(b, &mut vertices);
            edges.push(Edge::new(i, j, *w));
        }
        PolyChain::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.vertices.first().map(Point::dim)
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        self.vertices[e.tail].dist(&self.vertices[e.head])
    }

    /// Vertex degrees in the undirected edge graph.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.tail] += 1;
            deg[e.head] += 1;
        }
        deg
    }

    /// Net inflow at each vertex index.
    pub fn vertex_boundary(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.vertices.len()];
        for e in &self.edges {
            b[e.head] += e.w;
            b[e.tail] -= e.w;
        }
        b
    }

    pub fn boundary(&self) -> AtomicMeasure {
        let b = self.vertex_boundary();
        AtomicMeasure::from_pairs(self.vertices.iter().cloned().zip(b))
            .expect("chain vertices share one dimension")
    }

    pub fn mass(&self) -> f64 {
        self.edges.iter().map(|e| e.w.abs() * self.edge_length(e)).sum()
    }

    pub fn alpha_mass(&self, alpha: f64) -> f64 {
        self.edges.iter().map(|e| e.w.abs().powf(alpha) * self.edge_length(e)).sum()
    }

    /// True when the undirected edge graph has no cycle. Forests qualify.
    pub fn is_tree(&self) -> bool {
        let mut uf = UnionFind::new(self.vertices.len());
        self.edges.iter().all(|e| uf.union(e.tail, e.head))
    }

    /// True when the flow orientation (sign of `w`) contains a directed cycle.
    pub fn has_cycle(&self) -> bool {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            let (u, v) = if e.w > 0.0 { (e.tail, e.head) } else { (e.head, e.tail) };
            out[u].push(v);
            indeg[v] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &v in &out[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        seen < n
    }

    /// Copy with every multiplicity multiplied by `s`.
    pub fn scale_weights(&self, s: f64) -> PolyChain {
        if s == 0.0 {
            return PolyChain { vertices: self.vertices.clone(), edges: Vec::new() };
        }
        PolyChain {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| Edge::new(e.tail, e.head, e.w * s)).collect(),
        }
    }

    /// Copy with `f` applied to every vertex.
    pub fn map_points<F: FnMut(&Point) -> Point>(&self, f: F) -> PolyChain {
        PolyChain { vertices: self.vertices.iter().map(f).collect(), edges: self.edges.clone() }
    }

    /// Copy with every edge oriented along its flow, so all `w > 0`.
    pub fn oriented(&self) -> PolyChain {
        PolyChain {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| if e.w < 0.0 { Edge::new(e.head, e.tail, -e.w) } else { *e })
                .collect(),
        }
    }

    /// Restriction to the closed ball `B_r(c)`, by exact clipping.
    pub fn restrict_to_ball(&self, c: &Point, r: f64) -> PolyChain {
        let mut segs = Vec::new();
        for e in &self.edges {
            let a = &self.vertices[e.tail];
            let b = &self.vertices[e.head];
            if let Some((t0, t1)) = segment_ball_params(a.coords(), b.coords(), c.coords(), r) {
                if t1 > t0 {
                    let p = if t0 == 0.0 { a.clone() } else { a.lerp(b, t0) };
                    let q = if t1 == 1.0 { b.clone() } else { a.lerp(b, t1) };
                    segs.push((p, q, e.w));
                }
            }
        }
        PolyChain::from_segments(&segs).expect("clipped segments inherit valid geometry")
    }

    /// Common refinement of the chain with itself: coincident vertices are
    /// merged, segments are split at vertices lying in their interiors and
    /// at transversal crossings, and overlapping pieces are summed.
    pub fn refined(&self) -> PolyChain {
        let tol = REFINE_TOL * bbox_scale(&[self]);
        let (pool, maps) = refine_chains(&[self], tol);
        chain_from_map(pool, &maps[0])
    }

    /// Sum as currents, after common refinement.
    pub fn add(&self, other: &PolyChain) -> PolyChain {
        let tol = REFINE_TOL * bbox_scale(&[self, other]);
        let (pool, maps) = refine_chains(&[self, other], tol);
        let mut sum = maps[0].clone();
        for (k, w) in &maps[1] {
            *sum.entry(*k).or_insert(0.0) += w;
        }
        chain_from_map(pool, &sum)
    }

    pub fn sub(&self, other: &PolyChain) -> PolyChain {
        self.add(&other.scale_weights(-1.0))
    }

    /// True when segment relative interiors are pairwise disjoint and no
    /// vertex lies in the relative interior of an edge.
    pub fn is_validated(&self) -> bool {
        let tol = GEOM_TOL * bbox_scale(&[self]).max(1.0);
        let used: Vec<usize> = {
            let deg = self.degrees();
            (0..self.vertices.len()).filter(|&v| deg[v] > 0).collect()
        };
        for (i, &u) in used.iter().enumerate() {
            for &v in &used[i + 1..] {
                if self.vertices[u].dist(&self.vertices[v]) <= tol {
                    return false;
                }
            }
        }
        for e in &self.edges {
            let a = self.vertices[e.tail].coords();
            let b = self.vertices[e.head].coords();
            let len = geometry::dist(a, b);
            for &v in &used {
                if v == e.tail || v == e.head {
                    continue;
                }
                let (d, t) = point_segment_distance(self.vertices[v].coords(), a, b);
                if d <= tol && t * len > tol && (1.0 - t) * len > tol {
                    return false;
                }
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for f in &self.edges[i + 1..] {
                let shared = [e.tail, e.head].iter().any(|v| *v == f.tail || *v == f.head);
                if shared {
                    continue;
                }
                let (d, _, _) = segment_segment_closest(
                    self.vertices[e.tail].coords(),
                    self.vertices[e.head].coords(),
                    self.vertices[f.tail].coords(),
                    self.vertices[f.head].coords(),
                );
                if d <= tol {
                    return false;
                }
            }
        }
        true
    }

    /// Splits the flow into simple source-to-sink vertex paths with positive
    /// weights.
    pub fn path_decomposition(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        if self.has_cycle() {
            return Err(Error::Decomposition("chain contains an oriented cycle".into()));
        }
        if !self.is_validated() {
            let r = self.refined();
            if r.mass() < self.mass() * (1.0 - 1e-12) {
                return Err(Error::Decomposition(
                    "opposing multiplicities cancel on a shared segment".into(),
                ));
            }
            return Err(Error::Decomposition("segments overlap or cross; decompose the refined chain".into()));
        }
        let t = self.oriented();
        let n = t.vertices.len();
        let scale = t.edges.iter().fold(0.0f64, |m, e| m.max(e.w));
        let tol = 1e-12 * scale;
        let mut res: Vec<f64> = t.edges.iter().map(|e| e.w).collect();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in t.edges.iter().enumerate() {
            out[e.tail].push(i);
        }
        // supply > 0 at sources, < 0 at sinks
        let mut supply: Vec<f64> = t.vertex_boundary().iter().map(|b| -b).collect();
        let mut paths = Vec::new();
        while let Some(src) = (0..n).find(|&v| supply[v] > tol) {
            let mut path = vec![src];
            let mut used = Vec::new();
            let mut cur = src;
            let mut push = supply[src];
            loop {
                if cur != src && supply[cur] < -tol {
                    break;
                }
                let best = out[cur]
                    .iter()
                    .copied()
                    .filter(|&i| res[i] > tol)
                    .max_by(|&i, &j| res[i].total_cmp(&res[j]).then(j.cmp(&i)));
                let Some(i) = best else {
                    return Err(Error::Decomposition(format!("flow stalls at vertex {cur}")));
                };
                push = push.min(res[i]);
                used.push(i);
                cur = t.edges[i].head;
                path.push(cur);
                if path.len() > n + 1 {
                    return Err(Error::Decomposition("path longer than the vertex count".into()));
                }
            }
            push = push.min(-supply[cur]);
            for &i in &used {
                res[i] -= push;
            }
            supply[src] -= push;
            supply[cur] += push;
            paths.push((path, push));
        }
        if res.iter().any(|r| *r > 1e-9 * scale.max(1.0)) {
            return Err(Error::Decomposition("flow left on edges after all sources drained".into()));
        }
        Ok(paths)
    }

    /// Rounds every multiplicity down to a multiple of `eta = eps / (16 N)`
    /// after orienting edges along their flow. Returns the rounded chain and
    /// `eta`.
    pub fn quantize(&self, eps: f64) -> Result<(PolyChain, f64)> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("quantization step needs eps > 0, got {eps}")));
        }
        let t = self.oriented();
        let big_n = t.edges.len().max(1) as f64;
        let eta = eps / (16.0 * big_n);
        let edges = t
            .edges
            .iter()
            .map(|e| Edge::new(e.tail, e.head, quantize_down(e.w, eta)))
            .collect();
        Ok((PolyChain::new(t.vertices, edges)?, eta))
    }

    /// Density ratio `(sum |w|^alpha * length(T in B_r(x))) / r` at each
    /// radius.
    pub fn monotonicity_profile(&self, x: &Point, radii: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let scale = bbox_scale(&[self]).max(1.0);
        let on_support = self.edges.iter().any(|e| {
            let (d, _) = point_segment_distance(
                x.coords(),
                self.vertices[e.tail].coords(),
                self.vertices[e.head].coords(),
            );
            d <= 1e-9 * scale
        });
        if !on_support {
            return Err(Error::Domain("point is not on the chain support".into()));
        }
        let b = self.boundary();
        let wmax = b.atoms().iter().fold(0.0f64, |m, a| m.max(a.weight.abs()));
        let reach = b
            .atoms()
            .iter()
            .filter(|a| a.weight.abs() > 1e-9 * wmax)
            .map(|a| a.position.dist(x))
            .fold(f64::INFINITY, f64::min);
        if reach <= 1e-9 * scale {
            return Err(Error::Domain("point lies on the boundary support".into()));
        }
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(radii.len());
        for &r in radii {
            if !(r > prev) {
                return Err(Error::Domain("radii must be positive and increasing".into()));
            }
            if r >= reach {
                return Err(Error::Domain(format!("radius {r} reaches the boundary support at {reach}")));
            }
            prev = r;
            let mut s = 0.0;
            for e in &self.edges {
                let a = self.vertices[e.tail].coords();
                let bb = self.vertices[e.head].coords();
                if let Some((t0, t1)) = segment_ball_params(a, bb, x.coords(), r) {
                    s += e.w.abs().powf(alpha) * (t1 - t0) * geometry::dist(a, bb);
                }
            }
            out.push(s / r);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let vertices: Vec<&[f64]> = self.vertices.iter().map(Point::coords).collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| json!({"tail": e.tail, "head": e.head, "w": e.w}))
            .collect();
        json!({"vertices": vertices, "edges": edges})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let vs = v
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected a \"vertices\" array".into()))?;
        let mut vertices = Vec::with_capacity(vs.len());
        for (i, p) in vs.iter().enumerate() {
            let coords = p
                .as_array()
                .ok_or_else(|| Error::Parse(format!("vertices[{i}]: expected a coordinate array")))?
                .iter()
                .map(|c| c.as_f64().ok_or_else(|| Error::Parse(format!("vertices[{i}]: non-numeric coordinate"))))
                .collect::<Result<Vec<f64>>>()?;
            vertices.push(Point::new(coords).map_err(|e| Error::Parse(format!("vertices[{i}]: {e}")))?);
        }
        let es = v
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected an \"edges\" array".into()))?;
        let mut edges = Vec::with_capacity(es.len());
        for (i, e) in es.iter().enumerate() {
            let idx = |k: &str| {
                e.get(k)
                    .and_then(Value::as_u64)
                    .map(|x| x as usize)
                    .ok_or_else(|| Error::Parse(format!("edges[{i}]: missing integer \"{k}\"")))
            };
            let w = e
                .get("w")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("edges[{i}]: missing numeric \"w\"")))?;
            if w == 0.0 {
                return Err(Error::Parse(format!("edges[{i}]: zero multiplicity")));
            }
            edges.push(Edge::new(idx("tail")?, idx("head")?, w));
        }
        PolyChain::new(vertices, edges).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn boundary(t: &PolyChain) -> AtomicMeasure {
    t.boundary()
}

/// True when `boundary(t) = mu_plus - mu_minus` atom by atom within
/// [`KIRCHHOFF_TOL`].
pub fn validate_kirchhoff(t: &PolyChain, mu_minus: &AtomicMeasure, mu_plus: &AtomicMeasure) -> bool {
    let target = match mu_plus.sub(mu_minus) {
        Ok(m) => m,
        Err(_) => return false,
    };
    let pairs = t
        .vertices
        .iter()
        .cloned()
        .zip(t.vertex_boundary())
        .chain(target.atoms().iter().map(|a| (a.position.clone(), -a.weight)));
    match AtomicMeasure::from_pairs(pairs) {
        Ok(diff) => diff.atoms().iter().all(|a| a.weight.abs() <= KIRCHHOFF_TOL),
        Err(_) => false,
    }
}

pub fn mass(t: &PolyChain) -> f64 {
    t.mass()
}

pub fn alpha_mass(t: &PolyChain, alpha: f64) -> f64 {
    t.alpha_mass(alpha)
}

pub fn is_tree(t: &PolyChain) -> bool {
    t.is_tree()
}

pub fn has_cycle(t: &PolyChain) -> bool {
    t.has_cycle()
}

pub fn path_decomposition(t: &PolyChain) -> Result<Vec<(Vec<usize>, f64)>> {
    t.path_decomposition()
}

pub fn quantize_chain(t: &PolyChain, eps: f64) -> Result<(PolyChain, f64)> {
    t.quantize(eps)
}

pub fn monotonicity_profile(t: &PolyChain, x: &Point, radii: &[f64], alpha: f64) -> Result<Vec<f64>> {
    t.monotonicity_profile(x, radii, alpha)
}

/// Upper bound on the flat distance between two chains: the mass of their
/// difference after common refinement.
pub fn flat_upper(t1: &PolyChain, t2: &PolyChain) -> f64 {
    t1.sub(t2).mass()
}

/// True when the two chains have the same support up to vertex merging at
/// `tol` times the bounding-box scale.
pub fn same_support(t1: &PolyChain, t2: &PolyChain, tol: f64) -> bool {
    let tol = tol * bbox_scale(&[t1, t2]).max(f64::MIN_POSITIVE);
    let (_, maps) = refine_chains(&[t1, t2], tol);
    let keys = |m: &BTreeMap<(usize, usize), f64>| -> Vec<(usize, usize)> {
        m.iter().filter(|(_, w)| **w != 0.0).map(|(k, _)| *k).collect()
    };
    keys(&maps[0]) == keys(&maps[1])
}

/// `eta * floor(w / eta)`, snapping values within rounding of a grid point
/// onto it so exact multiples are preserved.
fn quantize_down(w: f64, eta: f64) -> f64 {
    let q = w / eta;
    let r = q.round();
    if (q - r).abs() <= 1e-12 * q.abs().max(1.0) && r * eta <= w * (1.0 + 1e-15) {
        let v = r * eta;
        return if v > w { w } else { v };
    }
    let v = q.floor() * eta;
    if v > w {
        (q.floor() - 1.0) * eta
    } else {
        v
    }
}

/// Parameter interval of `[a, b]` inside the closed ball `B_r(c)`.
pub(crate) fn segment_ball_params(a: &[f64], b: &[f64], c: &[f64], r: f64) -> Option<(f64, f64)> {
    let d = sub(b, a);
    let f = sub(a, c);
    let qa = dot(&d, &d);
    if qa == 0.0 {
        return None;
    }
    // foot of the perpendicular from c, then the half chord
    let tc = -dot(&f, &d) / qa;
    let perp: Vec<f64> = f.iter().zip(&d).map(|(fi, di)| fi + tc * di).collect();
    let h2 = r * r - dot(&perp, &perp);
    if h2 < 0.0 {
        return None;
    }
    let half = (h2 / qa).sqrt();
    let t0 = (tc - half).max(0.0);
    let t1 = (tc + half).min(1.0);
    (t1 > t0).then_some((t0, t1))
}

/// Distance between segments `[p1, q1]` and `[p2, q2]` and the parameters
/// of the closest points.
pub(crate) fn segment_segment_closest(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> (f64, f64, f64) {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a == 0.0 && e == 0.0 {
        return (geometry::dist(p1, p2), 0.0, 0.0);
    }
    if a == 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e == 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1: Vec<f64> = p1.iter().zip(&d1).map(|(x, d)| x + s * d).collect();
    let c2: Vec<f64> = p2.iter().zip(&d2).map(|(x, d)| x + t * d).collect();
    (geometry::dist(&c1, &c2), s, t)
}

fn bbox_scale(chains: &[&PolyChain]) -> f64 {
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for c in chains {
        for p in &c.vertices {
            if lo.is_empty() {
                lo = p.coords().to_vec();
                hi = p.coords().to_vec();
            }
            for (k, x) in p.coords().iter().enumerate() {
                lo[k] = lo[k].min(*x);
                hi[k] = hi[k].max(*x);
            }
        }
    }
    geometry::dist(&lo, &hi)
}

/// Points where two edges of `chains` cross transversally, away from
/// their endpoints.
fn crossing_points(chains: &[&PolyChain], tol: f64) -> Vec<Point> {
    let segs: Vec<(&[f64], &[f64])> = chains
        .iter()
        .flat_map(|c| c.edges.iter().map(|e| (c.vertices[e.tail].coords(), c.vertices[e.head].coords())))
        .collect();
    let mut out = Vec::new();
    for (i, &(p1, q1)) in segs.iter().enumerate() {
        let d1 = sub(q1, p1);
        let l1 = geometry::norm(&d1);
        for &(p2, q2) in &segs[i + 1..] {
            let d2 = sub(q2, p2);
            let l2 = geometry::norm(&d2);
            let b = dot(&d1, &d2);
            // parallel pairs only meet through endpoints
            if l1 == 0.0 || l2 == 0.0 || l1 * l1 * l2 * l2 - b * b <= 1e-12 * l1 * l1 * l2 * l2 {
                continue;
            }
            let (d, s, t) = segment_segment_closest(p1, q1, p2, q2);
            let inner = |u: f64, l: f64| u * l > tol && (1.0 - u) * l > tol;
            if d <= tol && inner(s, l1) && inner(t, l2) {
                let x = p1.iter().zip(&d1).zip(p2.iter().zip(&d2)).map(|((a, u), (c, v))| 0.5 * (a + s * u + c + t * v));
                if let Ok(x) = Point::new(x.collect()) {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Shared vertex pool for several chains and, per chain, its edges split at
/// pool vertices and keyed by ordered pool pair `(u, v)` with `u < v`. The
/// pool is sorted lexicographically.
fn refine_chains(chains: &[&PolyChain], tol: f64) -> (Vec<Point>, Vec<BTreeMap<(usize, usize), f64>>) {
    let crossings = crossing_points(chains, tol);
    let mut pts: Vec<&Point> = Vec::new();
    for c in chains {
        pts.extend(c.vertices.iter());
    }
    pts.extend(crossings.iter());
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].lex_cmp(pts[j]));
    let mut uf = UnionFind::new(pts.len());
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if pts[j].coords()[0] - pts[i].coords()[0] > tol {
                break;
            }
            if pts[i].dist(pts[j]) <= tol {
                uf.union(i, j);
            }
        }
    }
    // representative = lexicographically smallest member
    let mut rep_of_root: HashMap<usize, usize> = HashMap::new();
    for &i in &order {
        rep_of_root.entry(uf.find(i)).or_insert(i);
    }
    let mut reps: Vec<usize> = rep_of_root.values().copied().collect();
    reps.sort_by(|&i, &j| pts[i].lex_cmp(pts[j]).then(i.cmp(&j)));
    let pool: Vec<Point> = reps.iter().map(|&i| pts[i].clone()).collect();
    let pool_index: HashMap<usize, usize> = reps.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut offset = 0;
    let mut maps = Vec::with_capacity(chains.len());
    // pool sorted by first coordinate for range queries
    let xs: Vec<f64> = pool.iter().map(|p| p.coords()[0]).collect();
    for c in chains {
        let local: Vec<usize> = (0..c.vertices.len())
            .map(|vi| pool_index[&rep_of_root[&uf.find(offset + vi)]])
            .collect();
        offset += c.vertices.len();
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in &c.edges {
            let (u, v) = (local[e.tail], local[e.head]);
            if u == v {
                continue;
            }
            let a = pool[u].coords();
            let b = pool[v].coords();
            let len = geometry::dist(a, b);
            let lo = a[0].min(b[0]) - tol;
            let hi = a[0].max(b[0]) + tol;
            let start = xs.partition_point(|&x| x < lo);
            let mut cuts: Vec<(f64, usize)> = Vec::new();
            for (k, &x) in xs.iter().enumerate().skip(start) {
                if x > hi {
                    break;
                }
                if k == u || k == v {
                    continue;
                }
                let (d, t) = point_segment_distance(pool[k].coords(), a, b);
                if d <= tol && t * len > tol && (1.0 - t) * len > tol {
                    cuts.push((t, k));
                }
            }
            cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = u;
            for k in cuts.into_iter().map(|(_, k)| k).chain(std::iter::once(v)) {
                let (key, s) = if prev < k { ((prev, k), 1.0) } else { ((k, prev), -1.0) };
                *map.entry(key).or_insert(0.0) += s * e.w;
                prev = k;
            }
        }
        maps.push(map);
    }
    (pool, maps)
}

fn chain_from_map(pool: Vec<Point>, map: &BTreeMap<(usize, usize), f64>) -> PolyChain {
    let wmax = map.values().fold(0.0f64, |m, w| m.max(w.abs()));
    let kept: Vec<((usize, usize), f64)> = map
        .iter()
        .filter(|(_, w)| w.abs() > 1e-13 * wmax)
        .map(|(k, w)| (*k, *w))
        .collect();
    let mut used = vec![false; pool.len()];
    for ((u, v), _) in &kept {
        used[*u] = true;
        used[*v] = true;
    }
    let mut remap = vec![usize::MAX; pool.len()];
    let mut vertices = Vec::new();
    for (i, p) in pool.into_iter().enumerate() {
        if used[i] {
            remap[i] = vertices.len();
            vertices.push(p);
        }
    }
    let edges = kept
        .into_iter()
        .map(|((u, v), w)| {
            if w > 0.0 {
                Edge::new(remap[u], remap[v], w)
            } else {
                Edge::new(remap[v], remap[u], -w)
            }
        })
        .collect();
    PolyChain { vertices, edges }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    fn v_network(a1: f64, a2: f64) -> PolyChain {
        PolyChain::new(
            vec![p(0.0, 0.0), p(0.0, 2.0), p(1.0, 1.0), p(3.0, 1.0)],
            vec![Edge::new(0, 2, a1), Edge::new(1, 2, a2), Edge::new(2, 3, a1 + a2)],
        )
        .unwrap()
    }

    #[test]
    fn boundary_examples() {
        let t = PolyChain::from_segments(&[(p(0.0, 0.0), p(1.0, 0.0), 2.5)]).unwrap();
        let b = t.boundary();
        assert_eq!(b.weight_at(&p(1.0, 0.0)), 2.5);
        assert_eq!(b.weight_at(&p(0.0, 0.0)), -2.5);

        let tri = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(1.0, 0.0), p(0.0, 1.0), 1.0),
            (p(0.0, 1.0), p(0.0, 0.0), 1.0),
        ])
        .unwrap();
        assert!(tri.boundary().is_empty());

        let b = v_network(1.0, 2.0).boundary();
        assert_eq!(b.weight_at(&p(0.0, 0.0)), -1.0);
        assert_eq!(b.weight_at(&p(0.0, 2.0)), -2.0);
        assert_eq!(b.weight_at(&p(3.0, 1.0)), 3.0);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn kirchhoff_examples() {
        let t = v_network(1.0, 2.0);
        let minus = AtomicMeasure::from_pairs(vec![(p(0.0, 0.0), 1.0), (p(0.0, 2.0), 2.0)]).unwrap();
        let plus = AtomicMeasure::from_pairs(vec![(p(3.0, 1.0), 3.0)]).unwrap();
        assert!(validate_kirchhoff(&t, &minus, &plus));
        let bad = AtomicMeasure::from_pairs(vec![(p(0.0, 0.0), 1.1), (p(0.0, 2.0), 2.0)]).unwrap();
        assert!(!validate_kirchhoff(&t, &bad, &plus));
    }

    #[test]
    fn mass_examples() {
        let t = PolyChain::from_segments(&[(p(0.0, 0.0), p(3.0, 0.0), 2.0)]).unwrap();
        assert_eq!(mass(&t), 6.0);
        assert!((alpha_mass(&t, 0.5) - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(alpha_mass(&t, 1.0), mass(&t));
        assert_eq!(mass(&PolyChain::empty()), 0.0);
        let two = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(1.0, 0.0), p(1.0, 2.0), 1.0),
        ])
        .unwrap();
        assert!((alpha_mass(&two, 0.9) - 3.0).abs() < 1e-15);
        assert!((alpha_mass(&v_network(1.0, 2.0), 0.0) - (2f64.sqrt() * 2.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn parallel_edges_consolidate() {
        let t = PolyChain::new(
            vec![p(0.0, 0.0), p(1.0, 0.0)],
            vec![Edge::new(0, 1, 2.0), Edge::new(1, 0, 0.5), Edge::new(0, 1, -1.5)],
        )
        .unwrap();
        assert!(t.is_empty());
        assert!(PolyChain::new(vec![p(0.0, 0.0)], vec![Edge::new(0, 0, 1.0)]).is_err());
        assert!(PolyChain::new(vec![p(0.0, 0.0)], vec![Edge::new(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn tree_and_cycle_checks() {
        assert!(v_network(1.0, 1.0).is_tree());
        let tri = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(1.0, 0.0), p(0.0, 1.0), 1.0),
            (p(0.0, 1.0), p(0.0, 0.0), 1.0),
        ])
        .unwrap();
        assert!(!tri.is_tree());
        assert!(tri.has_cycle());
        let forest = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(0.0, 1.0), p(1.0, 1.0), 1.0),
        ])
        .unwrap();
        assert!(forest.is_tree());
        assert!(!forest.has_cycle());
        // an undirected triangle whose orientation is acyclic
        let dag = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(1.0, 0.0), p(0.0, 1.0), 1.0),
            (p(0.0, 0.0), p(0.0, 1.0), 1.0),
        ])
        .unwrap();
        assert!(!dag.is_tree());
        assert!(!dag.has_cycle());
    }

    #[test]
    fn decomposition_v_network() {
        let t = v_network(1.0, 2.0);
        let paths = t.path_decomposition().unwrap();
        assert_eq!(paths, vec![(vec![0, 2, 3], 1.0), (vec![1, 2, 3], 2.0)]);
        let single = PolyChain::from_segments(&[(p(0.0, 0.0), p(1.0, 0.0), -3.0)]).unwrap();
        assert_eq!(single.path_decomposition().unwrap(), vec![(vec![1, 0], 3.0)]);
    }

    #[test]
    fn decomposition_rejects_cycles_and_overlaps() {
        let tri = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 1.0),
            (p(1.0, 0.0), p(0.0, 1.0), 1.0),
            (p(0.0, 1.0), p(0.0, 0.0), 1.0),
        ])
        .unwrap();
        assert_eq!(tri.path_decomposition().unwrap_err().kind(), "decomposition");
        let cancel = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(2.0, 0.0), 1.0),
            (p(3.0, 0.0), p(1.0, 0.0), 1.0),
        ])
        .unwrap();
        let e = cancel.path_decomposition().unwrap_err();
        assert!(e.to_string().contains("cancel"));
    }

    #[test]
    fn quantize_examples() {
        let t = PolyChain::from_segments(&[(p(0.0, 0.0), p(1.0, 0.0), 0.9)]).unwrap();
        let (q, eta) = t.quantize(1.6).unwrap();
        assert!((eta - 0.1).abs() < 1e-15);
        assert_eq!(q.edges()[0].w, 0.9);
        let (q, eta) = t.quantize(3.2).unwrap();
        assert!((eta - 0.2).abs() < 1e-15);
        assert!((q.edges()[0].w - 0.8).abs() < 1e-15);
        assert!(q.edges()[0].w <= 0.9);
        let grid = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 0.25),
            (p(1.0, 0.0), p(1.0, 1.0), 0.5),
        ])
        .unwrap();
        let (q, _) = grid.quantize(8.0).unwrap();
        assert_eq!(q, grid);
    }

    #[test]
    fn monotonicity_straight_edge() {
        let t = PolyChain::from_segments(&[(p(-1.0, 0.0), p(1.0, 0.0), 4.0)]).unwrap();
        let prof = t.monotonicity_profile(&p(0.1, 0.0), &[0.1, 0.3, 0.8], 0.5).unwrap();
        for r in prof {
            assert!((r - 4.0).abs() < 1e-12);
        }
        assert!(t.monotonicity_profile(&p(0.0, 0.5), &[0.1], 0.5).is_err());
        assert!(t.monotonicity_profile(&p(0.0, 0.0), &[1.0], 0.5).is_err());
    }

    #[test]
    fn monotonicity_cone_is_constant() {
        let c = p(0.0, 0.0);
        let t = PolyChain::from_segments(&[
            (p(-1.0, 0.0), c.clone(), 1.0),
            (p(0.0, -1.0), c.clone(), 1.0),
            (c.clone(), p(0.8, 0.6), 2.0),
        ])
        .unwrap();
        let prof = t.monotonicity_profile(&c, &[0.1, 0.5, 0.9], 0.5).unwrap();
        for w in prof.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn monotonicity_detour_decreases() {
        let t = PolyChain::from_segments(&[
            (p(-1.0, 0.0), p(0.02, 0.0), 1.0),
            (p(0.02, 0.0), p(0.02, 0.03), 1.0),
            (p(0.02, 0.03), p(0.04, 0.03), 1.0),
            (p(0.04, 0.03), p(0.04, 0.0), 1.0),
            (p(0.04, 0.0), p(1.0, 0.0), 1.0),
        ])
        .unwrap();
        let prof = t.monotonicity_profile(&p(0.0, 0.0), &[0.1, 0.5], 0.5).unwrap();
        assert!((prof[0] - 2.6).abs() < 1e-12 && (prof[1] - 2.12).abs() < 1e-12, "{prof:?}");
    }

    #[test]
    fn refinement_sums_overlaps() {
        let a = PolyChain::from_segments(&[(p(0.0, 0.0), p(2.0, 0.0), 1.0)]).unwrap();
        let b = PolyChain::from_segments(&[(p(1.0, 0.0), p(3.0, 0.0), 1.0)]).unwrap();
        let s = a.add(&b);
        assert_eq!(s.edges().len(), 3);
        assert!((s.mass() - 4.0).abs() < 1e-12);
        assert!((s.alpha_mass(0.5) - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!(s.is_validated());
        assert!(!a.add(&a.scale_weights(1.0)).is_empty());
        assert!(a.sub(&a).is_empty());
        assert!((flat_upper(&a, &b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation_detects_crossings() {
        let x = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 1.0), 1.0),
            (p(0.0, 1.0), p(1.0, 0.0), 1.0),
        ])
        .unwrap();
        assert!(!x.is_validated());
        assert!(v_network(1.0, 1.0).is_validated());
        let t_junction = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(2.0, 0.0), 1.0),
            (p(1.0, 0.0), p(1.0, 1.0), 1.0),
        ])
        .unwrap();
        assert!(!t_junction.is_validated());
        assert!(t_junction.refined().is_validated());
    }

    #[test]
    fn support_comparison_ignores_subdivision() {
        let a = PolyChain::from_segments(&[(p(0.0, 0.0), p(2.0, 0.0), 1.0)]).unwrap();
        let b = PolyChain::from_segments(&[
            (p(0.0, 0.0), p(1.0, 0.0), 3.0),
            (p(1.0, 0.0), p(2.0, 0.0), 1.0),
        ])
        .unwrap();
        assert!(same_support(&a, &b, 1e-9));
        let c = PolyChain::from_segments(&[(p(0.0, 0.0), p(2.0, 0.1), 1.0)]).unwrap();
        assert!(!same_support(&a, &c, 1e-9));
    }

    #[test]
    fn ball_restriction() {
        let t = PolyChain::from_segments(&[(p(0.0, 0.0), p(1.0, 0.0), 1.0)]).unwrap();
        let r = t.restrict_to_ball(&p(0.5, 0.0), 0.25);
        assert!((r.mass() - 0.5).abs() < 1e-15);
        let tn = t.sub(&r.scale_weights(0.5));
        let b = tn.boundary();
        assert_eq!(b.len(), 4);
        assert!((b.weight_at(&p(0.25, 0.0)) - 0.5).abs() < 1e-15);
        assert!((b.weight_at(&p(0.75, 0.0)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let t = v_network(1.0, 2.0);
        let v = t.to_json();
        assert_eq!(PolyChain::from_json(&v).unwrap(), t);
        let bad: Value = serde_json::from_str(r#"{"vertices":[[0,0]],"edges":[{"tail":0,"head":1,"w":1}]}"#).unwrap();
        assert_eq!(PolyChain::from_json(&bad).unwrap_err().kind(), "parse");
    }
}
