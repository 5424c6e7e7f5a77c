//! Independent oracles shared by the integration tests. None of these call
//! into the library's enumeration, flow, flat-norm or placement code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ramulus::{AtomicMeasure, Boundary, Point};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` atoms in the unit square; the first `k` are sources, weights in
/// `[0.5, 2)` rescaled so the total is zero.
pub fn random_boundary(rng: &mut ChaCha8Rng, n: usize) -> Boundary {
    let k = rng.gen_range(1..n);
    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        let w: f64 = rng.gen_range(0.5..2.0);
        pairs.push((Point::xy(rng.gen(), rng.gen()), if j < k { -w } else { w }));
    }
    let neg: f64 = pairs[..k].iter().map(|p| -p.1).sum();
    let pos: f64 = pairs[k..].iter().map(|p| p.1).sum();
    for p in &mut pairs[k..] {
        p.1 *= neg / pos;
    }
    Boundary::new(AtomicMeasure::from_pairs(pairs).unwrap()).unwrap()
}

// ---------------------------------------------------------------------------
// Topologies by Prüfer sequences

/// Canonical form of a labeled tree under permutations of the Steiner
/// labels `n..m`: the lexicographically least sorted edge list.
pub fn canonical_edges(n: usize, m: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let steiner: Vec<usize> = (n..m).collect();
    let mut best: Option<Vec<(usize, usize)>> = None;
    let mut perm = steiner.clone();
    permute(&mut perm, 0, &mut |p| {
        let map = |v: usize| if v < n { v } else { p[v - n] };
        let mut e: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (map(u), map(v));
                (a.min(b), a.max(b))
            })
            .collect();
        e.sort();
        if best.as_ref().is_none_or(|b| e < *b) {
            best = Some(e);
        }
    });
    best.unwrap()
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn prufer_decode(seq: &[usize], m: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    for &s in seq {
        let leaf = (0..m).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Every tree on `n` labeled terminals and `s <= n - 2` unlabeled Steiner
/// vertices of degree at least 3, as canonical edge lists.
pub fn brute_force_topologies(n: usize) -> BTreeSet<Vec<(usize, usize)>> {
    let mut out = BTreeSet::new();
    if n == 2 {
        out.insert(vec![(0, 1)]);
        return out;
    }
    for s in 0..=n - 2 {
        let m = n + s;
        let len = m - 2;
        let mut seq = vec![0usize; len];
        loop {
            let ok = (n..m).all(|v| seq.iter().filter(|&&x| x == v).count() >= 2);
            if ok {
                out.insert(canonical_edges(n, m, &prufer_decode(&seq, m)));
            }
            let mut i = 0;
            while i < len {
                seq[i] += 1;
                if seq[i] < m {
                    break;
                }
                seq[i] = 0;
                i += 1;
            }
            if i == len {
                break;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Flat norm by enumeration of integer transport plans

/// Flat norm of `sum a_i delta_{p_i} - sum b_j delta_{q_j}` for small
/// integer weights, by enumerating every integer plan `g_ij` with row sums
/// at most `a_i` and column sums at most `b_j`. Cost is
/// `sum g_ij |p_i - q_j| + unmatched mass`.
pub fn brute_flat_norm(pos: &[(Point, u32)], neg: &[(Point, u32)]) -> f64 {
    let total: u32 = pos.iter().map(|p| p.1).sum::<u32>() + neg.iter().map(|q| q.1).sum::<u32>();
    let cells: Vec<(usize, usize)> = (0..pos.len()).flat_map(|i| (0..neg.len()).map(move |j| (i, j))).collect();
    let mut row = vec![0u32; pos.len()];
    let mut col = vec![0u32; neg.len()];
    let mut best = f64::INFINITY;
    fn rec(
        c: usize,
        cells: &[(usize, usize)],
        pos: &[(Point, u32)],
        neg: &[(Point, u32)],
        row: &mut [u32],
        col: &mut [u32],
        cost: f64,
        matched: u32,
        total: u32,
        best: &mut f64,
    ) {
        if c == cells.len() {
            let v = cost + (total - 2 * matched) as f64;
            if v < *best {
                *best = v;
            }
            return;
        }
        let (i, j) = cells[c];
        let cap = (pos[i].1 - row[i]).min(neg[j].1 - col[j]);
        let d = pos[i].0.dist(&neg[j].0);
        for g in 0..=cap {
            row[i] += g;
            col[j] += g;
            rec(c + 1, cells, pos, neg, row, col, cost + g as f64 * d, matched + g, total, best);
            row[i] -= g;
            col[j] -= g;
        }
    }
    rec(0, &cells, pos, neg, &mut row, &mut col, 0.0, 0, total, &mut best);
    best
}

// ---------------------------------------------------------------------------
// Grid oracle for the Gilbert problem

/// Leaf-stripping flows written independently of the library, signed from
/// the first endpoint of each edge to the second. Returns `None` when the forest cannot carry the weights.
pub fn tree_flows(m: usize, edges: &[(usize, usize)], weights: &[f64]) -> Option<Vec<f64>> {
    let mut excess = vec![0.0; m];
    excess[..weights.len()].copy_from_slice(weights);
    let mut alive = vec![true; edges.len()];
    let mut flows = vec![0.0; edges.len()];
    loop {
        let mut progressed = false;
        for v in 0..m {
            let inc: Vec<usize> = (0..edges.len()).filter(|&e| alive[e] && (edges[e].0 == v || edges[e].1 == v)).collect();
            if inc.len() == 1 {
                let e = inc[0];
                let other = if edges[e].0 == v { edges[e].1 } else { edges[e].0 };
                // signed from the first endpoint to the second
                flows[e] = if edges[e].0 == v { -excess[v] } else { excess[v] };
                excess[other] += excess[v];
                excess[v] = 0.0;
                alive[e] = false;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let scale: f64 = weights.iter().map(|w| w.abs()).sum();
    excess.iter().all(|x| x.abs() <= 1e-9 * scale).then_some(flows)
}

struct GridProblem<'a> {
    terms: &'a [[f64; 2]],
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GridProblem<'_> {
    fn cost(&self, st: &[[f64; 2]]) -> f64 {
        let at = |v: usize| if v < self.n { self.terms[v] } else { st[v - self.n] };
        self.edges
            .iter()
            .map(|&(u, v, c)| {
                let (a, b) = (at(u), at(v));
                c * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .sum()
    }
}

impl GridProblem<'_> {
    /// Splits a two-Steiner cost into the parts touching each Steiner
    /// vertex, the coefficient of their distance, and the constant rest.
    #[allow(clippy::type_complexity)]
    fn split_pair(&self) -> (impl Fn(&[f64; 2]) -> f64 + '_, impl Fn(&[f64; 2]) -> f64 + '_, f64, f64) {
        let n = self.n;
        let d = |a: [f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let side = move |s: usize| {
            move |g: &[f64; 2]| -> f64 {
                self.edges
                    .iter()
                    .map(|&(u, v, c)| match (u == n + s, v == n + s) {
                        (true, false) if v < n => c * d(self.terms[v], g),
                        (false, true) if u < n => c * d(self.terms[u], g),
                        _ => 0.0,
                    })
                    .sum()
            }
        };
        let c: f64 = self.edges.iter().filter(|&&(u, v, _)| u >= n && v >= n).map(|e| e.2).sum();
        let k0: f64 = self.edges.iter().filter(|&&(u, v, _)| u < n && v < n).map(|&(u, v, c)| c * d(self.terms[u], &self.terms[v])).sum();
        (side(0), side(1), c, k0)
    }
}

/// Grid values `lo + i h` for `i = 0..=steps`.
fn axis(lo: f64, h: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| lo + i as f64 * h).collect()
}

/// Minimum over all topologies of the Gilbert cost with Steiner vertices
/// restricted to a grid of step `h = 1e-2 * diam` over the bounding box,
/// followed by one refinement at step `h / 10` around the best grid point.
/// Supports up to two Steiner vertices in the plane.
pub fn grid_oracle(b: &Boundary, alpha: f64) -> f64 {
    let terms: Vec<[f64; 2]> = b.atoms().iter().map(|a| [a.position.coords()[0], a.position.coords()[1]]).collect();
    let weights: Vec<f64> = b.atoms().iter().map(|a| a.weight).collect();
    let n = terms.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for t in &terms {
        for k in 0..2 {
            lo[k] = lo[k].min(t[k]);
            hi[k] = hi[k].max(t[k]);
        }
    }
    let mut diam: f64 = 0.0;
    for a in &terms {
        for c in &terms {
            diam = diam.max(((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt());
        }
    }
    let h = 1e-2 * diam;
    let xs = axis(lo[0], h, ((hi[0] - lo[0]) / h).ceil() as usize);
    let ys = axis(lo[1], h, ((hi[1] - lo[1]) / h).ceil() as usize);
    let grid: Vec<[f64; 2]> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect();

    let topologies: Vec<Vec<(usize, usize)>> = brute_force_topologies(n).into_iter().collect();
    topologies
        .par_iter()
        .filter_map(|edges| {
            let m = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap() + 1;
            let flows = tree_flows(m.max(n), edges, &weights)?;
            let es: Vec<(usize, usize, f64)> = edges
                .iter()
                .zip(&flows)
                .map(|(&(u, v), f)| (u, v, if *f == 0.0 { 0.0 } else { f.abs().powf(alpha) }))
                .collect();
            let p = GridProblem { terms: &terms, n, edges: es };
            let s = m.saturating_sub(n);
            Some(match s {
                0 => p.cost(&[]),
                1 => {
                    let mut best = (f64::INFINITY, [0.0; 2]);
                    for g in &grid {
                        let c = p.cost(&[*g]);
                        if c < best.0 {
                            best = (c, *g);
                        }
                    }
                    let fine = h / 10.0;
                    for i in -10..=10 {
                        for j in -10..=10 {
                            let g = [best.1[0] + i as f64 * fine, best.1[1] + j as f64 * fine];
                            best.0 = best.0.min(p.cost(&[g]));
                        }
                    }
                    best.0
                }
                2 => {
                    // cost(e, f) = A(e) + B(f) + c |e - f| + const
                    let (a, b, c, k0) = p.split_pair();
                    let av: Vec<f64> = grid.iter().map(|g| a(g)).collect();
                    let bv: Vec<f64> = grid.iter().map(|g| b(g)).collect();
                    let bmin = bv.iter().cloned().fold(f64::INFINITY, f64::min);
                    let mut best = (f64::INFINITY, 0usize, 0usize);
                    for (i, e) in grid.iter().enumerate() {
                        if av[i] + bmin >= best.0 {
                            continue;
                        }
                        for (j, f) in grid.iter().enumerate() {
                            let v = av[i] + bv[j] + c * ((e[0] - f[0]).powi(2) + (e[1] - f[1]).powi(2)).sqrt();
                            if v < best.0 {
                                best = (v, i, j);
                            }
                        }
                    }
                    let (e0, f0) = (grid[best.1], grid[best.2]);
                    let fine = h / 10.0;
                    let offs: Vec<[f64; 2]> = (-10..=10)
                        .flat_map(|i| (-10..=10).map(move |j| [i as f64 * fine, j as f64 * fine]))
                        .collect();
                    let es: Vec<[f64; 2]> = offs.iter().map(|o| [e0[0] + o[0], e0[1] + o[1]]).collect();
                    let fs: Vec<[f64; 2]> = offs.iter().map(|o| [f0[0] + o[0], f0[1] + o[1]]).collect();
                    let bf: Vec<f64> = fs.iter().map(|g| b(g)).collect();
                    let mut v = best.0;
                    for e in &es {
                        let ae = a(e);
                        for (f, bj) in fs.iter().zip(&bf) {
                            v = v.min(ae + bj + c * ((e[0] - f[0]).powi(2) + (e[1] - f[1]).powi(2)).sqrt());
                        }
                    }
                    v + k0
                }
                _ => panic!("grid oracle supports at most two Steiner vertices"),
            })
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}
