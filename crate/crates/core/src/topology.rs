//! Combinatorial tree topologies over labeled terminals and unlabeled
//! Steiner vertices, and the unique conservative flow on a tree.

use std::collections::BTreeMap;

use crate::chains::UnionFind;
use crate::error::{Error, Result};

/// A forest over vertex ids `0..n_terminals + steiner_count`, terminals
/// first. Steiner vertices have degree at least 3.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    n_terminals: usize,
    steiner_count: usize,
    edges: Vec<(usize, usize)>,
    code: String,
}

impl Topology {
    /// Edges are stored as `(min, max)` in the given order.
    pub fn new(n_terminals: usize, steiner_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = n_terminals + steiner_count;
        if n_terminals < 1 {
            return Err(Error::Domain("a topology needs at least one terminal".into()));
        }
        let mut uf = UnionFind::new(m);
        let mut deg = vec![0usize; m];
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= m || v >= m || u == v {
                return Err(Error::Domain(format!("invalid edge ({u}, {v}) over {m} vertices")));
            }
            if !uf.union(u, v) {
                return Err(Error::Domain("topology edges contain a cycle".into()));
            }
            deg[u] += 1;
            deg[v] += 1;
            norm.push((u.min(v), u.max(v)));
        }
        if let Some(s) = (n_terminals..m).find(|&s| deg[s] < 3) {
            return Err(Error::Domain(format!("Steiner vertex {s} has degree {}", deg[s])));
        }
        let code = canonical_code(n_terminals, m, &norm);
        Ok(Topology { n_terminals, steiner_count, edges: norm, code })
    }

    pub fn n_terminals(&self) -> usize {
        self.n_terminals
    }

    pub fn steiner_count(&self) -> usize {
        self.steiner_count
    }

    pub fn n_vertices(&self) -> usize {
        self.n_terminals + self.steiner_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Isomorphism-invariant code under Steiner relabeling.
    pub fn canonical_code(&self) -> &str {
        &self.code
    }

    pub fn is_connected(&self) -> bool {
        self.edges.len() + 1 == self.n_vertices()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Removes zero-flow edges, splices out Steiner vertices left with
    /// degree 2 and drops isolated ones. Flows are signed along `(min, max)`
    /// and are carried over to the reduced edges.
    pub fn reduce(&self, flows: &[f64]) -> (Topology, Vec<f64>) {
        let m = self.n_vertices();
        let n = self.n_terminals;
        // directed flow map keyed by ordered pair
        let mut live: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut order: Vec<(usize, usize)> = Vec::new();
        for (e, &f) in self.edges.iter().zip(flows) {
            if f != 0.0 {
                live.insert(*e, f);
                order.push(*e);
            }
        }
        let mut alive = vec![true; m];
        loop {
            let mut deg = vec![0usize; m];
            for &(u, v) in &order {
                deg[u] += 1;
                deg[v] += 1;
            }
            let Some(s) = (n..m).find(|&s| alive[s] && deg[s] == 2) else {
                for s in n..m {
                    if deg[s] == 0 {
                        alive[s] = false;
                    }
                }
                break;
            };
            let inc: Vec<(usize, usize)> = order.iter().copied().filter(|&(u, v)| u == s || v == s).collect();
            let (e1, e2) = (inc[0], inc[1]);
            let a = if e1.0 == s { e1.1 } else { e1.0 };
            let b = if e2.0 == s { e2.1 } else { e2.0 };
            // flow a -> s equals flow s -> b
            let phi = if e1.0 == a { live[&e1] } else { -live[&e1] };
            live.remove(&e1);
            live.remove(&e2);
            let pos = order.iter().position(|&e| e == e1).unwrap();
            order.retain(|&e| e != e1 && e != e2);
            let key = (a.min(b), a.max(b));
            let f = if a < b { phi } else { -phi };
            live.insert(key, f);
            order.insert(pos.min(order.len()), key);
            alive[s] = false;
        }
        let mut relabel = vec![usize::MAX; m];
        for (v, slot) in relabel.iter_mut().enumerate().take(n) {
            *slot = v;
        }
        let mut next = n;
        for s in n..m {
            if alive[s] {
                relabel[s] = next;
                next += 1;
            }
        }
        let mut edges = Vec::with_capacity(order.len());
        let mut out = Vec::with_capacity(order.len());
        for (u, v) in order {
            let f = live[&(u, v)];
            let (ru, rv) = (relabel[u], relabel[v]);
            edges.push((ru.min(rv), ru.max(rv)));
            out.push(if ru < rv { f } else { -f });
        }
        let t = Topology::new(n, next - n, edges).expect("reduction preserves the forest invariants");
        (t, out)
    }

    /// Merges the endpoints of each listed edge (by index). Each merged
    /// group may contain at most one terminal; a group with a terminal takes
    /// its id. Returns `None` when two terminals would merge.
    pub fn contract(&self, edge_ids: &[usize]) -> Option<Topology> {
        let m = self.n_vertices();
        let n = self.n_terminals;
        let mut uf = UnionFind::new(m);
        for &i in edge_ids {
            let (u, v) = self.edges[i];
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru < n && rv < n {
                return None;
            }
            uf.union(ru, rv);
        }
        // union keeps the smaller root, so terminal groups are rooted at their terminal
        let mut relabel = vec![usize::MAX; m];
        let mut next = n;
        for v in 0..m {
            let r = uf.find(v);
            if r < n {
                relabel[v] = r;
            } else if relabel[r] == usize::MAX {
                relabel[r] = next;
                relabel[v] = next;
                next += 1;
            } else {
                relabel[v] = relabel[r];
            }
        }
        let skip: std::collections::HashSet<usize> = edge_ids.iter().copied().collect();
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, &(u, v))| (relabel[u], relabel[v]))
            .collect();
        Topology::new(n, next - n, edges).ok()
    }
}

/// AHU-style code of a forest: each component rooted at its smallest
/// terminal, terminals written by index and Steiner vertices as `S`.
pub fn canonical_code(n_terminals: usize, n_vertices: usize, edges: &[(usize, usize)]) -> String {
    let mut adj = vec![Vec::new(); n_vertices];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    fn encode(v: usize, parent: usize, adj: &[Vec<usize>], n: usize, seen: &mut [bool]) -> String {
        seen[v] = true;
        let mut kids: Vec<String> = adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .copied()
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|w| (!seen[w]).then(|| encode(w, v, adj, n, seen)))
            .collect();
        kids.sort();
        let label = if v < n { v.to_string() } else { "S".to_string() };
        if kids.is_empty() {
            label
        } else {
            format!("{label}({})", kids.join(","))
        }
    }
    let mut seen = vec![false; n_vertices];
    let mut parts = Vec::new();
    for t in 0..n_terminals.min(n_vertices) {
        if !seen[t] {
            parts.push(encode(t, usize::MAX, &adj, n_terminals, &mut seen));
        }
    }
    for v in 0..n_vertices {
        if !seen[v] {
            parts.push(encode(v, usize::MAX, &adj, n_terminals, &mut seen));
        }
    }
    parts.sort();
    parts.join("|")
}

/// Full Steiner topologies: `n - 2` Steiner vertices of degree 3 and all
/// terminals leaves. There are `(2n - 5)!!` of them for `n >= 3`.
pub fn enumerate_full_topologies(n_terminals: usize) -> Vec<Topology> {
    let n = n_terminals;
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![Topology::new(2, 0, vec![(0, 1)]).unwrap()];
    }
    let mut trees: Vec<Vec<(usize, usize)>> = vec![vec![(0, n), (1, n), (2, n)]];
    for k in 3..n {
        let s = n + k - 2;
        let mut next = Vec::with_capacity(trees.len() * (2 * k - 3));
        for t in &trees {
            for i in 0..t.len() {
                let (u, v) = t[i];
                let mut e = t.clone();
                e[i] = (u, s);
                e.push((v, s));
                e.push((k, s));
                next.push(e);
            }
        }
        trees = next;
    }
    let mut out: Vec<Topology> = trees
        .into_iter()
        .map(|e| Topology::new(n, n - 2, e).unwrap())
        .collect();
    out.sort_by(|a, b| a.code.cmp(&b.code));
    out.dedup_by(|a, b| a.code == b.code);
    out
}

/// All trees over `n_terminals` labeled terminals and `s <= n - 2`
/// unlabeled Steiner vertices of degree at least 3, sorted by code. Every
/// such tree is an edge contraction of a full topology.
pub fn enumerate_topologies(n_terminals: usize) -> Vec<Topology> {
    let mut found: BTreeMap<String, Topology> = BTreeMap::new();
    for full in enumerate_full_topologies(n_terminals) {
        let e = full.edges.len();
        for mask in 0u64..(1u64 << e) {
            let ids: Vec<usize> = (0..e).filter(|i| mask >> i & 1 == 1).collect();
            if let Some(t) = full.contract(&ids) {
                found.entry(t.code.clone()).or_insert(t);
            }
        }
    }
    found.into_values().collect()
}

/// The unique flow on a forest with the given per-terminal boundary
/// weights, by leaf stripping. Flows are signed along `(min, max)`; values
/// cancelling to rounding are returned as exactly 0.
pub fn edge_flows(t: &Topology, weights: &[f64]) -> Result<Vec<f64>> {
    let n = t.n_terminals;
    if weights.len() != n {
        return Err(Error::Domain(format!("{} weights for {} terminals", weights.len(), n)));
    }
    let scale: f64 = weights.iter().map(|w| w.abs()).sum();
    let tol = 1e-12 * scale;
    let total: f64 = weights.iter().sum();
    if total.abs() > tol {
        return Err(Error::Domain(format!("boundary weights sum to {total}, not 0")));
    }
    let m = t.n_vertices();
    let mut excess = vec![0.0; m];
    excess[..n].copy_from_slice(weights);
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, &(u, v)) in t.edges.iter().enumerate() {
        inc[u].push(i);
        inc[v].push(i);
    }
    let mut deg: Vec<usize> = inc.iter().map(Vec::len).collect();
    let mut done = vec![false; t.edges.len()];
    let mut flows = vec![0.0; t.edges.len()];
    let mut stack: Vec<usize> = (0..m).rev().filter(|&v| deg[v] == 1).collect();
    while let Some(v) = stack.pop() {
        if deg[v] != 1 {
            continue;
        }
        let i = *inc[v].iter().find(|&&i| !done[i]).unwrap();
        done[i] = true;
        let (a, b) = t.edges[i];
        let p = if a == v { b } else { a };
        // flow v -> p must be -excess[v]
        let f = -excess[v];
        flows[i] = if v < p { f } else { -f };
        excess[p] += excess[v];
        excess[v] = 0.0;
        deg[v] -= 1;
        deg[p] -= 1;
        if deg[p] == 1 {
            stack.push(p);
        }
    }
    if let Some(v) = (0..m).find(|&v| excess[v].abs() > 1e-9 * scale.max(1e-300)) {
        return Err(Error::Domain(format!(
            "component containing vertex {v} is unbalanced by {}",
            excess[v]
        )));
    }
    for f in &mut flows {
        if f.abs() <= tol {
            *f = 0.0;
        }
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_topologies(2).len(), 1);
        assert_eq!(enumerate_topologies(3).len(), 4);
        assert_eq!(enumerate_full_topologies(3).len(), 1);
        assert_eq!(enumerate_full_topologies(4).len(), 3);
        assert_eq!(enumerate_full_topologies(5).len(), 15);
        assert_eq!(enumerate_full_topologies(6).len(), 105);
    }

    #[test]
    fn output_sorted_and_valid() {
        let ts = enumerate_topologies(4);
        for w in ts.windows(2) {
            assert!(w[0].canonical_code() < w[1].canonical_code());
        }
        for t in &ts {
            assert!(t.is_connected());
            assert!(t.steiner_count() <= 2);
        }
    }

    #[test]
    fn code_ignores_steiner_labels() {
        let a = Topology::new(4, 2, vec![(0, 4), (1, 4), (4, 5), (2, 5), (3, 5)]).unwrap();
        let b = Topology::new(4, 2, vec![(0, 5), (1, 5), (4, 5), (2, 4), (3, 4)]).unwrap();
        let c = Topology::new(4, 2, vec![(0, 4), (2, 4), (4, 5), (1, 5), (3, 5)]).unwrap();
        assert_eq!(a.canonical_code(), b.canonical_code());
        assert_ne!(a.canonical_code(), c.canonical_code());
    }

    #[test]
    fn invalid_topologies_rejected() {
        assert!(Topology::new(3, 1, vec![(0, 3), (1, 3)]).is_err());
        assert!(Topology::new(3, 0, vec![(0, 1), (1, 2), (2, 0)]).is_err());
    }

    #[test]
    fn flows_v_topology() {
        let t = Topology::new(3, 1, vec![(0, 3), (1, 3), (2, 3)]).unwrap();
        let f = edge_flows(&t, &[-1.5, -2.0, 3.5]).unwrap();
        assert_eq!(f, vec![1.5, 2.0, -3.5]);
    }

    #[test]
    fn flows_path() {
        let t = Topology::new(3, 0, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(edge_flows(&t, &[-1.0, 0.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn flows_h_topology() {
        // 0,1 hang off Steiner 4; 2,3 hang off Steiner 5; bridge 4-5
        let t = Topology::new(4, 2, vec![(0, 4), (1, 4), (4, 5), (2, 5), (3, 5)]).unwrap();
        let f = edge_flows(&t, &[-1.0, -2.0, 2.0, 1.0]).unwrap();
        assert_eq!(f, vec![1.0, 2.0, 3.0, -2.0, -1.0]);
        let t = Topology::new(4, 2, vec![(0, 4), (2, 4), (4, 5), (1, 5), (3, 5)]).unwrap();
        let f = edge_flows(&t, &[-1.0, -2.0, 2.0, 1.0]).unwrap();
        assert_eq!(f, vec![1.0, -2.0, -1.0, 2.0, -1.0]);
    }

    #[test]
    fn flows_reject_unbalanced() {
        let t = Topology::new(2, 0, vec![(0, 1)]).unwrap();
        assert_eq!(edge_flows(&t, &[1.0, 0.5]).unwrap_err().kind(), "domain");
    }

    #[test]
    fn reduce_drops_zero_edges() {
        // boundary pairs 0->1 and 2->3 on the H topology: bridge carries 0
        let t = Topology::new(4, 2, vec![(0, 4), (1, 4), (4, 5), (2, 5), (3, 5)]).unwrap();
        let f = edge_flows(&t, &[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(f[2], 0.0);
        let (r, g) = t.reduce(&f);
        assert_eq!(r.steiner_count(), 0);
        assert_eq!(r.edges(), &[(0, 1), (2, 3)]);
        assert_eq!(g, vec![1.0, 1.0]);
        assert_eq!(r.canonical_code(), "0(1)|2(3)");
    }

    #[test]
    fn contraction_merges_steiner_into_terminal() {
        let t = Topology::new(3, 1, vec![(0, 3), (1, 3), (2, 3)]).unwrap();
        let c = t.contract(&[1]).unwrap();
        assert_eq!(c.steiner_count(), 0);
        assert_eq!(c.canonical_code(), "0(1(2))");
        assert!(t.contract(&[0, 1]).is_none());
    }
}
