//! Successive-shortest-path min-cost flow on real capacities and costs.
//!
//! Sized for the tiny transport problems behind the flat norm: shortest
//! paths come from Bellman-Ford queues, so negative residual costs need no
//! potentials.

use std::collections::VecDeque;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        MinCostFlow { adj: vec![Vec::new(); n], arcs: Vec::new() }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc { to: from, cap: 0.0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently carried by the arc returned from `add_edge`.
    #[allow(dead_code)]
    pub fn flow_on(&self, id: usize) -> f64 {
        self.arcs[id ^ 1].cap
    }

    /// Pushes up to `limit` units from `s` to `t` at minimum cost and
    /// returns `(flow, cost)`. Residual capacities below `eps` are treated
    /// as saturated.
    pub fn run(&mut self, s: usize, t: usize, limit: f64, eps: f64) -> (f64, f64) {
        let n = self.adj.len();
        let mut flow = 0.0;
        let mut cost = 0.0;
        let mut rounds = 0usize;
        while limit - flow > eps {
            rounds += 1;
            if rounds > 100 * (self.arcs.len() + n + 1) {
                break;
            }
            let mut dist = vec![INF; n];
            let mut prev = vec![usize::MAX; n];
            let mut queued = vec![false; n];
            let mut relax = vec![0usize; n];
            let mut queue = VecDeque::new();
            dist[s] = 0.0;
            queue.push_back(s);
            queued[s] = true;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                relax[u] += 1;
                if relax[u] > n + 1 {
                    // Negative cycle from rounding; stop relaxing this node.
                    continue;
                }
                for &a in &self.adj[u] {
                    let arc = &self.arcs[a];
                    if arc.cap <= eps {
                        continue;
                    }
                    let nd = dist[u] + arc.cost;
                    if nd < dist[arc.to] - 1e-15 * (1.0 + nd.abs()) {
                        dist[arc.to] = nd;
                        prev[arc.to] = a;
                        if !queued[arc.to] {
                            queued[arc.to] = true;
                            queue.push_back(arc.to);
                        }
                    }
                }
            }
            if dist[t] == INF {
                break;
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let a = prev[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let a = prev[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                v = self.arcs[a ^ 1].to;
            }
            flow += push;
            cost += push * dist[t];
        }
        (flow, cost)
    }
}
