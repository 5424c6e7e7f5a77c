//! Library results against the independent oracles in `common`.

mod common;

use std::collections::BTreeSet;

use rand::Rng;
use ramulus::measures::flat_norm_0;
use ramulus::topology::enumerate_topologies;
use ramulus::{AtomicMeasure, Point};

use common::*;

fn library_topologies(n: usize) -> BTreeSet<Vec<(usize, usize)>> {
    enumerate_topologies(n)
        .iter()
        .map(|t| canonical_edges(n, t.n_vertices(), t.edges()))
        .collect()
}

#[test]
fn topology_counts_for_three_terminals() {
    assert_eq!(brute_force_topologies(3).len(), 4);
    assert_eq!(enumerate_topologies(3).len(), 4);
}

#[test]
fn enumeration_matches_pruefer_trees() {
    for n in 2..=5 {
        assert_eq!(library_topologies(n), brute_force_topologies(n), "n = {n}");
    }
}

#[test]
fn flat_norm_matches_plan_enumeration() {
    let mut r = rng(3);
    for _ in 0..40 {
        let np = r.gen_range(1..=3);
        let nn = r.gen_range(1..=3);
        let pos: Vec<(Point, u32)> = (0..np)
            .map(|_| (Point::xy(r.gen_range(0.0..3.0), r.gen_range(0.0..3.0)), r.gen_range(1..=3)))
            .collect();
        let neg: Vec<(Point, u32)> = (0..nn)
            .map(|_| (Point::xy(r.gen_range(0.0..3.0), r.gen_range(0.0..3.0)), r.gen_range(1..=3)))
            .collect();
        let m = AtomicMeasure::from_pairs(
            pos.iter().map(|(p, w)| (p.clone(), *w as f64)).chain(neg.iter().map(|(p, w)| (p.clone(), -(*w as f64)))),
        )
        .unwrap();
        let want = brute_flat_norm(&pos, &neg);
        assert!((flat_norm_0(&m) - want).abs() <= 1e-9, "{} vs {want}", flat_norm_0(&m));
    }
}

#[test]
fn tree_flow_oracle_agrees_with_library() {
    use ramulus::topology::edge_flows;
    let mut r = rng(5);
    for n in 3..=5 {
        let b = random_boundary(&mut r, n);
        let w: Vec<f64> = b.atoms().iter().map(|a| a.weight).collect();
        for t in enumerate_topologies(n) {
            let lib = edge_flows(&t, &w).unwrap();
            let ours = tree_flows(t.n_vertices(), t.edges(), &w).unwrap();
            for (a, c) in lib.iter().zip(&ours) {
                assert!((a - c).abs() <= 1e-9, "{a} vs {c}");
            }
        }
    }
}

#[test]
fn grid_oracle_on_a_segment() {
    let b = ramulus::Boundary::new(
        AtomicMeasure::from_pairs(vec![(Point::xy(0.0, 0.0), -1.0), (Point::xy(3.0, 4.0), 1.0)]).unwrap(),
    )
    .unwrap();
    assert!((grid_oracle(&b, 0.5) - 5.0).abs() < 1e-12);
}
