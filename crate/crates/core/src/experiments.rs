//! Constructive procedures: the dyadic transport, the boundary
//! perturbation around interior points of a network, and empirical
//! stability of solver values under boundary perturbation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::chains::PolyChain;
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::local_branch::{self, FourPointInstance, FourPointLabel};
use crate::measures::{self, AtomicMeasure, Boundary};
use crate::solver::{self, SolveOptions};

/// `c_d = sqrt(d) / 2`, the distance from a cube center to a child center
/// in units of the child side.
pub fn dyadic_constant(d: usize) -> f64 {
    (d as f64).sqrt() / 2.0
}

/// One generation `P_n` of the dyadic transport.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRow {
    pub n: u32,
    pub mass: f64,
    pub alpha_mass: f64,
    /// `c_d 2^(n (d - 1 - d alpha))`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicReport {
    /// `T_m = sum_n P_n`, carrying the normalized measure.
    pub chain: PolyChain,
    pub per_generation: Vec<GenerationRow>,
    pub total_alpha_mass: f64,
    /// `alpha > 1 - 1/d`.
    pub series_converging: bool,
    /// `c_d / (1 - 2^(d - 1 - d alpha))` when the series converges.
    pub total_bound: Option<f64>,
    /// Total mass the input was divided by.
    pub normalization: f64,
    /// Translation applied to move atoms off dyadic faces.
    pub jitter: Vec<f64>,
}

impl DyadicReport {
    /// Per-generation table with header `n,mass,alpha_mass,bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mass,alpha_mass,bound\n");
        for r in &self.per_generation {
            let _ = writeln!(s, "{},{:?},{:?},{:?}", r.n, r.mass, r.alpha_mass, r.bound);
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "chain": self.chain.to_json(),
            "per_generation": self.per_generation.iter().map(|r| serde_json::json!({
                "n": r.n, "mass": r.mass, "alpha_mass": r.alpha_mass, "bound": r.bound,
            })).collect::<Vec<_>>(),
            "total_alpha_mass": self.total_alpha_mass,
            "series_converging": self.series_converging,
            "total_bound": self.total_bound,
            "normalization": self.normalization,
            "jitter": self.jitter,
        })
    }
}

fn on_dyadic_face(x: f64, depth: u32) -> bool {
    let s = x * (1u64 << depth) as f64;
    s == s.floor()
}

/// Per-coordinate translation moving every atom off the dyadic faces up to
/// `depth` while keeping it in the unit cube.
fn dyadic_jitter(points: &[&[f64]], d: usize, depth: u32) -> Result<Vec<f64>> {
    let j = 2f64.powi(-(depth as i32) - 20);
    let mut out = vec![0.0; d];
    for (k, t) in out.iter_mut().enumerate() {
        let fits = |t: f64| {
            points.iter().all(|p| {
                let x = p[k] + t;
                (0.0..=1.0).contains(&x) && !on_dyadic_face(x, depth)
            })
        };
        *t = [0.0, j, -j, 3.0 * j, -3.0 * j]
            .into_iter()
            .find(|&t| fits(t))
            .ok_or_else(|| Error::Domain(format!("atoms on dyadic faces in coordinate {k} cannot be jittered off")))?;
    }
    Ok(out)
}

/// Dyadic transport of the normalized measure from the cube center,
/// generation by generation through the centers of nested dyadic cubes.
pub fn dyadic_transport(mu_plus: &AtomicMeasure, alpha: f64, depth: u32) -> Result<DyadicReport> {
    if !(1..=30).contains(&depth) {
        return Err(Error::Domain(format!("depth must lie in 1..=30, got {depth}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let d = mu_plus.dim().ok_or_else(|| Error::Domain("empty measure".into()))?;
    if mu_plus.atoms().iter().any(|a| a.weight <= 0.0) {
        return Err(Error::Domain("measure must be positive".into()));
    }
    if mu_plus.atoms().iter().any(|a| a.position.coords().iter().any(|x| !(0.0..=1.0).contains(x))) {
        return Err(Error::Domain("support must lie in the unit cube".into()));
    }
    let total = mu_plus.mass();
    let cd = dyadic_constant(d);
    let exponent = d as f64 - 1.0 - d as f64 * alpha;
    let series_converging = alpha > 1.0 - 1.0 / d as f64;
    let bound = |n: u32| cd * 2f64.powf(n as f64 * exponent);
    let total_bound = series_converging.then(|| cd / (1.0 - 2f64.powf(exponent)));
    let center = vec![0.5; d];

    let atoms = mu_plus.atoms();
    if atoms.len() == 1 && atoms[0].position.coords() == center.as_slice() {
        return Ok(DyadicReport {
            chain: PolyChain::empty(),
            per_generation: (1..=depth).map(|n| GenerationRow { n, mass: 0.0, alpha_mass: 0.0, bound: bound(n) }).collect(),
            total_alpha_mass: 0.0,
            series_converging,
            total_bound,
            normalization: total,
            jitter: vec![0.0; d],
        });
    }

    let coords: Vec<&[f64]> = atoms.iter().map(|a| a.position.coords()).collect();
    let jitter = dyadic_jitter(&coords, d, depth)?;
    // mass per dyadic cube, keyed by (level, integer corner)
    let mut cubes: BTreeMap<(u32, Vec<u64>), f64> = BTreeMap::new();
    for a in atoms {
        let x: Vec<f64> = a.position.coords().iter().zip(&jitter).map(|(x, t)| x + t).collect();
        for n in 1..=depth {
            let side = (1u64 << n) as f64;
            let idx: Vec<u64> = x.iter().map(|v| ((v * side).floor() as u64).min((1u64 << n) - 1)).collect();
            *cubes.entry((n, idx)).or_insert(0.0) += a.weight / total;
        }
    }
    let center_of = |n: u32, idx: &[u64]| -> Point {
        let side = (1u64 << n) as f64;
        Point::new(idx.iter().map(|&i| (i as f64 + 0.5) / side).collect()).expect("finite centers")
    };
    let mut rows = Vec::new();
    let mut segs = Vec::new();
    for n in 1..=depth {
        let (mut mass, mut amass) = (0.0, 0.0);
        for ((_, idx), &a) in cubes.range((n, Vec::new())..(n + 1, Vec::new())) {
            let child = center_of(n, idx);
            let parent = if n == 1 {
                Point::new(center.clone()).expect("finite center")
            } else {
                center_of(n - 1, &idx.iter().map(|i| i / 2).collect::<Vec<_>>())
            };
            let len = parent.dist(&child);
            mass += a * len;
            amass += a.powf(alpha) * len;
            segs.push((parent, child, a));
        }
        rows.push(GenerationRow { n, mass, alpha_mass: amass, bound: bound(n) });
    }
    let chain = PolyChain::from_segments(&segs)?;
    let total_alpha_mass = rows.iter().map(|r| r.alpha_mass).sum();
    Ok(DyadicReport {
        chain,
        per_generation: rows,
        total_alpha_mass,
        series_converging,
        total_bound,
        normalization: total,
        jitter,
    })
}

/// Relative slack on the perturbation bounds, absorbing rounding in the
/// equality cases.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// `T - (1/k) sum_i T restricted to B_(1/n)(p_i)`.
    pub t_n: PolyChain,
    pub b_n: Boundary,
    pub mass_b: f64,
    pub mass_b_n: f64,
    /// `flat_norm_0(b_n - b)`.
    pub flat_distance: f64,
    pub mass_bound_ok: bool,
    pub flat_bound_ok: bool,
    pub local_labels: Vec<FourPointLabel>,
    pub h: usize,
    pub k: u32,
    pub n: u32,
}

impl PerturbationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t_n": self.t_n.to_json(),
            "b_n": self.b_n.to_json(),
            "mass_b": self.mass_b,
            "mass_b_n": self.mass_b_n,
            "flat_distance": self.flat_distance,
            "mass_bound_ok": self.mass_bound_ok,
            "flat_bound_ok": self.flat_bound_ok,
            "local_labels": self.local_labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "h": self.h,
            "k": self.k,
            "n": self.n,
        })
    }
}

/// Drops atoms below `rel` times the total mass, which arise from rounding
/// at interior vertices.
pub fn clean_measure(m: &AtomicMeasure, rel: f64) -> AtomicMeasure {
    let cut = rel * m.mass();
    AtomicMeasure::from_pairs(m.atoms().iter().filter(|a| a.weight.abs() > cut).map(|a| (a.position.clone(), a.weight)))
        .expect("subset of a valid measure")
}

/// Vertices of degree at least 3.
fn branch_vertices(t: &PolyChain) -> Vec<Point> {
    t.degrees()
        .iter()
        .enumerate()
        .filter(|(_, &deg)| deg >= 3)
        .map(|(v, _)| t.vertices()[v].clone())
        .collect()
}

/// Lowers the multiplicity of `t` by the factor `1 - 1/k` inside the balls
/// `B_(1/n)(p_i)` and checks the mass and flat-norm bounds on the new
/// boundary. `alpha` is used for the local classification at each point.
pub fn perturb_boundary(t: &PolyChain, points: &[Point], k: u32, n: u32, alpha: f64) -> Result<PerturbationReport> {
    if k < 1 || n < 1 {
        return Err(Error::Domain("k and n must be at least 1".into()));
    }
    let t = t.refined();
    let r = 1.0 / n as f64;
    let b = clean_measure(&t.boundary(), 1e-12);
    let scale = geometry::diameter(t.vertices()).max(f64::MIN_POSITIVE);
    let mut forbidden = b.support();
    forbidden.extend(branch_vertices(&t));
    let mut carriers = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let carrier = t
            .edges()
            .iter()
            .map(|e| {
                let (dist, _) = geometry::point_segment_distance(
                    p.coords(),
                    t.vertices()[e.tail].coords(),
                    t.vertices()[e.head].coords(),
                );
                (dist, *e)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match carrier {
            Some((dist, e)) if dist <= 1e-9 * scale => carriers.push(e),
            _ => return Err(Error::Precondition(format!("point {i} is not on the support"))),
        }
        if forbidden.iter().any(|q| q.dist(p) <= r) {
            return Err(Error::Precondition(format!(
                "ball around point {i} meets the boundary support or a branch point"
            )));
        }
        if points[..i].iter().any(|q| q.dist(p) <= 2.0 * r) {
            return Err(Error::Precondition(format!("ball around point {i} overlaps an earlier ball")));
        }
    }

    let mut removed = PolyChain::empty();
    for p in points {
        removed = removed.add(&t.restrict_to_ball(p, r));
    }
    let t_n = t.sub(&removed.scale_weights(1.0 / k as f64));
    let b_n = Boundary::new(clean_measure(&t_n.boundary(), 1e-12))?;
    let h = points.len();
    let mass_b = b.mass();
    let mass_b_n = b_n.mass();
    let flat_distance = measures::flat_norm_0(&b_n.sub(&b)?);
    let mass_limit = mass_b + h as f64 / k as f64 * mass_b;
    let flat_limit = h as f64 / (n as f64 * k as f64) * mass_b;
    let mass_bound_ok = mass_b_n <= mass_limit * (1.0 + BOUND_SLACK);
    let flat_bound_ok = flat_distance <= flat_limit * (1.0 + BOUND_SLACK);

    let mut local_labels = Vec::with_capacity(h);
    for (p, e) in points.iter().zip(&carriers) {
        let inst = local_instance(&t, e, p, r, k, alpha);
        let label = match inst.and_then(|inst| local_branch::classify_four_point(&inst)) {
            Ok(c) => c.label,
            Err(_) => FourPointLabel::Other("unclassified".into()),
        };
        local_labels.push(label);
    }
    Ok(PerturbationReport {
        t_n,
        b_n,
        mass_b,
        mass_b_n,
        flat_distance,
        mass_bound_ok,
        flat_bound_ok,
        local_labels,
        h,
        k,
        n,
    })
}

/// Four-point picture around `p` on edge `e`: `A` and `D` up and down the
/// flow at distance `8r` (clipped to the edge), `B` and `C` where the flow
/// enters and leaves the ball.
fn local_instance(t: &PolyChain, e: &crate::chains::Edge, p: &Point, r: f64, k: u32, alpha: f64) -> Result<FourPointInstance> {
    let (tail, head) = if e.w > 0.0 { (e.tail, e.head) } else { (e.head, e.tail) };
    let (x0, x1) = (&t.vertices()[tail], &t.vertices()[head]);
    let u = geometry::unit(&geometry::sub(x1.coords(), x0.coords()))
        .ok_or_else(|| Error::Domain("degenerate carrier edge".into()))?;
    let along = |s: f64| Point::new(p.coords().iter().zip(&u).map(|(c, v)| c + s * v).collect());
    let up = p.dist(x0).min(8.0 * r);
    let down = p.dist(x1).min(8.0 * r);
    Ok(FourPointInstance {
        a: along(-up)?,
        b: along(-r)?,
        c: along(r)?,
        d: along(down)?,
        theta: e.w.abs(),
        k,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub index: usize,
    pub flat_distance: f64,
    pub value: f64,
    pub best: PolyChain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub base_value: f64,
    pub base: PolyChain,
    /// Rows in family order.
    pub rows: Vec<StabilityRow>,
    /// `|value - base_value|` is nonincreasing as the flat distance
    /// decreases.
    pub monotone: bool,
    /// `|value - base_value| <= STABILITY_TOL` at the smallest distance.
    pub close_at_limit: bool,
}

/// Tolerance of the convergence check at the smallest flat distance.
pub const STABILITY_TOL: f64 = 1e-4;

impl StabilityReport {
    pub fn converging(&self) -> bool {
        self.monotone && self.close_at_limit
    }

    /// Value-versus-distance table with header
    /// `index,flat_distance,value,abs_diff`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,flat_distance,value,abs_diff\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?}",
                r.index,
                r.flat_distance,
                r.value,
                (r.value - self.base_value).abs()
            );
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "base_value": self.base_value,
            "base": self.base.to_json(),
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "index": r.index,
                "flat_distance": r.flat_distance,
                "value": r.value,
                "best": r.best.to_json(),
            })).collect::<Vec<_>>(),
            "monotone": self.monotone,
            "close_at_limit": self.close_at_limit,
            "converging": self.converging(),
        })
    }
}

pub fn stability_experiment(b: &Boundary, family: &[Boundary], alpha: f64) -> Result<StabilityReport> {
    stability_experiment_with(b, family, alpha, &SolveOptions::default())
}

/// Solves the base and every family member and checks that values approach
/// the base value as the flat distance shrinks.
pub fn stability_experiment_with(
    b: &Boundary,
    family: &[Boundary],
    alpha: f64,
    opts: &SolveOptions,
) -> Result<StabilityReport> {
    let base = solver::solve_gilbert_with(b, alpha, opts)?;
    let rows = family
        .par_iter()
        .enumerate()
        .map(|(index, m)| {
            let r = solver::solve_gilbert_with(m, alpha, opts)?;
            let flat_distance = measures::flat_norm_0(&m.sub(b)?);
            Ok(StabilityRow { index, flat_distance, value: r.value, best: r.best })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<&StabilityRow> = rows.iter().collect();
    order.sort_by(|a, c| c.flat_distance.total_cmp(&a.flat_distance).then(a.index.cmp(&c.index)));
    let diffs: Vec<f64> = order.iter().map(|r| (r.value - base.value).abs()).collect();
    let slack = 1e-9 * (1.0 + base.value);
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0] + slack);
    let close_at_limit = diffs.last().is_none_or(|&d| d <= STABILITY_TOL);
    Ok(StabilityReport { base_value: base.value, base: base.best, rows, monotone, close_at_limit })
}

/// Boundaries `b_n` of [`perturb_boundary`] for each `n` in `ns`.
pub fn perturbation_family(t: &PolyChain, points: &[Point], k: u32, ns: &[u32], alpha: f64) -> Result<Vec<PerturbationReport>> {
    ns.iter().map(|&n| perturb_boundary(t, points, k, n, alpha)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_grid(m: usize) -> AtomicMeasure {
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in 0..m {
                pairs.push((Point::xy((i as f64 + 0.3) / m as f64, (j as f64 + 0.6) / m as f64), 1.0));
            }
        }
        AtomicMeasure::from_pairs(pairs).unwrap()
    }

    #[test]
    fn first_generation_mass() {
        let r = dyadic_transport(&uniform_grid(3), 0.75, 1).unwrap();
        assert!((r.per_generation[0].mass - 2f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn center_delta_is_free() {
        let m = AtomicMeasure::from_pairs([(Point::xy(0.5, 0.5), 2.0)]).unwrap();
        let r = dyadic_transport(&m, 0.5, 4).unwrap();
        assert!(r.chain.is_empty());
        assert_eq!(r.total_alpha_mass, 0.0);
    }

    #[test]
    fn boundary_telescopes() {
        let m = uniform_grid(4);
        let r = dyadic_transport(&m, 0.8, 3).unwrap();
        let bd = r.chain.boundary();
        let center = Point::xy(0.5, 0.5);
        assert!((bd.weight_at(&center) + 1.0).abs() < 1e-12);
        assert!((bd.mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn face_atoms_are_jittered() {
        let m = AtomicMeasure::from_pairs([(Point::xy(0.25, 0.0), 1.0), (Point::xy(1.0, 0.75), 1.0)]).unwrap();
        let r = dyadic_transport(&m, 0.7, 3).unwrap();
        assert!(r.jitter.iter().all(|t| *t != 0.0));
        for g in &r.per_generation {
            assert!((g.mass - dyadic_constant(2) * 2f64.powi(-(g.n as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn single_unit_edge_perturbation() {
        let t = PolyChain::from_segments(&[(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), 1.0)]).unwrap();
        let rep = perturb_boundary(&t, &[Point::xy(0.5, 0.0)], 2, 4, 0.5).unwrap();
        assert!((rep.b_n.weight_at(&Point::xy(0.25, 0.0)) - 0.5).abs() < 1e-12);
        assert!((rep.b_n.weight_at(&Point::xy(0.75, 0.0)) + 0.5).abs() < 1e-12);
        assert!(rep.mass_bound_ok && rep.flat_bound_ok);
        assert_eq!(rep.local_labels, vec![FourPointLabel::Z]);
    }

    #[test]
    fn overlapping_balls_rejected() {
        let t = PolyChain::from_segments(&[(Point::xy(0.0, 0.0), Point::xy(4.0, 0.0), 1.0)]).unwrap();
        let e = perturb_boundary(&t, &[Point::xy(1.5, 0.0), Point::xy(2.0, 0.0)], 2, 2, 0.5).unwrap_err();
        assert_eq!(e.kind(), "precondition");
        let e = perturb_boundary(&t, &[Point::xy(0.2, 0.0)], 2, 2, 0.5).unwrap_err();
        assert_eq!(e.kind(), "precondition");
    }
}
