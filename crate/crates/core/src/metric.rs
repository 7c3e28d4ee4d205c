//! Graph metric, the first-passage metric built from edge travel times
//! t(e) = C_A min mu_e^{-1/2}, and the lambda-good / lambda-very-good
//! geometry used to gate every Gaussian-regime assertion downstream.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::env::ConductanceField;
use crate::error::{RcmError, Result};
use crate::lattice::{Boundary, LatticeSpec};
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::ConductanceLaw;

pub const UNREACHED: u32 = u32::MAX;

/// Single-source first-passage distances d~(origin, .).
#[derive(Clone, Debug)]
pub struct FppField<F: Scalar> {
    pub origin: usize,
    pub c_a: F,
    pub dist: Vec<F>,
}

/// Result of the truncated goodness scan around a site.
#[derive(Clone, Debug)]
pub struct GoodnessReport {
    pub x: usize,
    pub lambda: f64,
    pub eta: f64,
    pub n_max: u32,
    /// Smallest r with (x, r) lambda-good up to n_max, when one exists.
    pub good_radius: Option<u32>,
    /// Smallest R with (x, R) lambda-very-good up to the truncation.
    pub very_good_radius: Option<u32>,
}

/// BFS distances from x0, respecting the boundary tag.
pub fn graph_distance<F: Scalar>(field: &ConductanceField<F>, x0: usize) -> Result<Vec<u32>> {
    field.lattice.check_site(x0)?;
    let adj = field.adjacency();
    let mut dist = vec![UNREACHED; field.n_sites()];
    dist[x0] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(x0);
    while let Some(x) = queue.pop_front() {
        let dx = dist[x];
        for s in adj.slots(x) {
            let y = adj.nbr[s] as usize;
            if dist[y] == UNREACHED {
                dist[y] = dx + 1;
                queue.push_back(y);
            }
        }
    }
    Ok(dist)
}

struct HeapEntry<F>(F, u32);

impl<F: PartialOrd> PartialEq for HeapEntry<F> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl<F: PartialOrd> Eq for HeapEntry<F> {}
impl<F: PartialOrd> PartialOrd for HeapEntry<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: PartialOrd> Ord for HeapEntry<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance; weights are finite so unwrap is safe
        other
            .0
            .partial_cmp(&self.0)
            .unwrap()
            .then(other.1.cmp(&self.1))
    }
}

/// Travel time of an edge.
#[inline]
pub fn edge_time<F: Scalar>(c_a: F, mu: F) -> F {
    c_a.min(mu.sqrt().recip())
}

/// Exact single-source shortest journey times under t(e) = C_A min mu^{-1/2}.
pub fn fpp_distances<F: Scalar>(
    field: &ConductanceField<F>,
    x0: usize,
    c_a: F,
) -> Result<FppField<F>> {
    field.lattice.check_site(x0)?;
    if !(c_a > F::zero()) {
        return Err(RcmError::Parameter("C_A must be > 0".into()));
    }
    let adj = field.adjacency();
    let inf = F::infinity();
    let mut dist = vec![inf; field.n_sites()];
    let mut done = vec![false; field.n_sites()];
    dist[x0] = F::zero();
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry(F::zero(), x0 as u32));
    while let Some(HeapEntry(d, x)) = heap.pop() {
        let x = x as usize;
        if done[x] {
            continue;
        }
        done[x] = true;
        for s in adj.slots(x) {
            let y = adj.nbr[s] as usize;
            if done[y] {
                continue;
            }
            let w = edge_time(c_a, field.mu_edge(adj.edge[s] as usize));
            let nd = d + w;
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(HeapEntry(nd, y as u32));
            }
        }
    }
    Ok(FppField { origin: x0, c_a, dist })
}

/// Largest radius rho such that the graph ball B(x, rho) (strict inequality,
/// so sites at distance <= rho - 1) is inside the box without wrapping.
pub fn max_interior_radius(lattice: &LatticeSpec, x: usize) -> u32 {
    let coords = lattice.coords(x);
    let r = coords
        .iter()
        .zip(&lattice.sides)
        .map(|(&c, &l)| match lattice.boundary {
            // reach l/2 - 1 per axis keeps antipodal ambiguity out
            Boundary::Torus => (l - 1) / 2,
            Boundary::Free => c.min(l - 1 - c),
        })
        .min()
        .unwrap_or(0);
    r as u32 + 1
}

fn check_truncation(lattice: &LatticeSpec, x: usize, n_max: u32) -> Result<()> {
    let cap = max_interior_radius(lattice, x);
    if n_max > cap {
        return Err(RcmError::Truncation(format!(
            "n_max {n_max} exceeds the interior radius {cap} at this site"
        )));
    }
    Ok(())
}

/// Violation scan shared by the goodness tests: for site y, the inclusion
/// B~(x, n/lambda) in B(x, n) fails at integer n iff
/// lambda d~(x,y) < n <= d(x,y). Returns the largest failing n <= n_max
/// over all y, if any.
fn largest_violation<F: Scalar>(
    dg: &[u32],
    df: &[F],
    lambda: f64,
    n_max: u32,
) -> Option<u32> {
    let mut worst: Option<u32> = None;
    for (y, &g) in dg.iter().enumerate() {
        if g == 0 || g == UNREACHED {
            continue;
        }
        let hi = g.min(n_max);
        // smallest integer strictly above lambda d~(x, y)
        let lo = (lambda * df[y].to_f64_lossy()).floor() + 1.0;
        if lo <= hi as f64 {
            worst = Some(worst.map_or(hi, |w| w.max(hi)));
        }
    }
    worst
}

/// Smallest r in [1, n_max] with (x, r) lambda-good up to n_max.
fn good_radius_from(dg: &[u32], df: &[impl Scalar], lambda: f64, n_max: u32) -> Option<u32> {
    match largest_violation(dg, df, lambda, n_max) {
        None => Some(1),
        Some(n) if n < n_max => Some(n + 1),
        Some(_) => None,
    }
}

/// Whether (x, r) is lambda-good for every integer n in [r, n_max]:
/// B~(x, n/lambda) in B(x, n), both balls with strict radii.
pub fn is_lambda_good<F: Scalar>(
    field: &ConductanceField<F>,
    x: usize,
    r: u32,
    lambda: f64,
    n_max: u32,
) -> Result<bool> {
    if r < 1 || lambda < 1.0 {
        return Err(RcmError::Parameter("need r >= 1 and lambda >= 1".into()));
    }
    check_truncation(&field.lattice, x, n_max)?;
    let dg = graph_distance(field, x)?;
    let df = fpp_distances(field, x, F::one())?;
    Ok(good_radius_from(&dg, &df.dist, lambda, n_max).is_some_and(|g| g <= r))
}

/// Truncated scan for the good radius and the very-good radius V_x.
pub fn very_good_radius<F: Scalar>(
    field: &ConductanceField<F>,
    x: usize,
    lambda: f64,
    eta: f64,
    n_max: u32,
) -> Result<GoodnessReport> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(RcmError::Parameter("eta must lie in (0,1)".into()));
    }
    if lambda < 1.0 {
        return Err(RcmError::Parameter("lambda must be >= 1".into()));
    }
    check_truncation(&field.lattice, x, n_max)?;
    let dg_x = graph_distance(field, x)?;
    let df_x = fpp_distances(field, x, F::one())?;
    let good_radius = good_radius_from(&dg_x, &df_x.dist, lambda, n_max);

    // smallest R such that for every R' in [R, n_max] and y in B(x, R'),
    // (y, r) is good for all integer r >= R'^eta; the binding radius for a
    // given y is R' = max(R, d(x,y) + 1)
    let ceil_pow = |n: u32| -> u32 { ((n as f64).powf(eta)).ceil().max(1.0) as u32 };
    let mut required = 1u32;
    let mut feasible = true;
    for y in 0..field.n_sites() {
        let d = dg_x[y];
        if d >= n_max {
            continue;
        }
        let dg_y = graph_distance(field, y)?;
        let df_y = fpp_distances(field, y, F::one())?;
        let g = match good_radius_from(&dg_y, &df_y.dist, lambda, n_max) {
            Some(g) => g,
            None => {
                feasible = false;
                break;
            }
        };
        if g <= ceil_pow(d + 1) {
            continue;
        }
        // need R > d + 1 with ceil(R^eta) >= g
        let mut r_y = ((g as f64).powf(1.0 / eta)).floor() as u32;
        while ceil_pow(r_y) < g {
            r_y += 1;
        }
        while r_y > 1 && ceil_pow(r_y - 1) >= g {
            r_y -= 1;
        }
        required = required.max(r_y.max(d + 2));
    }
    // x itself sits in every B(x, R'), so the scan already forces
    // good_radius <= ceil(R^eta) <= very_good_radius when both exist
    let very_good_radius = if feasible && required <= n_max {
        Some(required)
    } else {
        None
    };
    Ok(GoodnessReport {
        x,
        lambda,
        eta,
        n_max,
        good_radius,
        very_good_radius,
    })
}

/// Monte Carlo estimate over fresh environments of
/// P(B~(0, r) in B_E(0, lambda r)), with its binomial standard error.
pub fn shrinkage_probability(
    law: &ConductanceLaw,
    lattice: &LatticeSpec,
    c_a: f64,
    lambda: f64,
    r: u32,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(RcmError::Parameter("trials must be >= 1".into()));
    }
    let origin = lattice.center();
    let margin = max_interior_radius(lattice, origin) as f64;
    if lambda * r as f64 >= margin {
        return Err(RcmError::Truncation(format!(
            "box cannot contain B_E(0, {:.1}); interior radius {margin}",
            lambda * r as f64
        )));
    }
    let mut hits = 0usize;
    for trial in 0..trials {
        let field: ConductanceField<f64> = ConductanceField::generate(
            lattice.clone(),
            law.clone(),
            Stream::substream(seed, trial as u64).next_u64(),
        )?;
        let fpp = fpp_distances(&field, origin, c_a)?;
        let radius = lambda * r as f64;
        let ok = (0..field.n_sites()).all(|y| {
            fpp.dist[y] >= r as f64 || field.lattice.euclid_distance(origin, y) < radius
        });
        if ok {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Ok((p, se))
}
