//! Exact event-driven simulation of the variable-speed and constant-speed
//! walks, the time change linking them, and discrete-time snapshots.
//!
//! Both walk kinds consume randomness in the same order (one uniform for the
//! hold, one for the jump, per event), so VSRW and CSRW paths driven by the
//! same seed share their jump chain exactly.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::env::ConductanceField;
use crate::error::{RcmError, Result};
use crate::lattice::LatticeSpec;
use crate::rng::Stream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WalkKind {
    Vsrw,
    Csrw,
}

/// One exact trajectory: visited sites plus per-visit holding times. The
/// final hold is recorded untruncated even though it crosses the horizon,
/// so the holds always sum to at least `t_end`.
#[derive(Clone, Debug)]
pub struct WalkPath<F: Scalar> {
    pub kind: WalkKind,
    pub start: usize,
    pub sites: Vec<u32>,
    pub holds: Vec<F>,
    pub t_end: F,
    /// Free boundary renormalises the jump law over in-box neighbours.
    pub reflecting: bool,
}

/// Accumulated clock A_t = integral of mu_{X_s} ds along a path: strictly
/// increasing and piecewise linear in process time.
#[derive(Clone, Debug)]
pub struct ClockModel<F: Scalar> {
    /// Event entry times t_0 = 0 < t_1 < ...
    pub times: Vec<F>,
    /// A at each entry time.
    pub values: Vec<F>,
    /// Slope mu_x on the final piece.
    pub last_rate: F,
}

impl<F: Scalar> ClockModel<F> {
    pub fn at(&self, t: F) -> F {
        match self.times.iter().rposition(|&s| s <= t) {
            Some(i) => {
                let rate = if i + 1 < self.times.len() {
                    (self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i])
                } else {
                    self.last_rate
                };
                self.values[i] + rate * (t - self.times[i])
            }
            None => F::zero(),
        }
    }
}

/// Event stepper shared by all simulators. Draw order per event is fixed:
/// hold uniform first, jump uniform second.
pub struct Stepper<'a, F: Scalar> {
    field: &'a ConductanceField<F>,
    kind: WalkKind,
    pub site: usize,
    pub stream: Stream,
}

impl<'a, F: Scalar> Stepper<'a, F> {
    pub fn new(field: &'a ConductanceField<F>, kind: WalkKind, x0: usize, seed: u64) -> Self {
        Stepper {
            field,
            kind,
            site: x0,
            stream: Stream::new(seed),
        }
    }

    /// Hold at the current site, then the jump target. The walk is left at
    /// the target.
    #[inline]
    pub fn step(&mut self) -> (F, usize) {
        let adj = self.field.adjacency();
        let mu = self.field.mu();
        let mut mu_x = F::zero();
        for s in adj.slots(self.site) {
            mu_x = mu_x + mu[adj.edge[s] as usize];
        }
        let rate = match self.kind {
            WalkKind::Vsrw => mu_x,
            WalkKind::Csrw => F::one(),
        };
        let hold = F::of(self.stream.exp(1.0)) / rate;
        let u = F::of(self.stream.u01()) * mu_x;
        let mut acc = F::zero();
        let mut target = self.site;
        for s in adj.slots(self.site) {
            acc = acc + mu[adj.edge[s] as usize];
            if u < acc {
                target = adj.nbr[s] as usize;
                break;
            }
        }
        if target == self.site {
            // u landed on the rounding sliver past the last slot
            let s = adj.slots(self.site).last().unwrap();
            target = adj.nbr[s] as usize;
        }
        self.site = target;
        (hold, target)
    }
}

/// Simulate an exact path up to the horizon `t_max`.
pub fn simulate<F: Scalar>(
    field: &ConductanceField<F>,
    kind: WalkKind,
    x0: usize,
    t_max: F,
    seed: u64,
) -> Result<WalkPath<F>> {
    field.lattice.check_site(x0)?;
    if !(t_max > F::zero()) {
        return Err(RcmError::Parameter("t_max must be > 0".into()));
    }
    let mut stepper = Stepper::new(field, kind, x0, seed);
    let mut sites = vec![x0 as u32];
    let mut holds = Vec::new();
    let mut t = F::zero();
    loop {
        let (hold, next) = stepper.step();
        holds.push(hold);
        t = t + hold;
        if t >= t_max {
            break; // the drawn jump never happens inside the horizon
        }
        sites.push(next as u32);
    }
    Ok(WalkPath {
        kind,
        start: x0,
        sites,
        holds,
        t_end: t_max,
        reflecting: field.lattice.boundary == crate::lattice::Boundary::Free,
    })
}

impl<F: Scalar> WalkPath<F> {
    pub fn n_jumps(&self) -> usize {
        self.sites.len() - 1
    }

    /// Site occupied at process time t, right-continuous in t.
    pub fn position_at(&self, t: F) -> Result<usize> {
        if !(t >= F::zero()) || t > self.t_end {
            return Err(RcmError::Parameter(format!(
                "t = {t} outside [0, {}]",
                self.t_end
            )));
        }
        let mut acc = F::zero();
        for (i, &h) in self.holds.iter().enumerate() {
            acc = acc + h;
            if t < acc {
                return Ok(self.sites[i] as usize);
            }
        }
        Ok(*self.sites.last().unwrap() as usize)
    }

    /// Positions at times 0, step, 2 step, ..., up to t_end inclusive.
    pub fn snapshot(&self, step: F) -> Result<Vec<usize>> {
        if !(step > F::zero()) {
            return Err(RcmError::Parameter("step must be > 0".into()));
        }
        let mut out = Vec::new();
        let mut mark = F::zero();
        let mut acc = F::zero();
        let mut i = 0usize;
        while mark <= self.t_end {
            while i < self.holds.len() && acc + self.holds[i] <= mark {
                acc = acc + self.holds[i];
                i += 1;
            }
            let idx = i.min(self.sites.len() - 1);
            out.push(self.sites[idx] as usize);
            mark = mark + step;
        }
        Ok(out)
    }

    /// First process time at which the graph distance from `center` reaches
    /// `radius`, or None within the horizon.
    pub fn exit_time(&self, lattice: &LatticeSpec, center: usize, radius: u32) -> Option<F> {
        let mut t = F::zero();
        for (i, &s) in self.sites.iter().enumerate() {
            if lattice.graph_distance(center, s as usize) >= radius as usize {
                return Some(t);
            }
            if i < self.holds.len() {
                t = t + self.holds[i];
            }
        }
        None
    }

    /// Unwrapped displacement (in lattice steps) at each requested time;
    /// times must be sorted and within [0, t_end].
    pub fn displacement_at(&self, lattice: &LatticeSpec, times: &[F]) -> Vec<Vec<i64>> {
        let d = lattice.dim();
        let mut out = Vec::with_capacity(times.len());
        let mut disp = vec![0i64; d];
        let mut acc = F::zero();
        let mut jump = 0usize;
        for &t in times {
            while jump < self.holds.len() && acc + self.holds[jump] <= t {
                acc = acc + self.holds[jump];
                if jump + 1 < self.sites.len() {
                    let inc = lattice
                        .jump_increment(self.sites[jump] as usize, self.sites[jump + 1] as usize);
                    for (k, v) in inc.into_iter().enumerate() {
                        disp[k] += v;
                    }
                }
                jump += 1;
            }
            out.push(disp.clone());
        }
        out
    }

    /// The clock A_t along this path.
    pub fn clock(&self, field: &ConductanceField<F>) -> ClockModel<F> {
        let mut times = Vec::with_capacity(self.sites.len());
        let mut values = Vec::with_capacity(self.sites.len());
        let mut t = F::zero();
        let mut a = F::zero();
        for (i, &s) in self.sites.iter().enumerate() {
            times.push(t);
            values.push(a);
            let rate = field.mu_site(s as usize);
            if i < self.holds.len() {
                t = t + self.holds[i];
                a = a + rate * self.holds[i];
            }
        }
        ClockModel {
            times,
            values,
            last_rate: field.mu_site(*self.sites.last().unwrap() as usize),
        }
    }
}

/// Exact path-level time change: the VSRW trajectory with each hold at site
/// x scaled by mu_x is a CSRW trajectory with the same jump sequence.
pub fn time_change<F: Scalar>(
    path: &WalkPath<F>,
    field: &ConductanceField<F>,
) -> Result<WalkPath<F>> {
    if path.kind != WalkKind::Vsrw {
        return Err(RcmError::Contract("time_change expects a VSRW path".into()));
    }
    let holds: Vec<F> = path
        .sites
        .iter()
        .zip(&path.holds)
        .map(|(&s, &h)| field.mu_site(s as usize) * h)
        .collect();
    let t_end = path.clock(field).at(path.t_end);
    Ok(WalkPath {
        kind: WalkKind::Csrw,
        start: path.start,
        sites: path.sites.clone(),
        holds,
        t_end,
        reflecting: path.reflecting,
    })
}

/// Expected-flip threshold above which a dominant-edge excursion is sampled
/// in aggregate instead of event by event.
const AGGREGATE_FLIPS: f64 = 64.0;

/// Unwrapped displacements at grid times without materialising the path.
///
/// Exact in law except inside aggregated two-site excursions, where the
/// occupation of the pair is reordered (all entry-site time first, then all
/// partner time); grid-time positions inside such an excursion may be off by
/// one lattice step. Aggregation only triggers for the VSRW when a single
/// edge would be crossed back and forth more than AGGREGATE_FLIPS times in
/// expectation, which is what makes heavy-tailed environments simulable.
pub fn simulate_positions<F: Scalar>(
    field: &ConductanceField<F>,
    kind: WalkKind,
    x0: usize,
    times: &[F],
    seed: u64,
) -> Result<Vec<Vec<i64>>> {
    field.lattice.check_site(x0)?;
    let lattice = field.lattice.clone();
    let adj = field.adjacency();
    let mu = field.mu();
    let d = lattice.dim();
    let mut stream = Stream::new(seed);
    let mut out: Vec<Vec<i64>> = Vec::with_capacity(times.len());
    let mut disp = vec![0i64; d];
    let mut site = x0;
    let mut t = F::zero();
    let mut mark = 0usize;

    fn record<F: Scalar>(
        times: &[F],
        mark: &mut usize,
        out: &mut Vec<Vec<i64>>,
        disp: &[i64],
        until: F,
    ) {
        while *mark < times.len() && times[*mark] < until {
            out.push(disp.to_vec());
            *mark += 1;
        }
    }

    let jump_from = |site: usize, u: F, skip: usize| -> usize {
        let mut acc = F::zero();
        let mut target = usize::MAX;
        for s in adj.slots(site) {
            let w = adj.nbr[s] as usize;
            if w == skip {
                continue;
            }
            acc = acc + mu[adj.edge[s] as usize];
            if u < acc {
                target = w;
                break;
            }
        }
        if target == usize::MAX {
            // u landed on the rounding sliver past the last slot
            target = adj
                .slots(site)
                .map(|s| adj.nbr[s] as usize)
                .filter(|&w| w != skip)
                .last()
                .expect("site has a neighbour");
        }
        target
    };

    while mark < times.len() {
        let mut mu_x = F::zero();
        let mut best_slot = adj.offsets[site] as usize;
        let mut best_mu = F::zero();
        for s in adj.slots(site) {
            let m = mu[adj.edge[s] as usize];
            mu_x = mu_x + m;
            if m > best_mu {
                best_mu = m;
                best_slot = s;
            }
        }
        let partner = adj.nbr[best_slot] as usize;
        let p_x = (best_mu / mu_x).to_f64_lossy();
        let mu_y = field.mu_site(partner);
        let p_y = (best_mu / mu_y).to_f64_lossy();
        let escape = 1.0 - p_x * p_y;
        let aggregate = kind == WalkKind::Vsrw
            && escape > 0.0
            && 1.0 / escape > AGGREGATE_FLIPS
            && adj.degree(site) > 1
            && adj.degree(partner) > 1;
        if aggregate {
            // excursion on {site, partner}: exit side, round count, total holds
            let q_x = 1.0 - p_x;
            let exit_at_entry = stream.u01() * escape < q_x;
            let rounds = (stream.u01_open().ln() / (p_x * p_y).ln()).floor().max(0.0);
            let n_entry = rounds + 1.0;
            let n_partner = if exit_at_entry { rounds } else { rounds + 1.0 };
            let t_entry = F::of(gamma_sum(&mut stream, n_entry, mu_x.to_f64_lossy()));
            let t_partner = F::of(gamma_sum(&mut stream, n_partner, mu_y.to_f64_lossy()));
            record(times, &mut mark, &mut out, &disp, t + t_entry);
            if n_partner > 0.0 {
                let inc = lattice.jump_increment(site, partner);
                let mut disp_partner = disp.clone();
                for (k, v) in inc.iter().enumerate() {
                    disp_partner[k] += v;
                }
                record(times, &mut mark, &mut out, &disp_partner, t + t_entry + t_partner);
                if !exit_at_entry {
                    disp = disp_partner;
                }
            }
            t = t + t_entry + t_partner;
            let exit_site = if exit_at_entry { site } else { partner };
            let skip = if exit_at_entry { partner } else { site };
            let mu_exit = field.mu_site(exit_site) - best_mu;
            let target = jump_from(exit_site, F::of(stream.u01()) * mu_exit, skip);
            for (k, v) in lattice.jump_increment(exit_site, target).into_iter().enumerate() {
                disp[k] += v;
            }
            site = target;
        } else {
            let rate = match kind {
                WalkKind::Vsrw => mu_x,
                WalkKind::Csrw => F::one(),
            };
            let hold = F::of(stream.exp(1.0)) / rate;
            record(times, &mut mark, &mut out, &disp, t + hold);
            t = t + hold;
            let target = jump_from(site, F::of(stream.u01()) * mu_x, usize::MAX);
            for (k, v) in lattice.jump_increment(site, target).into_iter().enumerate() {
                disp[k] += v;
            }
            site = target;
        }
    }
    Ok(out)
}

/// Sum of `n` i.i.d. Exp(rate) variables: Gamma(n, 1/rate). n = 0 gives 0.
fn gamma_sum(stream: &mut Stream, n: f64, rate: f64) -> f64 {
    if n < 0.5 {
        return 0.0;
    }
    if n < 16.0 {
        let mut s = 0.0;
        for _ in 0..n as usize {
            s += stream.exp(rate);
        }
        return s;
    }
    let gamma = Gamma::new(n, 1.0 / rate).expect("valid gamma");
    gamma.sample(&mut RngAdapter(stream))
}

struct RngAdapter<'a>(&'a mut Stream);

impl rand::RngCore for RngAdapter<'_> {
    fn next_u32(&mut self) -> u32 {
        (self.0.next_u64() >> 32) as u32
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.0.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ConductanceLaw;
    use crate::lattice::{Boundary, LatticeSpec};

    fn hom2d(side: usize) -> ConductanceField<f64> {
        ConductanceField::homogeneous(LatticeSpec::torus(vec![side, side]).unwrap())
    }

    #[test]
    fn vsrw_mean_hold_quarter_in_2d() {
        let field = hom2d(16);
        let mut total = 0.0;
        let mut count = 0usize;
        for p in 0..200 {
            let path = simulate(&field, WalkKind::Vsrw, 0, 50.0, Stream::substream(1, p).next_u64())
                .unwrap();
            // exclude the final horizon-crossing hold from the mean
            for &h in &path.holds[..path.holds.len() - 1] {
                total += h;
                count += 1;
            }
        }
        let mean = total / count as f64;
        let se = 0.25 / (count as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * se, "mean hold {mean}");
    }

    #[test]
    fn vsrw_msd_is_2d_t() {
        let field = hom2d(64);
        let t = 16.0;
        let n = 3000;
        let mut sum = 0.0;
        for p in 0..n {
            let disp = simulate_positions(
                &field,
                WalkKind::Vsrw,
                0,
                &[t],
                Stream::substream(2, p).next_u64(),
            )
            .unwrap();
            sum += disp[0].iter().map(|&v| (v * v) as f64).sum::<f64>();
        }
        let msd = sum / n as f64;
        let expect = 4.0 * t; // 2 d t with d = 2
        // per-path variance of |X|^2 is ~ 2 d (d+2) t^2 / d ... use a loose 3 SE band
        let se = expect * (2.0 / n as f64).sqrt() * 1.5;
        assert!((msd - expect).abs() < 3.0 * se, "msd {msd} vs {expect}");
    }

    #[test]
    fn csrw_jump_count_is_poisson() {
        let field = ConductanceField::<f64>::generate(
            LatticeSpec::torus(vec![16, 16]).unwrap(),
            ConductanceLaw::Pareto { alpha: 2.0 },
            3,
        )
        .unwrap();
        let t = 40.0;
        let n = 2000;
        let counts: Vec<f64> = (0..n)
            .map(|p| {
                simulate(&field, WalkKind::Csrw, 5, t, Stream::substream(4, p).next_u64())
                    .unwrap()
                    .n_jumps() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - t).abs() < 3.0 * (t / n as f64).sqrt());
        // variance/mean ~ 1 for Poisson
        assert!((var / mean - 1.0).abs() < 0.15, "fano {}", var / mean);
    }

    #[test]
    fn position_at_edges() {
        let field = hom2d(8);
        let path = simulate(&field, WalkKind::Vsrw, 3, 10.0, 7).unwrap();
        assert_eq!(path.position_at(0.0).unwrap(), 3);
        let eps = path.holds[0] * 0.5;
        assert_eq!(path.position_at(eps).unwrap(), 3);
        // at the exact jump time the walk sits at the next site
        assert_eq!(path.position_at(path.holds[0]).unwrap(), path.sites[1] as usize);
        let k = 3.min(path.n_jumps());
        let t: f64 = path.holds[..k].iter().sum();
        assert_eq!(path.position_at(t).unwrap(), path.sites[k] as usize);
        assert!(path.position_at(11.0).is_err());
    }

    #[test]
    fn snapshot_matches_position_at() {
        let field = hom2d(8);
        let path = simulate(&field, WalkKind::Csrw, 0, 5.0, 11).unwrap();
        let snap = path.snapshot(1.0).unwrap();
        assert_eq!(snap.len(), 6);
        for (i, &s) in snap.iter().enumerate() {
            assert_eq!(s, path.position_at(i as f64).unwrap());
        }
        let two = path.snapshot(5.0).unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn exit_time_radius_one_is_first_hold() {
        let field = hom2d(8);
        let path = simulate(&field, WalkKind::Vsrw, 0, 10.0, 13).unwrap();
        let tau = path.exit_time(&field.lattice, 0, 1).unwrap();
        assert_eq!(tau, path.holds[0]);
        assert_eq!(path.exit_time(&field.lattice, 0, 100), None);
    }

    #[test]
    fn time_change_scales_holds_and_keeps_jumps() {
        let field = hom2d(8);
        let vsrw = simulate(&field, WalkKind::Vsrw, 0, 20.0, 17).unwrap();
        let csrw = time_change(&vsrw, &field).unwrap();
        assert_eq!(csrw.kind, WalkKind::Csrw);
        assert_eq!(vsrw.sites, csrw.sites);
        for (h, g) in vsrw.holds.iter().zip(&csrw.holds) {
            assert!((g / h - 4.0).abs() < 1e-12);
        }
        assert!((csrw.t_end - 4.0 * vsrw.t_end).abs() < 1e-9);
        // contract: CSRW input is rejected
        assert!(matches!(
            time_change(&csrw, &field),
            Err(RcmError::Contract(_))
        ));
    }

    #[test]
    fn coupling_same_seed_same_jump_chain() {
        let field = ConductanceField::<f64>::generate(
            LatticeSpec::torus(vec![12, 12]).unwrap(),
            ConductanceLaw::Pareto { alpha: 2.0 },
            5,
        )
        .unwrap();
        let vsrw = simulate(&field, WalkKind::Vsrw, 7, 10.0, 99).unwrap();
        let tc = time_change(&vsrw, &field).unwrap();
        let csrw = simulate(&field, WalkKind::Csrw, 7, tc.t_end, 99).unwrap();
        let k = vsrw.sites.len().min(csrw.sites.len());
        assert!(k > 3);
        assert_eq!(&vsrw.sites[..k], &csrw.sites[..k]);
    }

    #[test]
    fn sum_of_holds_covers_horizon() {
        let field = hom2d(8);
        for seed in 0..20 {
            let path = simulate(&field, WalkKind::Vsrw, 0, 7.5, seed).unwrap();
            let total: f64 = path.holds.iter().sum();
            assert!(total >= path.t_end);
            assert_eq!(path.sites.len(), path.holds.len());
        }
    }

    #[test]
    fn clock_is_increasing_and_linear() {
        let field = ConductanceField::<f64>::generate(
            LatticeSpec::torus(vec![8, 8]).unwrap(),
            ConductanceLaw::Uniform { a: 1.0, b: 5.0 },
            2,
        )
        .unwrap();
        let path = simulate(&field, WalkKind::Vsrw, 0, 10.0, 3).unwrap();
        let clock = path.clock(&field);
        assert_eq!(clock.at(0.0), 0.0);
        let mut prev = 0.0;
        for i in 1..40 {
            let t = i as f64 * 0.25;
            let a = clock.at(t);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn aggregated_positions_match_plain_distribution() {
        // plant a strong edge next to the start and compare grid-time MSD
        // between the aggregated sampler and plain paths
        let lattice = LatticeSpec::torus(vec![16, 16]).unwrap();
        let mut field = ConductanceField::<f64>::homogeneous(lattice.clone());
        let x0 = lattice.site_index(&[8, 8]);
        field.set_edge(lattice.plus_edge(x0, 0).unwrap(), 3000.0);
        let times = [2.0, 8.0];
        let n = 1500;
        let mut msd_fast = [0.0; 2];
        let mut msd_plain = [0.0; 2];
        for p in 0..n {
            let seed = Stream::substream(8, p).next_u64();
            let fast = simulate_positions(&field, WalkKind::Vsrw, x0, &times, seed).unwrap();
            let path = simulate(&field, WalkKind::Vsrw, x0, 8.5, seed ^ 0x5555).unwrap();
            let plain = path.displacement_at(&lattice, &times);
            for k in 0..2 {
                msd_fast[k] += fast[k].iter().map(|&v| (v * v) as f64).sum::<f64>() / n as f64;
                msd_plain[k] += plain[k].iter().map(|&v| (v * v) as f64).sum::<f64>() / n as f64;
            }
        }
        for k in 0..2 {
            let rel = (msd_fast[k] - msd_plain[k]).abs() / msd_plain[k];
            assert!(rel < 0.15, "grid {k}: {} vs {}", msd_fast[k], msd_plain[k]);
        }
    }

    #[test]
    fn reversibility_on_small_torus() {
        // nu_x P^x(X_t = y) = nu_y P^y(X_t = x); nu = 1 for VSRW, mu for CSRW
        let field = ConductanceField::<f64>::generate(
            LatticeSpec::torus(vec![4, 4]).unwrap(),
            ConductanceLaw::Uniform { a: 1.0, b: 3.0 },
            21,
        )
        .unwrap();
        let (x, y) = (0usize, 5usize);
        let t = 2.0;
        let n = 60_000;
        let hit = |from: usize, to: usize, kind, master: u64| -> f64 {
            let mut c = 0usize;
            for p in 0..n {
                let pos = simulate_positions(
                    &field,
                    kind,
                    from,
                    &[t],
                    Stream::substream(master, p as u64).next_u64(),
                )
                .unwrap();
                let target = field.lattice.coords(to);
                let start = field.lattice.coords(from);
                let reached: Vec<i64> = start
                    .iter()
                    .zip(&pos[0])
                    .zip(&field.lattice.sides)
                    .map(|((&s, &d), &l)| (s as i64 + d).rem_euclid(l as i64))
                    .collect();
                if reached == target.iter().map(|&c| c as i64).collect::<Vec<_>>() {
                    c += 1;
                }
            }
            c as f64 / n as f64
        };
        let fwd = hit(x, y, WalkKind::Vsrw, 31);
        let bwd = hit(y, x, WalkKind::Vsrw, 32);
        let se = (fwd * (1.0 - fwd) / n as f64).sqrt() + (bwd * (1.0 - bwd) / n as f64).sqrt();
        assert!((fwd - bwd).abs() < 3.0 * se, "vsrw {fwd} vs {bwd}");
        let fwd_c = hit(x, y, WalkKind::Csrw, 33) * field.mu_site(x);
        let bwd_c = hit(y, x, WalkKind::Csrw, 34) * field.mu_site(y);
        let se_c = se * field.mu_site(x).max(field.mu_site(y)) * 1.5;
        assert!((fwd_c - bwd_c).abs() < 3.0 * se_c, "csrw {fwd_c} vs {bwd_c}");
    }
}
