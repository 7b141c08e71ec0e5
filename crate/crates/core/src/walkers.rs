//! Forward and backward stochastic walker ensembles driven by the drift
//! `b = η + u` of a field history, with diffusion `β² = 1/(2m)`.
//!
//! Every walker draws from its own ChaCha8 stream (key = seed and a domain
//! tag, stream = walker id), so the result does not depend on how walkers are
//! spread over threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, precondition, Error, Result};
use crate::evolve::{Direction, FieldHistory, TimeWindow};
use crate::hydro::{beta2, hydro_decompose, HydroOptions};
use crate::lattice::{Grid, Interval, RealField};
use crate::scalar::Real;
use crate::stats::{histogram_density, ks_one_sample, ks_two_sample, node_bin, node_bin_width, GridCdf};

const DOMAIN_INIT: u64 = 0x494e_4954;
const DOMAIN_FORWARD: u64 = 0x4657_4400;
const DOMAIN_BACKWARD: u64 = 0x4257_4400;

/// Accepted deviation of `∫ρ` from one in [`sample_initial`].
pub const DENSITY_NORM_TOL: f64 = 1e-6;

fn stream(seed: u64, domain: u64, walker: u64, word_pos: u128) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(walker);
    rng.set_word_pos(word_pos);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkerEnsemble<T> {
    positions: Vec<T>,
    seed: u64,
    /// Word position at which each walker's propagation stream resumes.
    stream_offsets: Vec<u128>,
}

impl<T: Real> WalkerEnsemble<T> {
    pub fn new(positions: Vec<T>, seed: u64) -> Self {
        let n = positions.len();
        Self { positions, seed, stream_offsets: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_offsets(&self) -> &[u128] {
        &self.stream_offsets
    }
}

/// Inverse-CDF draw of `n` walkers from a normalised grid density.
pub fn sample_initial<T: Real>(rho: &RealField<T>, n: usize, seed: u64) -> Result<WalkerEnsemble<T>> {
    let mass = rho.integrate(&Interval::whole())?;
    if (mass - T::one()).abs().to_f64_lossy() > DENSITY_NORM_TOL {
        return precondition(format!("initial density integrates to {mass}, expected 1"));
    }
    if rho.values().iter().any(|&v| v < T::zero()) {
        return precondition("initial density has negative values");
    }
    let cum = rho.cumulative();
    let total = cum[cum.len() - 1];
    let g = *rho.grid();
    let positions = (0..n as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(seed, DOMAIN_INIT, id, 0);
            let u = T::lit(rng.random::<f64>()) * total;
            let k = cum.partition_point(|&c| c <= u).clamp(1, cum.len() - 1);
            let (c0, c1) = (cum[k - 1], cum[k]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { T::lit(0.5) };
            g.x(k - 1) + g.dx() * frac
        })
        .collect();
    Ok(WalkerEnsemble::new(positions, seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DriftMode {
    /// `b = η + u` plus noise.
    #[default]
    Nelson,
    /// Noise-free `b = η` (debug only).
    Bohmian,
}

#[derive(Clone, Debug)]
pub struct PropagateOptions<T> {
    /// Record every `stride`-th step (0: only the two ends).
    pub record_stride: usize,
    /// Lab-clock times that must be recorded.
    pub record_times: Vec<T>,
    pub drift: DriftMode,
    /// Stop one step past this lab time instead of crossing the whole
    /// window.
    pub horizon: Option<T>,
}

impl<T: Real> Default for PropagateOptions<T> {
    fn default() -> Self {
        Self { record_stride: 0, record_times: Vec::new(), drift: DriftMode::Nelson, horizon: None }
    }
}

/// Positions and velocity estimates at recorded steps.
///
/// Storage is walker-major: entry `w * n_recorded + r` belongs to walker `w`
/// at recorded step `r`. Velocities are centred differences
/// `(x_{k+1} - x_{k-1}) / 2dt` (one-sided at the ends).
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySet<T> {
    window: TimeWindow<T>,
    direction: Direction,
    recorded: Vec<usize>,
    positions: Vec<T>,
    velocities: Vec<T>,
    n_walkers: usize,
    roughness: T,
    beta2: T,
    continuity_violations: usize,
    final_ensemble: WalkerEnsemble<T>,
}

impl<T: Real> TrajectorySet<T> {
    pub fn window(&self) -> &TimeWindow<T> {
        &self.window
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn n_walkers(&self) -> usize {
        self.n_walkers
    }

    /// Recorded step indices on the set's own clock.
    pub fn recorded_steps(&self) -> &[usize] {
        &self.recorded
    }

    /// Mean of `(Δx - b dt)² / dt` over all walkers and steps; `2β²` in
    /// expectation.
    pub fn roughness(&self) -> T {
        self.roughness
    }

    pub fn beta2(&self) -> T {
        self.beta2
    }

    /// Steps whose increment exceeded `|b| dt + 8 √(2β² dt)`.
    pub fn continuity_violations(&self) -> usize {
        self.continuity_violations
    }

    /// Positions and stream offsets at the last walked step.
    pub fn final_ensemble(&self) -> &WalkerEnsemble<T> {
        &self.final_ensemble
    }

    fn slot(&self, step: usize) -> Result<usize> {
        self.recorded
            .binary_search(&step)
            .map_err(|_| Error::Precondition(format!("step {step} was not recorded")))
    }

    fn column(&self, data: &[T], r: usize) -> Vec<T> {
        let m = self.recorded.len();
        (0..self.n_walkers).map(|w| data[w * m + r]).collect()
    }

    /// Step index, on the set's own clock, of lab time `t`.
    pub fn step_at_time(&self, t: T) -> Result<usize> {
        let k = self.window.step_at(t)?;
        Ok(match self.direction {
            Direction::Forward => k,
            Direction::Backward => self.window.reversed_step(k),
        })
    }

    pub fn positions_at_step(&self, step: usize) -> Result<Vec<T>> {
        Ok(self.column(&self.positions, self.slot(step)?))
    }

    pub fn velocities_at_step(&self, step: usize) -> Result<Vec<T>> {
        Ok(self.column(&self.velocities, self.slot(step)?))
    }

    pub fn positions_at_time(&self, t: T) -> Result<Vec<T>> {
        self.positions_at_step(self.step_at_time(t)?)
    }

    pub fn velocities_at_time(&self, t: T) -> Result<Vec<T>> {
        self.velocities_at_step(self.step_at_time(t)?)
    }

    /// CSV `walker_id,t,x` over recorded steps, keeping every `every`-th one.
    pub fn write_csv<W: Write>(&self, w: W, every: usize) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["walker_id", "t", "x"])?;
        let m = self.recorded.len();
        for (r, &k) in self.recorded.iter().enumerate().step_by(every.max(1)) {
            let t = self.window.time(k).to_string();
            for id in 0..self.n_walkers {
                wtr.write_record([id.to_string(), t.clone(), self.positions[id * m + r].to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Drift `η + u` (or `η`) per frame, zero on masked nodes.
fn drift_table<T: Real>(h: &FieldHistory<T>, mode: DriftMode, n_frames: usize) -> Result<Vec<Vec<T>>> {
    let opts = HydroOptions::with_mass(h.mass());
    (0..n_frames)
        .into_par_iter()
        .map(|k| {
            let hy = hydro_decompose(h.frame(k.min(h.frames().len() - 1)), opts)?;
            Ok(hy
                .eta
                .values()
                .iter()
                .zip(hy.u.values())
                .map(|(&e, &u)| match mode {
                    DriftMode::Nelson => e + u,
                    DriftMode::Bohmian => e,
                })
                .collect())
        })
        .collect()
}

#[inline]
fn interp<T: Real>(g: &Grid<T>, v: &[T], x: T) -> T {
    let s = (x - g.x_min()) / g.dx();
    let i = s.floor().to_usize().unwrap_or(0).min(g.len() - 2);
    let t = s - T::from_usize_lossy(i);
    v[i] + (v[i + 1] - v[i]) * t
}

/// Euler–Maruyama walk of `e` through `h`. `kind` must match the history's
/// direction; a backward walk is run on `time_reverse` of a forward history.
pub fn propagate<T: Real>(e: &WalkerEnsemble<T>, h: &FieldHistory<T>, kind: Direction, opts: &PropagateOptions<T>) -> Result<TrajectorySet<T>> {
    if kind != h.direction() {
        return precondition(format!("{kind:?} walk needs a {kind:?} history, got {:?}", h.direction()));
    }
    let g = *h.grid();
    let w = *h.window();
    if e.positions.iter().any(|&x| x < g.x_min() || x > g.x_max()) {
        return domain("walker starts outside the grid");
    }
    let own_step = |t: T| -> Result<usize> {
        let k = w.step_at(t)?;
        Ok(match kind {
            Direction::Forward => k,
            Direction::Backward => w.reversed_step(k),
        })
    };
    let n_walk = match opts.horizon {
        Some(t) => (own_step(t)? + 1).min(w.n_steps()),
        None => w.n_steps(),
    };
    let mut recorded: Vec<usize> = vec![0, n_walk];
    if opts.record_stride > 0 {
        recorded.extend((0..=n_walk).step_by(opts.record_stride));
    }
    for &t in &opts.record_times {
        let k = own_step(t)?;
        if k > n_walk {
            return precondition(format!("record time {t} lies beyond the horizon"));
        }
        recorded.push(k);
    }
    recorded.sort_unstable();
    recorded.dedup();
    let m = recorded.len();

    let table = if n_walk > 0 { drift_table(h, opts.drift, n_walk)? } else { Vec::new() };
    let b2 = beta2(h.mass());
    let dt = w.dt();
    let noise = match opts.drift {
        DriftMode::Nelson => (T::lit(2.0) * b2 * dt).sqrt(),
        DriftMode::Bohmian => T::zero(),
    };
    let jump_bound = T::lit(8.0) * (T::lit(2.0) * b2 * dt).sqrt();
    let domain_tag = match kind {
        Direction::Forward => DOMAIN_FORWARD,
        Direction::Backward => DOMAIN_BACKWARD,
    };
    let (lo, hi) = (g.x_min(), g.x_max());
    let n = e.len();
    let mut positions = vec![T::zero(); n * m];
    let mut velocities = vec![T::zero(); n * m];

    let per_walker: Vec<(T, usize, u128, T)> = positions
        .par_chunks_mut(m.max(1))
        .zip(velocities.par_chunks_mut(m.max(1)))
        .enumerate()
        .map(|(id, (pos, vel))| -> Result<(T, usize, u128, T)> {
            let mut rng = stream(e.seed, domain_tag, id as u64, e.stream_offsets[id]);
            let mut x = e.positions[id];
            let mut prev = x;
            let mut rough = T::zero();
            let mut jumps = 0usize;
            let mut r = 0usize;
            for k in 0..=n_walk {
                let next = if k < n_walk {
                    let b = interp(&g, &table[k], x);
                    let xi: f64 = rng.sample(StandardNormal);
                    let inc = b * dt + noise * T::lit(xi);
                    let mut y = x + inc;
                    let mut reflected = false;
                    if y < lo {
                        y = lo + lo - y;
                        reflected = true;
                    } else if y > hi {
                        y = hi + hi - y;
                        reflected = true;
                    }
                    if y < lo || y > hi {
                        return Err(Error::StepSize(format!(
                            "walker {id} left the box at step {k} after one reflection; reduce dt"
                        )));
                    }
                    let dev = y - x - b * dt;
                    rough += dev * dev / dt;
                    if !reflected && (y - x).abs() > b.abs() * dt + jump_bound {
                        jumps += 1;
                    }
                    y
                } else {
                    x
                };
                if r < m && recorded[r] == k {
                    pos[r] = x;
                    vel[r] = if n_walk == 0 {
                        T::zero()
                    } else if k == 0 {
                        (next - x) / dt
                    } else if k == n_walk {
                        (x - prev) / dt
                    } else {
                        (next - prev) / (T::lit(2.0) * dt)
                    };
                    r += 1;
                }
                prev = x;
                x = next;
            }
            Ok((rough, jumps, rng.get_word_pos(), prev))
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = T::from_usize_lossy((n * n_walk).max(1));
    let roughness = per_walker.iter().fold(T::zero(), |a, p| a + p.0) / steps;
    let continuity_violations = per_walker.iter().map(|p| p.1).sum();
    let final_ensemble = WalkerEnsemble {
        positions: per_walker.iter().map(|p| p.3).collect(),
        seed: e.seed,
        stream_offsets: per_walker.iter().map(|p| p.2).collect(),
    };
    Ok(TrajectorySet {
        window: w,
        direction: kind,
        recorded,
        positions,
        velocities,
        n_walkers: n,
        roughness,
        beta2: b2,
        continuity_violations,
        final_ensemble,
    })
}

#[derive(Clone, Debug)]
pub struct EnsembleStats<T> {
    /// Histogram density on node-centred bins; trapezoid integral is one.
    pub density: RealField<T>,
    /// Per-bin mean of the walker velocity estimates (zero in empty bins).
    pub mean_velocity: RealField<T>,
    pub counts: Vec<usize>,
    /// Standard error of each bin mean (infinite below two walkers).
    pub std_err: Vec<T>,
}

impl<T: Real> EnsembleStats<T> {
    /// CSV `x,density,mean_velocity`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "density", "mean_velocity"])?;
        let g = self.density.grid();
        for i in 0..g.len() {
            wtr.write_record([
                g.x(i).to_string(),
                self.density.values()[i].to_string(),
                self.mean_velocity.values()[i].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Density and per-bin mean velocity at lab time `t_c` on the given bins.
pub fn ensemble_stats<T: Real>(ts: &TrajectorySet<T>, t_c: T, bins: &Grid<T>) -> Result<EnsembleStats<T>> {
    let x = ts.positions_at_time(t_c)?;
    let v = ts.velocities_at_time(t_c)?;
    let (density, counts) = histogram_density(bins, &x);
    let nb = bins.len();
    let mut sum = vec![T::zero(); nb];
    let mut sum2 = vec![T::zero(); nb];
    for (&xi, &vi) in x.iter().zip(&v) {
        if let Some(i) = node_bin(bins, xi) {
            sum[i] += vi;
            sum2[i] += vi * vi;
        }
    }
    let mut mean = vec![T::zero(); nb];
    let mut se = vec![T::infinity(); nb];
    for i in 0..nb {
        let c = counts[i];
        if c == 0 {
            continue;
        }
        let cn = T::from_usize_lossy(c);
        mean[i] = sum[i] / cn;
        if c >= 2 {
            let var = ((sum2[i] - cn * mean[i] * mean[i]) / (cn - T::one())).max(T::zero());
            se[i] = (var / cn).sqrt();
        }
    }
    Ok(EnsembleStats { density, mean_velocity: RealField::new(*bins, mean)?, counts, std_err: se })
}

/// One-sample KS distance between walker positions at lab time `t_c` and a
/// grid density.
pub fn ks_against_density<T: Real>(ts: &TrajectorySet<T>, t_c: T, rho: &RealField<T>) -> Result<T> {
    Ok(ks_one_sample(&ts.positions_at_time(t_c)?, &GridCdf::new(rho)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReversalReport<T> {
    /// Two-sample KS distance between the two position samples at `t_c`.
    pub ks: T,
    /// `(Σ (v_a + v_b)² w)^(1/2)` over bins occupied in both sets.
    pub velocity_l2: T,
    /// The same sum with `se_a² + se_b²` in place of the squared discrepancy.
    pub velocity_noise_floor: T,
    /// Fraction of compared bins with `|v_a + v_b| ≤ 3 √(se_a² + se_b²)`.
    pub frac_within_3se: T,
    pub bins_compared: usize,
}

/// Bins need this many walkers in each set to enter the velocity comparison.
pub const MIN_BIN_COUNT: usize = 20;

/// Compares two ensembles at the same lab time: positions should agree and
/// mean velocities should be opposite.
pub fn reversal_compare<T: Real>(a: &TrajectorySet<T>, b: &TrajectorySet<T>, t_c: T, bins: &Grid<T>) -> Result<ReversalReport<T>> {
    if a.window != b.window {
        return precondition("trajectory sets cover different windows");
    }
    let ks = ks_two_sample(&a.positions_at_time(t_c)?, &b.positions_at_time(t_c)?);
    let sa = ensemble_stats(a, t_c, bins)?;
    let sb = ensemble_stats(b, t_c, bins)?;
    let (mut l2, mut floor, mut within, mut total) = (T::zero(), T::zero(), 0usize, 0usize);
    for i in 0..bins.len() {
        if sa.counts[i] < MIN_BIN_COUNT || sb.counts[i] < MIN_BIN_COUNT {
            continue;
        }
        let w = node_bin_width(bins, i);
        let d = sa.mean_velocity.values()[i] + sb.mean_velocity.values()[i];
        let var = sa.std_err[i] * sa.std_err[i] + sb.std_err[i] * sb.std_err[i];
        l2 += d * d * w;
        floor += var * w;
        total += 1;
        if d.abs() <= T::lit(3.0) * var.sqrt() {
            within += 1;
        }
    }
    let frac = if total > 0 { T::from_usize_lossy(within) / T::from_usize_lossy(total) } else { T::zero() };
    Ok(ReversalReport { ks, velocity_l2: l2.sqrt(), velocity_noise_floor: floor.sqrt(), frac_within_3se: frac, bins_compared: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve_window, time_reverse, EvolveOptions, Potential};
    use crate::lattice::ComplexField;
    use crate::states;

    fn uniform() -> RealField<f64> {
        RealField::from_fn(Grid::<f64>::new(0.0, 1.0, 101).unwrap(), |_| 1.0).unwrap()
    }

    #[test]
    fn uniform_sampling_mean() {
        let n = 100_000;
        let e = sample_initial(&uniform(), n, 7).unwrap();
        let mean = e.positions().iter().sum::<f64>() / n as f64;
        let se = 1.0 / (12.0 * n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
        assert!(e.positions().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn sampling_is_deterministic_and_handles_empty() {
        let a = sample_initial(&uniform(), 1000, 3).unwrap();
        let b = sample_initial(&uniform(), 1000, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_initial(&uniform(), 1000, 4).unwrap());
        assert!(sample_initial(&uniform(), 0, 3).unwrap().is_empty());
        let bad = RealField::from_fn(*uniform().grid(), |_| 2.0).unwrap();
        assert!(matches!(sample_initial(&bad, 10, 0), Err(Error::Precondition(_))));
    }

    fn flat_history(steps: usize, t0: f64) -> FieldHistory<f64> {
        // uniform real state on a wide box: η = u = 0 away from the walls
        let g = Grid::<f64>::new(-50.0, 50.0, 1001).unwrap();
        let f = ComplexField::from_fn(g, |_| num_complex::Complex::new(0.1, 0.0)).unwrap();
        let frames = vec![f; steps + 1];
        FieldHistory::new(TimeWindow::new(t0, steps).unwrap(), frames, Direction::Forward, 1.0).unwrap()
    }

    #[test]
    fn drift_free_step_variance() {
        let h = flat_history(1, 0.01);
        let n = 100_000;
        let e = WalkerEnsemble::new(vec![0.0; n], 11);
        let ts = propagate(&e, &h, Direction::Forward, &Default::default()).unwrap();
        let x = ts.positions_at_step(1).unwrap();
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        // Var(Δx) = 2β² dt = 0.01; MC s.e. of the variance is √2·0.01/√n
        assert!((var - 0.01).abs() < 4.0 * 2f64.sqrt() * 0.01 / (n as f64).sqrt(), "{var}");
        assert!((ts.roughness() - 1.0).abs() < 0.02);
    }

    #[test]
    fn backward_walk_needs_backward_history() {
        let h = flat_history(2, 0.01);
        let e = WalkerEnsemble::new(vec![0.0; 4], 0);
        assert!(matches!(propagate(&e, &h, Direction::Backward, &Default::default()), Err(Error::Precondition(_))));
        assert!(propagate(&e, &time_reverse(&h), Direction::Backward, &Default::default()).is_ok());
    }

    #[test]
    fn escape_is_step_size_error() {
        let g = Grid::<f64>::new(0.0, 1.0, 64).unwrap();
        let f = ComplexField::from_fn(g, |_| num_complex::Complex::new(1.0, 0.0)).unwrap();
        let h = FieldHistory::new(TimeWindow::new(10.0, 2).unwrap(), vec![f; 3], Direction::Forward, 1.0).unwrap();
        let e = WalkerEnsemble::new(vec![0.5; 200], 1);
        assert!(matches!(propagate(&e, &h, Direction::Forward, &Default::default()), Err(Error::StepSize(_))));
    }

    #[test]
    fn thread_count_does_not_change_paths() {
        let g = Grid::<f64>::new(-10.0, 10.0, 400).unwrap();
        let f = states::gaussian(g, 0.0, 1.0, 1.0).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(0.2, 50).unwrap(), EvolveOptions::default()).unwrap();
        let e = sample_initial(&f.density(), 5000, 42).unwrap();
        let opts = PropagateOptions { record_stride: 10, ..Default::default() };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| propagate(&e, &h, Direction::Forward, &opts).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn histogram_density_integrates_to_one() {
        let g = Grid::<f64>::new(-10.0, 10.0, 400).unwrap();
        let f = states::gaussian(g, 0.0, 1.0, 2.0).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(0.5, 100).unwrap(), EvolveOptions::default()).unwrap();
        let e = sample_initial(&f.density(), 20_000, 5).unwrap();
        let ts = propagate(&e, &h, Direction::Forward, &PropagateOptions { record_times: vec![0.25], ..Default::default() }).unwrap();
        let bins = Grid::<f64>::new(-10.0, 10.0, 101).unwrap();
        let s = ensemble_stats(&ts, 0.25, &bins).unwrap();
        assert!((s.density.integrate(&Interval::whole()).unwrap() - 1.0).abs() < 1e-12);
        assert!(ensemble_stats(&ts, 0.8, &bins).is_err());
        let core = bins.nearest(0.5);
        assert!((s.mean_velocity.values()[core] - 2.0).abs() < 5.0 * s.std_err[core]);
    }

    #[test]
    fn reversal_report_is_symmetric() {
        let g = Grid::<f64>::new(-10.0, 10.0, 400).unwrap();
        let f = states::gaussian(g, 0.0, 1.0, 1.0).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(0.4, 80).unwrap(), EvolveOptions::default()).unwrap();
        let r = time_reverse(&h);
        let opts = PropagateOptions { record_times: vec![0.2], ..Default::default() };
        let fw = propagate(&sample_initial(&h.first().density(), 20_000, 9).unwrap(), &h, Direction::Forward, &opts).unwrap();
        let bw = propagate(&sample_initial(&r.first().density(), 20_000, 9).unwrap(), &r, Direction::Backward, &opts).unwrap();
        let bins = Grid::<f64>::new(-10.0, 10.0, 81).unwrap();
        let ab = reversal_compare(&fw, &bw, 0.2, &bins).unwrap();
        let ba = reversal_compare(&bw, &fw, 0.2, &bins).unwrap();
        assert_eq!(ab, ba);
        assert!(ab.ks < 0.03, "{}", ab.ks);
    }
}
