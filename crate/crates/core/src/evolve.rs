//! Crank–Nicolson evolution of the complex diffusion equation, time reversal
//! of field histories, and the implicit heat equation used as the
//! irreversible counterpart.

use std::io::Write;

use crate::error::{domain, precondition, Error, Result};
use crate::lattice::{ComplexField, Grid, RealField};
use crate::scalar::{cplx, czero, Cplx, Real};
use crate::tridiag::{CyclicTridiag, Tridiag};

/// Tolerance on `‖f0‖² - 1` accepted by [`evolve_window`].
pub const NORM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Wavefunction pinned to zero at both end nodes.
    #[default]
    Dirichlet,
    /// Ring of `n` nodes with period `n * dx`.
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// `[0, t0]` split into `n_steps` equal steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow<T> {
    t0: T,
    n_steps: usize,
}

impl<T: Real> TimeWindow<T> {
    pub fn new(t0: T, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t0 > T::zero()) {
            return domain(format!("window length must be positive and finite, got {t0}"));
        }
        Ok(Self { t0, n_steps })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Step length; zero for an empty window.
    pub fn dt(&self) -> T {
        if self.n_steps == 0 {
            T::zero()
        } else {
            self.t0 / T::from_usize_lossy(self.n_steps)
        }
    }

    pub fn time(&self, k: usize) -> T {
        if self.n_steps == 0 {
            return T::zero();
        }
        self.t0 * T::from_usize_lossy(k) / T::from_usize_lossy(self.n_steps)
    }

    /// Step index under the reversed clock `t' = t0 - t`.
    pub fn reversed_step(&self, k: usize) -> usize {
        self.n_steps - k
    }

    /// Nearest step index to `t`; `t` must lie in the window.
    pub fn step_at(&self, t: T) -> Result<usize> {
        let slack = T::lit(1e-9) * self.t0;
        if !(t >= -slack && t <= self.t0 + slack) {
            return domain(format!("time {t} outside window [0, {}]", self.t0));
        }
        if self.n_steps == 0 {
            return Ok(0);
        }
        let k = (t / self.dt()).round().to_usize().unwrap_or(0);
        Ok(k.min(self.n_steps))
    }
}

/// Static potential on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential<T> {
    field: RealField<T>,
}

impl<T: Real> Potential<T> {
    pub fn from_field(field: RealField<T>) -> Self {
        Self { field }
    }

    /// `V ≡ 0`; with Dirichlet walls on `[0, L]` this is the infinite well.
    pub fn free(grid: Grid<T>) -> Self {
        Self { field: RealField::zeros(grid) }
    }

    /// `V = m ω² x² / 2`.
    pub fn harmonic(grid: Grid<T>, omega: T, mass: T) -> Result<Self> {
        let c = T::lit(0.5) * mass * omega * omega;
        Ok(Self { field: RealField::from_fn(grid, |x| c * x * x)? })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.field.grid()
    }

    pub fn values(&self) -> &[T] {
        self.field.values()
    }

    pub fn field(&self) -> &RealField<T> {
        &self.field
    }
}

/// Discrete Hamiltonian `H = -(1/2m) Δ_h + V` as tridiagonal bands.
#[derive(Clone, Debug)]
struct Hamiltonian<T> {
    off: T,
    diag: Vec<T>,
}

impl<T: Real> Hamiltonian<T> {
    fn new(v: &Potential<T>, mass: T) -> Self {
        let dx = v.grid().dx();
        let k = T::one() / (mass * dx * dx);
        Self { off: -k * T::lit(0.5), diag: v.values().iter().map(|&vi| k + vi).collect() }
    }

    fn apply(&self, psi: &[Cplx<T>], bc: Boundary, out: &mut [Cplx<T>]) {
        let n = psi.len();
        match bc {
            Boundary::Dirichlet => {
                out[0] = czero();
                out[n - 1] = czero();
                for i in 1..n - 1 {
                    let l = if i > 1 { psi[i - 1] } else { czero() };
                    let r = if i < n - 2 { psi[i + 1] } else { czero() };
                    out[i] = psi[i] * self.diag[i] + (l + r) * self.off;
                }
            }
            Boundary::Periodic => {
                for i in 0..n {
                    out[i] = psi[i] * self.diag[i] + (psi[(i + n - 1) % n] + psi[(i + 1) % n]) * self.off;
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Lhs<T> {
    Open(Tridiag<Cplx<T>>),
    Ring(CyclicTridiag<Cplx<T>>),
}

/// One Crank–Nicolson step `(1 + i dt H/2) ψ' = (1 - i dt H/2) ψ`, factored once.
#[derive(Clone, Debug)]
pub struct CrankNicolson<T> {
    grid: Grid<T>,
    bc: Boundary,
    dt: T,
    ham: Hamiltonian<T>,
    lhs: Lhs<T>,
}

impl<T: Real> CrankNicolson<T> {
    pub fn new(v: &Potential<T>, dt: T, bc: Boundary, mass: T) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return precondition(format!("time step must be positive, got {dt}"));
        }
        if !(mass.is_finite() && mass > T::zero()) {
            return precondition(format!("mass must be positive, got {mass}"));
        }
        let ham = Hamiltonian::new(v, mass);
        let half = cplx(T::zero(), dt * T::lit(0.5));
        let one = cplx(T::one(), T::zero());
        let off = half * ham.off;
        let lhs = match bc {
            Boundary::Dirichlet => {
                let n = ham.diag.len() - 2;
                let diag = ham.diag[1..n + 1].iter().map(|&d| one + half * d).collect();
                Lhs::Open(Tridiag::factor(vec![off; n], diag, vec![off; n])?)
            }
            Boundary::Periodic => {
                let diag = ham.diag.iter().map(|&d| one + half * d).collect();
                Lhs::Ring(CyclicTridiag::new(off, diag, off)?)
            }
        };
        Ok(Self { grid: *v.grid(), bc, dt, ham, lhs })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn boundary(&self) -> Boundary {
        self.bc
    }

    pub fn step(&self, f: &ComplexField<T>) -> Result<ComplexField<T>> {
        if f.grid() != &self.grid {
            return precondition("field and potential live on different grids");
        }
        let psi = f.values();
        let mut hpsi = vec![czero(); psi.len()];
        self.ham.apply(psi, self.bc, &mut hpsi);
        let half = cplx(T::zero(), self.dt * T::lit(0.5));
        let mut rhs: Vec<Cplx<T>> = psi.iter().zip(&hpsi).map(|(&p, &h)| p - half * h).collect();
        match &self.lhs {
            Lhs::Open(m) => {
                let n = rhs.len();
                m.solve_in_place(&mut rhs[1..n - 1])?;
                rhs[0] = czero();
                rhs[n - 1] = czero();
            }
            Lhs::Ring(m) => m.solve_in_place(&mut rhs)?,
        }
        ComplexField::new(self.grid, rhs).map_err(|e| Error::Solver { residual: f64::NAN, reason: e.to_string() })
    }

    /// `Re Σ dx ψ* (Hψ)`, the energy the scheme conserves exactly.
    pub fn energy(&self, f: &ComplexField<T>) -> T {
        let psi = f.values();
        let mut hpsi = vec![czero(); psi.len()];
        self.ham.apply(psi, self.bc, &mut hpsi);
        let s = psi.iter().zip(&hpsi).fold(T::zero(), |acc, (p, h)| acc + (p.conj() * h).re);
        s * self.grid.dx()
    }
}

/// One Crank–Nicolson step with unit mass.
pub fn step_schrodinger<T: Real>(f: &ComplexField<T>, v: &Potential<T>, dt: T, bc: Boundary) -> Result<ComplexField<T>> {
    CrankNicolson::new(v, dt, bc, T::one())?.step(f)
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<T> {
    pub bc: Boundary,
    pub mass: T,
    /// Reject inputs whose squared norm is off by more than [`NORM_TOL`].
    pub require_normalized: bool,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self { bc: Boundary::Dirichlet, mass: T::one(), require_normalized: true }
    }
}

/// Frames of one evolution over a window, indexed by the history's own
/// clock: frame `k` sits at process time `k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldHistory<T> {
    window: TimeWindow<T>,
    frames: Vec<ComplexField<T>>,
    direction: Direction,
    mass: T,
}

impl<T: Real> FieldHistory<T> {
    pub fn new(window: TimeWindow<T>, frames: Vec<ComplexField<T>>, direction: Direction, mass: T) -> Result<Self> {
        if frames.len() != window.n_steps() + 1 {
            return precondition(format!(
                "history has {} frames for a window of {} steps",
                frames.len(),
                window.n_steps()
            ));
        }
        let g = frames[0].grid();
        if frames.iter().any(|f| f.grid() != g) {
            return precondition("history frames live on different grids");
        }
        Ok(Self { window, frames, direction, mass })
    }

    pub fn window(&self) -> &TimeWindow<T> {
        &self.window
    }

    pub fn frames(&self) -> &[ComplexField<T>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &ComplexField<T> {
        &self.frames[k]
    }

    pub fn first(&self) -> &ComplexField<T> {
        &self.frames[0]
    }

    pub fn last(&self) -> &ComplexField<T> {
        &self.frames[self.frames.len() - 1]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn grid(&self) -> &Grid<T> {
        self.frames[0].grid()
    }

    /// Frame index holding the state at lab time `t`. Forward histories run
    /// with the lab clock; backward ones run against it (`t' = t0 - t`).
    pub fn index_at_time(&self, t: T) -> Result<usize> {
        let k = self.window.step_at(t)?;
        Ok(match self.direction {
            Direction::Forward => k,
            Direction::Backward => self.window.reversed_step(k),
        })
    }

    pub fn frame_at_time(&self, t: T) -> Result<&ComplexField<T>> {
        Ok(&self.frames[self.index_at_time(t)?])
    }

    /// Long-format CSV `t,x,re,im`, `t` on the history's own clock.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "x", "re", "im"])?;
        for (k, f) in self.frames.iter().enumerate() {
            let t = self.window.time(k).to_string();
            for (x, v) in f.grid().xs().zip(f.values()) {
                wtr.write_record([t.as_str(), &x.to_string(), &v.re.to_string(), &v.im.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_norm<T: Real>(f0: &ComplexField<T>) -> Result<()> {
    let n = f0.l2_norm_sq()?;
    if (n - T::one()).abs().to_f64_lossy() > NORM_TOL {
        return precondition(format!("initial state has squared norm {n}, expected 1"));
    }
    Ok(())
}

fn run<T: Real>(f0: &ComplexField<T>, v: &Potential<T>, w: TimeWindow<T>, opts: EvolveOptions<T>, dir: Direction) -> Result<FieldHistory<T>> {
    if opts.require_normalized {
        check_norm(f0)?;
    }
    let mut frames = Vec::with_capacity(w.n_steps() + 1);
    frames.push(f0.clone());
    if w.n_steps() > 0 {
        let cn = CrankNicolson::new(v, w.dt(), opts.bc, opts.mass)?;
        for k in 0..w.n_steps() {
            let next = cn.step(&frames[k])?;
            frames.push(next);
        }
    }
    FieldHistory::new(w, frames, dir, opts.mass)
}

/// Forward history `frames[k] = ψ(k dt)` starting from `f0`.
pub fn evolve_window<T: Real>(f0: &ComplexField<T>, v: &Potential<T>, w: TimeWindow<T>, opts: EvolveOptions<T>) -> Result<FieldHistory<T>> {
    run(f0, v, w, opts, Direction::Forward)
}

/// Reverses frame order, conjugates every frame and flips the direction.
pub fn time_reverse<T: Real>(h: &FieldHistory<T>) -> FieldHistory<T> {
    FieldHistory {
        window: h.window,
        frames: h.frames.iter().rev().map(ComplexField::conj).collect(),
        direction: h.direction.flipped(),
        mass: h.mass,
    }
}

/// Integrates the backward equation on its own, starting from the conjugate
/// of the forward terminal state. Cross-checks [`time_reverse`].
pub fn evolve_backward<T: Real>(terminal: &ComplexField<T>, v: &Potential<T>, w: TimeWindow<T>, opts: EvolveOptions<T>) -> Result<FieldHistory<T>> {
    run(&terminal.conj(), v, w, opts, Direction::Backward)
}

/// `‖conj(U conj(U f0)) - f0‖`: evolve, conjugate, evolve, conjugate.
pub fn schrodinger_round_trip<T: Real>(f0: &ComplexField<T>, v: &Potential<T>, w: TimeWindow<T>, opts: EvolveOptions<T>) -> Result<T> {
    let there = evolve_window(f0, v, w, opts)?;
    let back = evolve_window(&there.last().conj(), v, w, opts)?;
    back.last().conj().l2_distance(f0)
}

/// Lowest eigenvector of the discrete Hamiltonian by shifted inverse
/// iteration, normalised and made positive at its maximum.
pub fn stationary_state<T: Real>(v: &Potential<T>, bc: Boundary, mass: T) -> Result<ComplexField<T>> {
    let grid = *v.grid();
    let ham = Hamiltonian::new(v, mass);
    let n = grid.len();
    let shift = v.field().min() - T::lit(1e-3);
    let (lo, hi) = match bc {
        Boundary::Dirichlet => (1, n - 1),
        Boundary::Periodic => (0, n),
    };
    let m = hi - lo;
    let diag: Vec<T> = ham.diag[lo..hi].iter().map(|&d| d - shift).collect();
    enum Solver<T> {
        Open(Tridiag<T>),
        Ring(CyclicTridiag<T>),
    }
    let solver = match bc {
        Boundary::Dirichlet => Solver::Open(Tridiag::factor(vec![ham.off; m], diag, vec![ham.off; m])?),
        Boundary::Periodic => Solver::Ring(CyclicTridiag::new(ham.off, diag, ham.off)?),
    };
    let mut x = vec![T::one(); m];
    let tol = T::lit(1e-15);
    for _ in 0..2000 {
        let mut y = x.clone();
        match &solver {
            Solver::Open(s) => s.solve_in_place(&mut y)?,
            Solver::Ring(s) => s.solve_in_place(&mut y)?,
        }
        let norm = y.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let diff = y.iter().zip(&x).fold(T::zero(), |a, (&p, &q)| a.max((p - q).abs()));
        x = y;
        if diff < tol {
            break;
        }
    }
    let imax = (0..m).max_by(|&i, &j| x[i].abs().partial_cmp(&x[j].abs()).unwrap()).unwrap_or(0);
    let sign = if x[imax] < T::zero() { -T::one() } else { T::one() };
    let mut vals = vec![czero(); n];
    for (k, &xi) in x.iter().enumerate() {
        vals[lo + k] = cplx(sign * xi, T::zero());
    }
    ComplexField::new(grid, vals)?.normalized()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HeatMode {
    #[default]
    Physical,
    /// Permits `D < 0` to quantify what running diffusion backwards does.
    Demo,
}

/// Implicit Euler step `(1 - D dt Δ_h) ρ' = ρ` with reflecting (Neumann)
/// ends, factored once.
#[derive(Clone, Debug)]
pub struct HeatStepper<T> {
    grid: Grid<T>,
    lhs: Tridiag<T>,
}

impl<T: Real> HeatStepper<T> {
    pub fn new(grid: Grid<T>, d: T, dt: T, mode: HeatMode) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return precondition(format!("time step must be positive, got {dt}"));
        }
        if !d.is_finite() || (d < T::zero() && mode == HeatMode::Physical) {
            return precondition(format!("diffusion coefficient {d} needs demo mode"));
        }
        let n = grid.len();
        let r = d * dt / (grid.dx() * grid.dx());
        let two = T::lit(2.0);
        let mut a = vec![-r; n];
        let b = vec![T::one() + two * r; n];
        let mut c = vec![-r; n];
        c[0] = -two * r;
        a[n - 1] = -two * r;
        Ok(Self { grid, lhs: Tridiag::factor(a, b, c)? })
    }

    pub fn step(&self, rho: &RealField<T>) -> Result<RealField<T>> {
        if rho.grid() != &self.grid {
            return precondition("density and stepper live on different grids");
        }
        let mut v = rho.values().to_vec();
        self.lhs.solve_in_place(&mut v)?;
        RealField::new(self.grid, v)
    }
}

pub fn step_heat<T: Real>(rho: &RealField<T>, d: T, dt: T, mode: HeatMode) -> Result<RealField<T>> {
    HeatStepper::new(*rho.grid(), d, dt, mode)?.step(rho)
}

/// Cosine mode `cos(π m i / (n-1))`, an exact eigenvector of the Neumann
/// heat matrix.
pub fn heat_mode<T: Real>(grid: Grid<T>, m: usize) -> RealField<T> {
    let n1 = T::from_usize_lossy(grid.len() - 1);
    let vals = (0..grid.len())
        .map(|i| (T::PI() * T::from_usize_lossy(m) * T::from_usize_lossy(i) / n1).cos())
        .collect();
    RealField::from_vec_unchecked(grid, vals)
}

/// Per-step multiplier of [`heat_mode`] `m`: `1 / (1 + D dt κ²)` with
/// `κ² = (4/dx²) sin²(π m / (2(n-1)))`.
pub fn heat_mode_factor<T: Real>(grid: &Grid<T>, d: T, dt: T, m: usize) -> T {
    let s = (T::PI() * T::from_usize_lossy(m) / (T::lit(2.0) * T::from_usize_lossy(grid.len() - 1))).sin();
    let kappa2 = T::lit(4.0) * s * s / (grid.dx() * grid.dx());
    T::one() / (T::one() + d * dt * kappa2)
}

/// Outcome of pushing a density through the same evolve/reverse/evolve
/// protocol that recovers Schrödinger states.
#[derive(Clone, Debug)]
pub struct HeatContrast<T> {
    /// `‖heat(heat(ρ0)) - ρ0‖`; the reversal map is the identity on real fields.
    pub identical_protocol_l2: T,
    /// Forward with `D`, then backward with `-D`; `Err` text when the
    /// anti-diffusion solve breaks down.
    pub negative_d: std::result::Result<T, String>,
    pub forward_l2: T,
}

pub fn heat_round_trip<T: Real>(rho0: &RealField<T>, d: T, w: TimeWindow<T>) -> Result<HeatContrast<T>> {
    let fwd = HeatStepper::new(*rho0.grid(), d, w.dt(), HeatMode::Physical)?;
    let mut rho = rho0.clone();
    for _ in 0..w.n_steps() {
        rho = fwd.step(&rho)?;
    }
    let forward_l2 = rho.l2_distance(rho0)?;
    let mut again = rho.clone();
    for _ in 0..w.n_steps() {
        again = fwd.step(&again)?;
    }
    let identical_protocol_l2 = again.l2_distance(rho0)?;
    let negative_d = (|| -> Result<T> {
        let bwd = HeatStepper::new(*rho0.grid(), -d, w.dt(), HeatMode::Demo)?;
        let mut r = rho.clone();
        for _ in 0..w.n_steps() {
            r = bwd.step(&r)?;
        }
        r.l2_distance(rho0)
    })()
    .map_err(|e| e.to_string());
    Ok(HeatContrast { identical_protocol_l2, negative_d, forward_l2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use std::f64::consts::PI;

    fn well() -> Grid<f64> {
        Grid::<f64>::new(0.0, 1.0, 513).unwrap()
    }

    #[test]
    fn window_clock() {
        let w = TimeWindow::new(1.0, 1000).unwrap();
        assert_eq!(w.time(1000), 1.0);
        assert_eq!(w.reversed_step(250), 750);
        assert_eq!(w.step_at(0.5).unwrap(), 500);
        assert!(w.step_at(1.5).is_err());
        assert!(TimeWindow::new(0.0, 3).is_err());
    }

    #[test]
    fn well_ground_state_phase() {
        let g = well();
        let f = states::well_eigenstate(g, 1).unwrap();
        let v = Potential::free(g);
        let dt = 1e-4;
        let out = step_schrodinger(&f, &v, dt, Boundary::Dirichlet).unwrap();
        // discrete eigenvalue of -Δ_h/2 for sin(πx), then CN phase 2 atan(E dt/2)
        let dx = g.dx();
        let e = 2.0 * (PI * dx / 2.0).sin().powi(2) / (dx * dx);
        let phase = -2.0 * (e * dt / 2.0).atan();
        let err = f.scale(Cplx::from_polar(1.0, phase)).unwrap().l2_distance(&out).unwrap();
        assert!(err < 1e-12, "{err}");
        let e1 = PI * PI / 2.0;
        let exact = f.scale(Cplx::from_polar(1.0, -e1 * dt)).unwrap().l2_distance(&out).unwrap();
        assert!(exact < e1 * dt * 1e-5 + (e1 * dt).powi(3));
    }

    #[test]
    fn norm_preserved_for_arbitrary_state() {
        let g = Grid::<f64>::new(-8.0, 8.0, 300).unwrap();
        let f = ComplexField::from_fn(g, |x| Cplx::new((-x * x).exp() * (3.0 * x).cos(), (x * 1.7).sin() * (-x * x / 3.0).exp()))
            .unwrap();
        let v = Potential::harmonic(g, 1.3, 1.0).unwrap();
        let n0 = f.l2_norm_sq().unwrap();
        let out = step_schrodinger(&f, &v, 0.01, Boundary::Dirichlet).unwrap();
        assert!((out.l2_norm_sq().unwrap() - n0).abs() < 1e-12);
    }

    #[test]
    fn periodic_packet_moves_at_group_velocity() {
        let g = Grid::<f64>::new(-20.0, 20.0, 1024).unwrap();
        let k = 2.0;
        let f = states::gaussian(g, 0.0, 1.0, k).unwrap();
        let v = Potential::free(g);
        let w = TimeWindow::new(0.5, 500).unwrap();
        let h = evolve_window(&f, &v, w, EvolveOptions { bc: Boundary::Periodic, ..Default::default() }).unwrap();
        let mean = |f: &ComplexField<f64>| -> f64 {
            let dens = f.density();
            g.xs().zip(dens.values()).map(|(x, r)| x * r).sum::<f64>() * g.dx()
        };
        let moved = mean(h.last()) - mean(h.first());
        assert!((moved - k * 0.5).abs() < 2e-3, "{moved}");
    }

    #[test]
    fn empty_window_is_initial_state() {
        let g = well();
        let f = states::well_eigenstate(g, 2).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(1.0, 0).unwrap(), Default::default()).unwrap();
        assert_eq!(h.frames().len(), 1);
        assert_eq!(h.first(), &f);
    }

    #[test]
    fn unnormalised_input_rejected() {
        let g = well();
        let f = states::well_eigenstate(g, 1).unwrap().scale(Cplx::new(2.0, 0.0)).unwrap();
        let w = TimeWindow::new(0.1, 10).unwrap();
        let v = Potential::free(g);
        assert!(matches!(evolve_window(&f, &v, w, Default::default()), Err(Error::Precondition(_))));
        let opts = EvolveOptions { require_normalized: false, ..Default::default() };
        assert!(evolve_window(&f, &v, w, opts).is_ok());
    }

    #[test]
    fn reversal_is_an_involution_and_matches_clock() {
        let g = Grid::<f64>::new(-10.0, 10.0, 256).unwrap();
        let f = states::gaussian(g, -1.0, 1.0, 1.5).unwrap();
        let w = TimeWindow::new(1.0, 40).unwrap();
        let h = evolve_window(&f, &Potential::free(g), w, Default::default()).unwrap();
        let r = time_reverse(&h);
        assert_eq!(r.direction(), Direction::Backward);
        assert_eq!(time_reverse(&r), h);
        for tc in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(r.frame_at_time(tc).unwrap(), &h.frame_at_time(tc).unwrap().conj());
        }
    }

    #[test]
    fn independent_backward_integration_agrees() {
        let g = Grid::<f64>::new(-10.0, 10.0, 256).unwrap();
        let f = states::gaussian(g, 0.5, 0.8, -1.0).unwrap();
        let w = TimeWindow::new(0.5, 50).unwrap();
        let v = Potential::harmonic(g, 0.7, 1.0).unwrap();
        let h = evolve_window(&f, &v, w, Default::default()).unwrap();
        let r = time_reverse(&h);
        let b = evolve_backward(h.last(), &v, w, Default::default()).unwrap();
        for (x, y) in r.frames().iter().zip(b.frames()) {
            assert!(x.l2_distance(y).unwrap() < 1e-11);
        }
    }

    #[test]
    fn stationary_state_is_stationary() {
        let g = Grid::<f64>::new(-10.0, 10.0, 400).unwrap();
        let v = Potential::harmonic(g, 1.0, 1.0).unwrap();
        let s = stationary_state(&v, Boundary::Dirichlet, 1.0).unwrap();
        let h = evolve_window(&s, &v, TimeWindow::new(1.0, 100).unwrap(), Default::default()).unwrap();
        let d0 = s.density();
        let d1 = h.last().density();
        let worst = d0.values().iter().zip(d1.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        let analytic = states::harmonic_ground(g).unwrap();
        assert!(s.l2_distance(&analytic).unwrap() < 1e-3);
    }

    #[test]
    fn heat_variance_grows_by_two_d_dt() {
        let g = Grid::<f64>::new(-10.0, 10.0, 801).unwrap();
        let rho = RealField::from_fn(g, |x| (-x * x / (2.0 * 0.09)).exp() / (2.0 * PI * 0.09).sqrt()).unwrap();
        let var = |r: &RealField<f64>| g.xs().zip(r.values()).map(|(x, v)| x * x * v).sum::<f64>() * g.dx();
        let (d, dt) = (0.5, 1e-3);
        let out = step_heat(&rho, d, dt, HeatMode::Physical).unwrap();
        assert!((var(&out) - var(&rho) - 2.0 * d * dt).abs() < 1e-12);
        assert!(out.max() <= rho.max() && out.min() >= rho.min());
    }

    #[test]
    fn heat_uniform_fixed_and_negative_d_guarded() {
        let g = Grid::<f64>::new(0.0, 1.0, 64).unwrap();
        let u = RealField::from_fn(g, |_| 1.0).unwrap();
        let out = step_heat(&u, 0.5, 0.01, HeatMode::Physical).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(matches!(step_heat(&u, -0.5, 0.01, HeatMode::Physical), Err(Error::Precondition(_))));
    }

    #[test]
    fn heat_mode_factor_matches_solver() {
        let g = Grid::<f64>::new(0.0, 1.0, 129).unwrap();
        for (d, m) in [(0.5, 3usize), (-0.5, 20), (-0.5, 100)] {
            let dt = 1e-4;
            let mode = heat_mode(g, m);
            let out = step_heat(&mode, d, dt, HeatMode::Demo).unwrap();
            let f = heat_mode_factor(&g, d, dt, m);
            for (a, b) in out.values().iter().zip(mode.values()) {
                assert!((a - f * b).abs() < 1e-9 * f.abs().max(1.0));
            }
            if d < 0.0 && m == 20 {
                assert!(f > 1.0);
            }
        }
    }
}
