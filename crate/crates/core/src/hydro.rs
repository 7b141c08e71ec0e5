//! Hydrodynamic fields of a wavefunction: density, current and osmotic
//! velocities, phase, quantum potential and force, plus residuals of the
//! identities they satisfy along an evolution.

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use crate::error::{precondition, Error, Result};
use crate::evolve::{time_reverse, Direction, FieldHistory, Potential, NORM_TOL};
use crate::lattice::{ComplexField, RealField};
use crate::scalar::{Cplx, Real};

/// Nodes with `ρ < RHO_FLOOR_REL * max ρ` are masked.
pub const RHO_FLOOR_REL: f64 = 1e-12;

/// Diffusion coefficient `β² = 1/(2m)` (ħ = 1).
pub fn beta2<T: Real>(mass: T) -> T {
    T::one() / (T::lit(2.0) * mass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    Second,
    Fourth,
}

#[derive(Clone, Copy, Debug)]
pub struct HydroOptions<T> {
    pub mass: T,
    pub order: Order,
    pub floor_rel: T,
}

impl<T: Real> Default for HydroOptions<T> {
    fn default() -> Self {
        Self { mass: T::one(), order: Order::Second, floor_rel: T::lit(RHO_FLOOR_REL) }
    }
}

impl<T: Real> HydroOptions<T> {
    pub fn with_mass(mass: T) -> Self {
        Self { mass, ..Default::default() }
    }
}

trait Sample<T>: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {}
impl<T: Real> Sample<T> for T {}
impl<T: Real> Sample<T> for Cplx<T> {}

/// First derivative; one-sided second order at the two end nodes.
fn deriv1<T: Real, V: Sample<T>>(f: &[V], dx: T, order: Order) -> Vec<V> {
    let n = f.len();
    let h2 = T::one() / (T::lit(2.0) * dx);
    let h12 = T::one() / (T::lit(12.0) * dx);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            (f[1] * T::lit(4.0) - f[0] * T::lit(3.0) - f[2]) * h2
        } else if i == n - 1 {
            (f[n - 1] * T::lit(3.0) - f[n - 2] * T::lit(4.0) + f[n - 3]) * h2
        } else if order == Order::Fourth && i >= 2 && i + 2 < n {
            ((f[i + 1] - f[i - 1]) * T::lit(8.0) - (f[i + 2] - f[i - 2])) * h12
        } else {
            (f[i + 1] - f[i - 1]) * h2
        };
        out.push(d);
    }
    out
}

/// Second derivative; one-sided second order at the two end nodes.
fn deriv2<T: Real, V: Sample<T>>(f: &[V], dx: T, order: Order) -> Vec<V> {
    let n = f.len();
    let ih2 = T::one() / (dx * dx);
    let ih12 = ih2 / T::lit(12.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            (f[0] * T::lit(2.0) - f[1] * T::lit(5.0) + f[2] * T::lit(4.0) - f[3]) * ih2
        } else if i == n - 1 {
            (f[n - 1] * T::lit(2.0) - f[n - 2] * T::lit(5.0) + f[n - 3] * T::lit(4.0) - f[n - 4]) * ih2
        } else if order == Order::Fourth && i >= 2 && i + 2 < n {
            ((f[i + 1] + f[i - 1]) * T::lit(16.0) - (f[i + 2] + f[i - 2]) - f[i] * T::lit(30.0)) * ih12
        } else {
            (f[i + 1] + f[i - 1] - f[i] * T::lit(2.0)) * ih2
        };
        out.push(d);
    }
    out
}

#[inline]
fn im_conj_mul<T: Real>(a: Cplx<T>, b: Cplx<T>) -> T {
    // Im(conj(a) * b), written out so conjugating both inputs flips the sign exactly
    a.re * b.im - a.im * b.re
}

fn wrap_angle<T: Real>(d: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let mut d = d;
    while d > T::PI() {
        d -= two_pi;
    }
    while d <= -T::PI() {
        d += two_pi;
    }
    d
}

#[derive(Clone, Debug)]
pub struct HydroFields<T> {
    pub rho: RealField<T>,
    /// Current velocity `Im(ψ'/ψ)/m`.
    pub eta: RealField<T>,
    /// Osmotic velocity `β² ρ'/ρ`.
    pub u: RealField<T>,
    /// Phase, unwrapped outward from the density maximum.
    pub s: RealField<T>,
    /// Quantum potential `-(1/2m) R''/R`, `R = √ρ`.
    pub q: RealField<T>,
    /// Quantum force `-Q'`; zero where its stencil touches a masked node.
    pub f_q: RealField<T>,
    pub valid: Vec<bool>,
    /// Nodes whose derivatives used one-sided stencils.
    pub one_sided: Vec<bool>,
    pub mass: T,
}

pub fn hydro_decompose<T: Real>(f: &ComplexField<T>, opts: HydroOptions<T>) -> Result<HydroFields<T>> {
    let g = *f.grid();
    let n = g.len();
    let psi = f.values();
    let rho: Vec<T> = psi.iter().map(|v| v.norm_sqr()).collect();
    let rmax = rho.iter().copied().fold(T::zero(), T::max);
    if !(rmax > T::zero()) {
        return Err(Error::Degenerate("hydrodynamic fields of an all-zero field".into()));
    }
    let floor = opts.floor_rel * rmax;
    let valid: Vec<bool> = rho.iter().map(|&r| r >= floor && r > T::zero()).collect();
    let m = opts.mass;
    let b2 = beta2(m);
    let dx = g.dx();

    let dpsi = deriv1(psi, dx, opts.order);
    let drho = deriv1(&rho, dx, opts.order);
    let r: Vec<T> = rho.iter().map(|v| v.sqrt()).collect();
    let d2r = deriv2(&r, dx, opts.order);

    let mut eta = vec![T::zero(); n];
    let mut u = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    for i in 0..n {
        if valid[i] {
            eta[i] = im_conj_mul(psi[i], dpsi[i]) / (m * rho[i]);
            u[i] = b2 * drho[i] / rho[i];
            q[i] = -d2r[i] / (T::lit(2.0) * m * r[i]);
        }
    }
    let dq = deriv1(&q, dx, opts.order);
    let reach = if opts.order == Order::Fourth { 2 } else { 1 };
    let f_q = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            if (lo..=hi).all(|j| valid[j]) {
                -dq[i]
            } else {
                T::zero()
            }
        })
        .collect();

    let imax = (0..n).max_by(|&a, &b| rho[a].partial_cmp(&rho[b]).unwrap()).unwrap_or(0);
    let arg: Vec<T> = psi.iter().map(|v| v.arg()).collect();
    let mut s = vec![T::zero(); n];
    s[imax] = arg[imax];
    for i in imax + 1..n {
        s[i] = s[i - 1] + wrap_angle(arg[i] - arg[i - 1]);
    }
    for i in (0..imax).rev() {
        s[i] = s[i + 1] + wrap_angle(arg[i] - arg[i + 1]);
    }

    let mut one_sided = vec![false; n];
    one_sided[0] = true;
    one_sided[n - 1] = true;

    Ok(HydroFields {
        rho: RealField::new(g, rho)?,
        eta: RealField::new(g, eta)?,
        u: RealField::new(g, u)?,
        s: RealField::new(g, s)?,
        q: RealField::new(g, q)?,
        f_q: RealField::new(g, f_q)?,
        valid,
        one_sided,
        mass: m,
    })
}

impl<T: Real> HydroFields<T> {
    /// CSV `x,rho,eta,u,Q,F_Q,valid`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "rho", "eta", "u", "Q", "F_Q", "valid"])?;
        let g = self.rho.grid();
        for i in 0..g.len() {
            wtr.write_record([
                g.x(i).to_string(),
                self.rho.values()[i].to_string(),
                self.eta.values()[i].to_string(),
                self.u.values()[i].to_string(),
                self.q.values()[i].to_string(),
                self.f_q.values()[i].to_string(),
                (self.valid[i] as u8).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Fourth-order derivative with ghost nodes continued by odd reflection
/// about each end value (`ψ_{-k} = 2ψ_0 - ψ_k`), so Dirichlet walls are exact
/// for sine-like states.
fn reflected_derivatives<T: Real>(psi: &[Cplx<T>], dx: T) -> (Vec<Cplx<T>>, Vec<Cplx<T>>) {
    let n = psi.len();
    let at = |j: isize| -> Cplx<T> {
        if j < 0 {
            psi[0] * T::lit(2.0) - psi[(-j) as usize]
        } else if j as usize >= n {
            let k = j as usize - (n - 1);
            psi[n - 1] * T::lit(2.0) - psi[n - 1 - k]
        } else {
            psi[j as usize]
        }
    };
    let h12 = T::one() / (T::lit(12.0) * dx);
    let ih12 = T::one() / (T::lit(12.0) * dx * dx);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n as isize {
        let (m2, m1, c, p1, p2) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
        d1.push(((p1 - m1) * T::lit(8.0) - (p2 - m2)) * h12);
        d2.push(((p1 + m1) * T::lit(16.0) - (p2 + m2) - c * T::lit(30.0)) * ih12);
    }
    (d1, d2)
}

fn trap<T: Real>(dx: T, v: &[T]) -> T {
    let n = v.len();
    let inner = v[1..n - 1].iter().fold(T::zero(), |a, &x| a + x);
    (inner + (v[0] + v[n - 1]) * T::lit(0.5)) * dx
}

/// Kinetic energy computed two ways: `lhs = -(1/2m) ∫ ψ* ψ''` and
/// `rhs = (m/2) ∫ ρ (η² + u²)`. Masked nodes contribute their limit
/// `|ψ'|²/m²` to the right-hand integrand.
pub fn kinetic_energy<T: Real>(f: &ComplexField<T>, mass: T) -> Result<(T, T)> {
    let norm = f.l2_norm_sq()?;
    if (norm - T::one()).abs().to_f64_lossy() > NORM_TOL {
        return precondition(format!("kinetic energy needs a normalised state, norm² = {norm}"));
    }
    let g = f.grid();
    let psi = f.values();
    let (d1, d2) = reflected_derivatives(psi, g.dx());
    let lhs_int: Vec<T> = psi.iter().zip(&d2).map(|(p, dd)| (p.conj() * dd).re).collect();
    let lhs = -trap(g.dx(), &lhs_int) / (T::lit(2.0) * mass);

    let rho: Vec<T> = psi.iter().map(|v| v.norm_sqr()).collect();
    let rmax = rho.iter().copied().fold(T::zero(), T::max);
    let floor = T::lit(RHO_FLOOR_REL) * rmax;
    let rhs_int: Vec<T> = (0..psi.len())
        .map(|i| {
            if rho[i] >= floor && rho[i] > T::zero() {
                let eta = im_conj_mul(psi[i], d1[i]) / (mass * rho[i]);
                let u = beta2(mass) * T::lit(2.0) * (psi[i].conj() * d1[i]).re / rho[i];
                rho[i] * (eta * eta + u * u)
            } else {
                d1[i].norm_sqr() / (mass * mass)
            }
        })
        .collect();
    let rhs = trap(g.dx(), &rhs_int) * mass * T::lit(0.5);
    Ok((lhs, rhs))
}

fn current<T: Real>(f: &ComplexField<T>, mass: T) -> Vec<T> {
    let psi = f.values();
    let d = deriv1(psi, f.grid().dx(), Order::Second);
    psi.iter().zip(&d).map(|(&p, &dp)| im_conj_mul(p, dp) / mass).collect()
}

/// Pointwise `max_k |∂ρ/∂t + ∂(ρη)/∂x|` with centred differences in both
/// variables. End nodes (and their neighbours) are left at zero.
pub fn continuity_residual<T: Real>(h: &FieldHistory<T>) -> Result<RealField<T>> {
    let frames = h.frames();
    if frames.len() < 3 {
        return precondition("continuity residual needs at least three frames");
    }
    let g = *h.grid();
    let n = g.len();
    let inv2dt = T::one() / (T::lit(2.0) * h.window().dt());
    let inv2dx = T::one() / (T::lit(2.0) * g.dx());
    let mut worst = vec![T::zero(); n];
    for k in 1..frames.len() - 1 {
        let j = current(&frames[k], h.mass());
        let (a, b) = (frames[k - 1].values(), frames[k + 1].values());
        for i in 2..n - 2 {
            let drho = (b[i].norm_sqr() - a[i].norm_sqr()) * inv2dt;
            let dj = (j[i + 1] - j[i - 1]) * inv2dx;
            worst[i] = worst[i].max((drho + dj).abs());
        }
    }
    RealField::new(g, worst)
}

/// `max |η_rev(t' = t_c) + η_fwd(t = t_c)|` over nodes valid in both, for
/// each sampled clock reading.
pub fn velocity_reversal_check<T: Real>(h: &FieldHistory<T>, times: &[T]) -> Result<T> {
    if h.direction() != Direction::Forward {
        return precondition("velocity reversal check expects a forward history");
    }
    let rev = time_reverse(h);
    let opts = HydroOptions::with_mass(h.mass());
    let mut worst = T::zero();
    for &tc in times {
        let a = hydro_decompose(h.frame_at_time(tc)?, opts)?;
        let b = hydro_decompose(rev.frame_at_time(tc)?, opts)?;
        for i in 0..a.valid.len() {
            if a.valid[i] && b.valid[i] {
                worst = worst.max((a.eta.values()[i] + b.eta.values()[i]).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct NewtonResidual<T> {
    /// `max |∂η/∂t + (1/m) ∂(V+Q)/∂x|`.
    pub as_printed: T,
    /// Same with the convective term `η ∂η/∂x` added.
    pub material: T,
    /// Per interior frame `(t, as_printed, material)`.
    pub per_frame: Vec<(T, T, T)>,
}

/// Residuals of the quantum Newton equation over interior frames and nodes
/// with `ρ > core_rel * max ρ` (and at least the masking floor).
pub fn newton_residual<T: Real>(h: &FieldHistory<T>, v: &Potential<T>, core_rel: T) -> Result<NewtonResidual<T>> {
    let frames = h.frames();
    if frames.len() < 3 {
        return precondition("newton residual needs at least three frames");
    }
    let m = h.mass();
    let opts = HydroOptions::with_mass(m);
    let g = *h.grid();
    let n = g.len();
    let dt = h.window().dt();
    let inv2dx = T::one() / (T::lit(2.0) * g.dx());
    let vv = v.values();
    let mut prev = hydro_decompose(&frames[0], opts)?;
    let mut cur = hydro_decompose(&frames[1], opts)?;
    let mut out = NewtonResidual { as_printed: T::zero(), material: T::zero(), per_frame: Vec::new() };
    for k in 1..frames.len() - 1 {
        let next = hydro_decompose(&frames[k + 1], opts)?;
        let thresh = core_rel.max(T::lit(RHO_FLOOR_REL)) * cur.rho.max();
        let (mut a, mut b) = (T::zero(), T::zero());
        for i in 2..n - 2 {
            let ok = (i - 1..=i + 1).all(|j| cur.valid[j] && cur.rho.values()[j] > thresh) && prev.valid[i] && next.valid[i];
            if !ok {
                continue;
            }
            let deta_dt = (next.eta.values()[i] - prev.eta.values()[i]) / (T::lit(2.0) * dt);
            let e = cur.eta.values();
            let qv = cur.q.values();
            let grad = ((vv[i + 1] + qv[i + 1]) - (vv[i - 1] + qv[i - 1])) * inv2dx / m;
            let conv = e[i] * (e[i + 1] - e[i - 1]) * inv2dx;
            a = a.max((deta_dt + grad).abs());
            b = b.max((deta_dt + conv + grad).abs());
        }
        out.per_frame.push((h.window().time(k), a, b));
        out.as_printed = out.as_printed.max(a);
        out.material = out.material.max(b);
        prev = cur;
        cur = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve_window, stationary_state, Boundary, TimeWindow};
    use crate::lattice::Grid;
    use crate::states;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line() -> Grid<f64> {
        Grid::<f64>::new(-20.0, 20.0, 2048).unwrap()
    }

    #[test]
    fn plane_wave_velocities() {
        let g = Grid::<f64>::new(0.0, 10.0, 1001).unwrap();
        let f = states::plane_wave(g, 3.0).unwrap();
        let h = hydro_decompose(&f, HydroOptions { order: Order::Fourth, ..Default::default() }).unwrap();
        for i in 2..g.len() - 2 {
            assert!((h.eta.values()[i] - 3.0).abs() < 1e-4);
            assert!(h.u.values()[i].abs() < 1e-9);
        }
    }

    #[test]
    fn real_gaussian_closed_forms() {
        let g = line();
        let f = states::harmonic_ground(g).unwrap();
        let h = hydro_decompose(&f, HydroOptions { order: Order::Fourth, ..Default::default() }).unwrap();
        for i in 2..g.len() - 2 {
            if !h.valid[i] || g.x(i).abs() > 3.0 {
                continue;
            }
            let x = g.x(i);
            assert_eq!(h.eta.values()[i], 0.0);
            assert!((h.u.values()[i] + x).abs() < 1e-5, "u at {x}");
            assert!((h.q.values()[i] - (1.0 - x * x) / 2.0).abs() < 1e-5, "Q at {x}");
            assert!((h.f_q.values()[i] - x).abs() < 1e-4, "F_Q at {x}");
        }
    }

    #[test]
    fn zero_field_is_degenerate() {
        let f = ComplexField::zeros(line());
        assert!(matches!(hydro_decompose(&f, Default::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn masked_nodes_are_flagged() {
        let g = line();
        let f = states::harmonic_ground(g).unwrap();
        let h = hydro_decompose(&f, Default::default()).unwrap();
        assert!(!h.valid[0] && h.valid[g.len() / 2]);
        assert!(h.one_sided[0] && !h.one_sided[1]);
    }

    #[test]
    fn kinetic_energy_harmonic_and_well() {
        let g = line();
        let f = states::harmonic_ground(g).unwrap().normalized().unwrap();
        let (l, r) = kinetic_energy(&f, 1.0).unwrap();
        assert!((l - 0.25).abs() < 1e-5 && (r - 0.25).abs() < 1e-5, "{l} {r}");

        let w = Grid::<f64>::new(0.0, 1.0, 2049).unwrap();
        let f = states::well_eigenstate(w, 1).unwrap();
        let (l, r) = kinetic_energy(&f, 1.0).unwrap();
        let e1 = PI * PI / 2.0;
        assert!((l - e1).abs() < 1e-4 && (r - e1).abs() < 1e-4, "{l} {r}");
    }

    #[test]
    fn kinetic_energy_moving_packet() {
        let g = line();
        let f = states::gaussian(g, 0.0, 4.0, 3.0).unwrap();
        let (l, r) = kinetic_energy(&f, 1.0).unwrap();
        // k0²/2 + 1/(8σ²)
        let want = 4.5 + 1.0 / (8.0 * 16.0);
        assert!((l - want).abs() < 1e-4 && (r - want).abs() < 1e-4, "{l} {r}");
        assert!(kinetic_energy(&f.scale(Cplx::new(2.0, 0.0)).unwrap(), 1.0).is_err());
    }

    #[test]
    fn continuity_converges_at_second_order() {
        let run = |n: usize, steps: usize| -> f64 {
            let g = Grid::<f64>::new(-20.0, 20.0, n).unwrap();
            let f = states::gaussian(g, 0.0, 1.0, 1.0).unwrap();
            let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(0.2, steps).unwrap(), Default::default()).unwrap();
            continuity_residual(&h).unwrap().max()
        };
        let coarse = run(1001, 200);
        let fine = run(2001, 400);
        assert!(coarse < 5e-3, "{coarse}");
        let ratio = coarse / fine;
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn continuity_vanishes_for_stationary_state() {
        let g = Grid::<f64>::new(-10.0, 10.0, 512).unwrap();
        let v = Potential::harmonic(g, 1.0, 1.0).unwrap();
        let s = stationary_state(&v, Boundary::Dirichlet, 1.0).unwrap();
        let h = evolve_window(&s, &v, TimeWindow::new(0.1, 20).unwrap(), Default::default()).unwrap();
        assert!(continuity_residual(&h).unwrap().max() < 1e-9);
        assert!(continuity_residual(&FieldHistory::new(*h.window(), h.frames().to_vec(), Direction::Forward, 1.0).unwrap()).is_ok());
    }

    #[test]
    fn velocity_reversal_is_exact() {
        let g = line();
        let f = states::gaussian(g, -2.0, 1.0, 2.0).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(1.0, 100).unwrap(), Default::default()).unwrap();
        let err = velocity_reversal_check(&h, &[0.0, 0.3, 0.5, 0.7, 1.0]).unwrap();
        assert_eq!(err, 0.0);
        let rev = time_reverse(&h);
        let hy = hydro_decompose(rev.frame_at_time(0.0).unwrap(), Default::default()).unwrap();
        let c = g.nearest(-2.0);
        assert!((hy.eta.values()[c] + 2.0).abs() < 1e-3);
    }

    #[test]
    fn newton_at_first_instant_of_free_gaussian() {
        let g = line();
        let f = states::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        let h = evolve_window(&f, &Potential::free(g), TimeWindow::new(0.002, 2).unwrap(), Default::default()).unwrap();
        let r = newton_residual(&h, &Potential::free(g), 1e-3).unwrap();
        assert!(r.as_printed < 1e-3, "{}", r.as_printed);
        assert!(r.material < 1e-3);
    }

    #[test]
    fn mass_scaling_of_u() {
        let g = line();
        let f = states::gaussian(g, 0.3, 1.2, 0.5).unwrap();
        let base = hydro_decompose(&f, HydroOptions::with_mass(1.0)).unwrap();
        for m in [10.0, 100.0] {
            let h = hydro_decompose(&f, HydroOptions::with_mass(m)).unwrap();
            for (a, b) in base.u.values().iter().zip(h.u.values()) {
                assert!((a / m - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn conjugation_flips_eta_keeps_u(x0 in -3.0..3.0f64, k in -4.0..4.0f64, s in 0.5..2.0f64) {
            let g = Grid::<f64>::new(-20.0, 20.0, 512).unwrap();
            let f = states::gaussian(g, x0, s, k).unwrap();
            let a = hydro_decompose(&f, Default::default()).unwrap();
            let b = hydro_decompose(&f.conj(), Default::default()).unwrap();
            prop_assert_eq!(&a.valid, &b.valid);
            for i in 0..g.len() {
                prop_assert_eq!(a.eta.values()[i], -b.eta.values()[i]);
                prop_assert_eq!(a.u.values()[i], b.u.values()[i]);
            }
        }

        #[test]
        fn global_scale_leaves_fields(x0 in -3.0..3.0f64, k in -4.0..4.0f64, re in 0.1..3.0f64, im in -3.0..3.0f64) {
            let g = Grid::<f64>::new(-20.0, 20.0, 512).unwrap();
            let f = states::gaussian(g, x0, 1.0, k).unwrap();
            let a = hydro_decompose(&f, Default::default()).unwrap();
            let b = hydro_decompose(&f.scale(Cplx::new(re, im)).unwrap(), Default::default()).unwrap();
            for i in 0..g.len() {
                if a.valid[i] && b.valid[i] {
                    let tol = 1e-9 * (1.0 + a.q.values()[i].abs());
                    prop_assert!((a.eta.values()[i] - b.eta.values()[i]).abs() < 1e-9);
                    prop_assert!((a.u.values()[i] - b.u.values()[i]).abs() < 1e-9 * (1.0 + a.u.values()[i].abs()));
                    prop_assert!((a.q.values()[i] - b.q.values()[i]).abs() < tol);
                }
            }
        }
    }
}
