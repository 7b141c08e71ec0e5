//! Two-slit pipeline in the transverse coordinate: build the two-component
//! state, evolve both components to the screen, split each screen bin into
//! the four forward/backward intersection terms.

use std::io::Write;

use crate::borncalc::{pair_limit, born_limit, EpsLimit, EpsSchedule};
use crate::error::{precondition, Error, Result};
use crate::evolve::{Boundary, CrankNicolson, Potential};
use crate::lattice::{ComplexField, Grid, Interval, RealField};
use crate::scalar::{Cplx, Real};
use crate::states::{free_gaussian_value, gaussian};
use crate::stats::node_bin_width;

/// Largest accepted component density at either wall.
pub const WALL_TAIL: f64 = 1e-10;
/// Smallest accepted `2 + 2 Re⟨ψ₁|ψ₂⟩`.
pub const OVERLAP_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlitConfig<T> {
    /// Slit separation; the slits sit at `∓d/2`.
    pub d: T,
    pub sigma: T,
    pub k: T,
    pub t_screen: T,
}

impl<T: Real> Default for SlitConfig<T> {
    fn default() -> Self {
        Self { d: T::lit(5.0), sigma: T::lit(0.25), k: T::zero(), t_screen: T::lit(2.0) }
    }
}

impl<T: Real> SlitConfig<T> {
    pub fn validate(&self, g: &Grid<T>) -> Result<()> {
        if !(self.d >= T::zero()) || !(self.sigma > T::zero()) || !(self.t_screen >= T::zero()) {
            return precondition(format!("invalid slit geometry d = {}, sigma = {}, t_screen = {}", self.d, self.sigma, self.t_screen));
        }
        let half = self.d * T::lit(0.5);
        for x0 in [-half, half] {
            for wall in [g.x_min(), g.x_max()] {
                let z = wall - x0;
                let rho = (-z * z / (T::lit(2.0) * self.sigma * self.sigma)).exp() / (T::lit(2.0) * T::PI() * self.sigma * self.sigma).sqrt();
                if rho.to_f64_lossy() >= WALL_TAIL {
                    return precondition(format!("slit at {x0} leaks density {rho:e} onto the wall at {wall}"));
                }
            }
        }
        Ok(())
    }

    /// Exact fringe period of the freely evolved pair (unit mass).
    pub fn fringe_spacing(&self) -> T {
        let t = self.t_screen;
        let s2 = self.sigma * self.sigma;
        T::lit(2.0) * T::PI() * (T::lit(4.0) * s2 * s2 + t * t) / (self.d * t)
    }

    /// Far-field fringe period `2π t / d`.
    pub fn far_field_spacing(&self) -> T {
        T::lit(2.0) * T::PI() * self.t_screen / self.d
    }

    /// Free-evolution density of the normalised two-slit state at the screen.
    pub fn analytic_density(&self, x: T, overlap_re: T) -> T {
        let h = self.d * T::lit(0.5);
        let a = free_gaussian_value(x, -h, self.sigma, self.k, self.t_screen);
        let b = free_gaussian_value(x, h, self.sigma, self.k, self.t_screen);
        (a + b).norm_sqr() / (T::lit(2.0) + T::lit(2.0) * overlap_re)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlitState<T> {
    pub psi1: ComplexField<T>,
    pub psi2: ComplexField<T>,
    pub psi: ComplexField<T>,
    /// `⟨ψ₁|ψ₂⟩`.
    pub overlap: Cplx<T>,
}

impl<T: Real> SlitState<T> {
    /// `2 + 2 Re⟨ψ₁|ψ₂⟩`.
    pub fn norm_denominator(&self) -> T {
        T::lit(2.0) + T::lit(2.0) * self.overlap.re
    }

    fn assemble(psi1: ComplexField<T>, psi2: ComplexField<T>) -> Result<Self> {
        let overlap = psi1.inner(&psi2)?;
        let den = T::lit(2.0) + T::lit(2.0) * overlap.re;
        if den.to_f64_lossy() < OVERLAP_FLOOR {
            return Err(Error::Degenerate(format!("two-slit normalisation {den:e} vanishes")));
        }
        let c = Cplx::new(T::one() / den.sqrt(), T::zero());
        let psi = psi1.combine(c, &psi2, c)?;
        Ok(Self { psi1, psi2, psi, overlap })
    }
}

pub fn slit_state<T: Real>(cfg: &SlitConfig<T>, g: Grid<T>) -> Result<SlitState<T>> {
    cfg.validate(&g)?;
    let h = cfg.d * T::lit(0.5);
    SlitState::assemble(gaussian(g, -h, cfg.sigma, cfg.k)?, gaussian(g, h, cfg.sigma, cfg.k)?)
}

/// Evolves both components to `t_screen` in `n_steps` Crank–Nicolson steps;
/// the components run concurrently.
pub fn evolve_to_screen<T: Real>(s: &SlitState<T>, cfg: &SlitConfig<T>, v: &Potential<T>, n_steps: usize, bc: Boundary) -> Result<SlitState<T>> {
    if n_steps == 0 {
        return Ok(s.clone());
    }
    let cn = CrankNicolson::new(v, cfg.t_screen / T::from_usize_lossy(n_steps), bc, T::one())?;
    let run = |f: &ComplexField<T>| -> Result<ComplexField<T>> {
        let mut f = f.clone();
        for _ in 0..n_steps {
            f = cn.step(&f)?;
        }
        Ok(f)
    };
    let (a, b) = rayon::join(|| run(&s.psi1), || run(&s.psi2));
    SlitState::assemble(a?, b?)
}

/// `P_jm`: ε-limit of forward component `j` against backward component `m`
/// over one bin. Raw values tend to `∫_F ψ_j ψ_m*`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourTerms<T> {
    pub p11: EpsLimit<T>,
    pub p22: EpsLimit<T>,
    pub p12: EpsLimit<T>,
    pub p21: EpsLimit<T>,
    pub norm_denominator: T,
}

impl<T: Real> FourTerms<T> {
    pub fn raw_sum(&self) -> Cplx<T> {
        self.p11.value + self.p22.value + self.p12.value + self.p21.value
    }

    /// Four-term sum over `2 + 2 Re⟨ψ₁|ψ₂⟩`: the Born value of the bin.
    pub fn normalized_sum(&self) -> Cplx<T> {
        self.raw_sum() / self.norm_denominator
    }

    /// Diagonal share `(P11 + P22)` of the normalised sum.
    pub fn normalized_diagonal(&self) -> T {
        (self.p11.value.re + self.p22.value.re) / self.norm_denominator
    }

    /// `|P21 - conj(P12)|`.
    pub fn conjugate_defect(&self) -> T {
        (self.p21.value - self.p12.value.conj()).norm()
    }
}

pub fn four_terms<T: Real>(s: &SlitState<T>, f: &Interval<T>, sched: &EpsSchedule<T>) -> Result<FourTerms<T>> {
    let (a, b) = (&s.psi1, &s.psi2);
    let ((p11, p22), (p12, p21)) = rayon::join(
        || rayon::join(|| pair_limit(a, a, f, sched), || pair_limit(b, b, f, sched)),
        || rayon::join(|| pair_limit(a, b, f, sched), || pair_limit(b, a, f, sched)),
    );
    Ok(FourTerms { p11: p11?, p22: p22?, p12: p12?, p21: p21?, norm_denominator: s.norm_denominator() })
}

/// `|ψ|²` averaged into `bins` node-centred bins spanning the grid (half
/// width at the two ends); the trapezoid integral of the result equals the
/// total mass.
pub fn screen_profile<T: Real>(psi: &ComplexField<T>, bins: usize) -> Result<RealField<T>> {
    let g = psi.grid();
    if bins > g.len() {
        return precondition(format!("{bins} bins exceed {} grid nodes", g.len()));
    }
    let bg = Grid::new(g.x_min(), g.x_max(), bins)?;
    let rho = psi.density();
    let cum = RealField::new(*g, rho.cumulative())?;
    let half = bg.dx() * T::lit(0.5);
    let vals = (0..bins)
        .map(|i| {
            let lo = (bg.x(i) - half).max(g.x_min());
            let hi = (bg.x(i) + half).min(g.x_max());
            (cum.interpolate(hi) - cum.interpolate(lo)) / node_bin_width(&bg, i)
        })
        .collect();
    RealField::new(bg, vals)
}

/// Local maxima of `rho` above `floor · max`, refined by a parabola through
/// the three nodes.
pub fn local_maxima<T: Real>(rho: &RealField<T>, floor: T) -> Vec<T> {
    extrema(rho, floor, true)
}

fn extrema<T: Real>(rho: &RealField<T>, floor: T, maxima: bool) -> Vec<T> {
    let v = rho.values();
    let g = rho.grid();
    let cut = floor * rho.max();
    let mut out = Vec::new();
    for i in 1..v.len() - 1 {
        let (l, c, r) = (v[i - 1], v[i], v[i + 1]);
        let hit = if maxima { c > l && c >= r } else { c < l && c <= r };
        if !hit || (maxima && c < cut) {
            continue;
        }
        let den = l - T::lit(2.0) * c + r;
        let shift = if den != T::zero() { T::lit(0.5) * (l - r) / den } else { T::zero() };
        out.push(g.x(i) + shift * g.dx());
    }
    out
}

/// Mean distance between consecutive maxima above `floor · max`.
pub fn measured_fringe_spacing<T: Real>(rho: &RealField<T>, floor: T) -> Result<T> {
    let m = local_maxima(rho, floor);
    if m.len() < 2 {
        return precondition(format!("only {} fringe maxima above the floor", m.len()));
    }
    Ok((m[m.len() - 1] - m[0]) / T::from_usize_lossy(m.len() - 1))
}

/// Largest `(I_max - I_min)/(I_max + I_min)` over interior minima flanked by
/// maxima above `floor · max`; zero for a profile without such minima.
pub fn fringe_visibility<T: Real>(rho: &RealField<T>, floor: T) -> T {
    let v = rho.values();
    let cut = floor * rho.max();
    let mut best = T::zero();
    for i in 1..v.len() - 1 {
        if !(v[i] < v[i - 1] && v[i] <= v[i + 1]) {
            continue;
        }
        let left = v[..i].iter().rev().take_while({
            let mut prev = v[i];
            move |&&x| {
                let ok = x >= prev;
                prev = x;
                ok
            }
        });
        let lmax = left.fold(v[i], |a, &b| a.max(b));
        let rmax = v[i + 1..].iter().scan(v[i], |prev, &x| {
            if x >= *prev {
                *prev = x;
                Some(x)
            } else {
                None
            }
        });
        let rmax = rmax.fold(v[i], T::max);
        let imax = lmax.min(rmax);
        if imax < cut {
            continue;
        }
        best = best.max((imax - v[i]) / (imax + v[i]));
    }
    best
}

/// Golden-section minimiser of a unimodal `f` on `[a, b]`.
fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> T {
    let r = T::lit(0.5) * (T::lit(5.0).sqrt() - T::one());
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    T::lit(0.5) * (a + b)
}

/// First dark fringe to the right of the envelope centre, from the analytic
/// profile.
pub fn analytic_dark_fringe<T: Real>(cfg: &SlitConfig<T>, overlap_re: T) -> T {
    let s = cfg.fringe_spacing();
    let c = cfg.k * cfg.t_screen;
    golden_min(|x| cfg.analytic_density(x, overlap_re), c + T::lit(0.25) * s, c + T::lit(0.75) * s, T::lit(1e-10) * s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DarkFringeCheck<T> {
    pub x_dark: T,
    pub bin: Interval<T>,
    pub terms: FourTerms<T>,
    /// Full Born value of the bin.
    pub born: T,
    /// Born value over the diagonal share.
    pub ratio: T,
}

/// Four terms and Born value on a bin of width `width` centred on the
/// analytic dark fringe.
pub fn dark_fringe_check<T: Real>(s: &SlitState<T>, cfg: &SlitConfig<T>, width: T, sched: &EpsSchedule<T>) -> Result<DarkFringeCheck<T>> {
    let x_dark = analytic_dark_fringe(cfg, s.overlap.re);
    let bin = Interval::new(x_dark - width * T::lit(0.5), x_dark + width * T::lit(0.5))?;
    let terms = four_terms(s, &bin, sched)?;
    let born = born_limit(&s.psi, &bin, sched)?.real();
    let ratio = born / terms.normalized_diagonal();
    Ok(DarkFringeCheck { x_dark, bin, terms, born, ratio })
}

/// `n` equal screen bins covering `[lo, hi]`.
pub fn screen_bins<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<Interval<T>>> {
    if n == 0 || !(hi > lo) {
        return precondition("screen needs at least one bin of positive width");
    }
    let w = (hi - lo) / T::from_usize_lossy(n);
    (0..n)
        .map(|i| Interval::new(lo + w * T::from_usize_lossy(i), lo + w * T::from_usize_lossy(i + 1)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeRow<T> {
    pub x: T,
    pub bin: Interval<T>,
    pub terms: FourTerms<T>,
    /// Mean Born density of the bin.
    pub intensity: T,
}

pub fn fringe_table<T: Real>(s: &SlitState<T>, bins: &[Interval<T>], sched: &EpsSchedule<T>) -> Result<Vec<FringeRow<T>>> {
    use rayon::prelude::*;
    bins.par_iter()
        .map(|b| {
            let terms = four_terms(s, b, sched)?;
            let intensity = terms.normalized_sum().re / (b.hi - b.lo);
            Ok(FringeRow { x: T::lit(0.5) * (b.lo + b.hi), bin: *b, terms, intensity })
        })
        .collect()
}

/// CSV `x,intensity,P11_re,P22_re,P12_re,P12_im` (raw terms).
pub fn write_fringe_csv<T: Real, W: Write>(rows: &[FringeRow<T>], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "intensity", "P11_re", "P22_re", "P12_re", "P12_im"])?;
    for r in rows {
        let t = &r.terms;
        wtr.write_record([
            r.x.to_string(),
            r.intensity.to_string(),
            t.p11.value.re.to_string(),
            t.p22.value.re.to_string(),
            t.p12.value.re.to_string(),
            t.p12.value.im.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
