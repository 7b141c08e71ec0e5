//! Intersection probabilities of a forward field and a backward (conjugate)
//! field in the ε-limit, and the eigenbasis form of the same rule.
//!
//! The double integral runs over `x₂ ∈ F`, `x₁ ∈ [x₂-ε, x₂+ε]` (clipped to
//! the box), with Simpson's rule on the inner window, so values are even in
//! ε. [`Kernel::Symmetric`] averages that with its mirror image so that
//! swapping the two fields conjugates the result exactly.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{precondition, Error, Result};
use crate::lattice::{ComplexField, Grid, Interval};
use crate::richardson::richardson;
use crate::scalar::{czero, Cplx, Real};

/// Smallest accepted `|denominator|` of an intersection ratio.
pub const DENOM_FLOOR: f64 = 1e-14;
/// Largest accepted Gram deviation in [`expand_in_basis`].
pub const GRAM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Window,
    Symmetric,
}

/// Strictly decreasing ε widths, each a whole number (≥ 2) of grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSchedule<T> {
    dx: T,
    cells: Vec<usize>,
}

impl<T: Real> EpsSchedule<T> {
    /// `ε_k = cells0 · dx / 2^k`, `k = 0..levels`.
    pub fn geometric(grid: &Grid<T>, cells0: usize, levels: usize) -> Result<Self> {
        if levels == 0 {
            return precondition("schedule needs at least one level");
        }
        if levels > 1 && !cells0.is_multiple_of(1 << (levels - 1)) {
            return precondition(format!("{cells0} cells cannot be halved {} times", levels - 1));
        }
        Self::from_cells(grid, (0..levels).map(|k| cells0 >> k).collect())
    }

    pub fn from_cells(grid: &Grid<T>, cells: Vec<usize>) -> Result<Self> {
        if cells.is_empty() {
            return precondition("empty ε schedule");
        }
        if cells.windows(2).any(|w| w[1] >= w[0]) {
            return precondition("ε schedule must be strictly decreasing");
        }
        if cells[cells.len() - 1] < 2 {
            return precondition("smallest ε must span at least two grid cells");
        }
        Ok(Self { dx: grid.dx(), cells })
    }

    /// Widths given in length units, snapped to whole cells.
    pub fn from_values(grid: &Grid<T>, values: &[T]) -> Result<Self> {
        let cells = values
            .iter()
            .map(|&e| (e / grid.dx()).round().to_usize().unwrap_or(0))
            .collect();
        Self::from_cells(grid, cells)
    }

    pub fn values(&self) -> Vec<T> {
        self.cells.iter().map(|&c| self.dx * T::from_usize_lossy(c)).collect()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Halving ratio between consecutive levels holds throughout.
    fn is_halving(&self) -> bool {
        self.cells.windows(2).all(|w| w[0] == 2 * w[1])
    }
}

/// Composite Simpson on equally spaced samples; Simpson 3/8 closes an odd
/// interval count, trapezoid handles a single interval.
fn simpson<T: Real>(v: &[Cplx<T>], h: T) -> Cplx<T> {
    let k = v.len().saturating_sub(1);
    match k {
        0 => czero(),
        1 => (v[0] + v[1]) * (h * T::lit(0.5)),
        _ => {
            let even_end = if k.is_multiple_of(2) { k } else { k - 3 };
            let mut s = czero();
            if even_end > 0 {
                let mut acc = v[0] + v[even_end];
                for (j, &x) in v.iter().enumerate().take(even_end).skip(1) {
                    acc += x * if j % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
                }
                s = acc * (h / T::lit(3.0));
            }
            if k % 2 == 1 {
                let t = &v[even_end..];
                s += (t[0] + t[1] * T::lit(3.0) + t[2] * T::lit(3.0) + t[3]) * (h * T::lit(3.0) / T::lit(8.0));
            }
            s
        }
    }
}

fn check_pair<T: Real>(a: &ComplexField<T>, b: &ComplexField<T>) -> Result<()> {
    if a.grid() != b.grid() {
        return precondition("forward and backward fields live on different grids");
    }
    Ok(())
}

/// `∫_F ψ_b*(x₂) ∫_{x₂-ε}^{x₂+ε} ψ_a(x₁) dx₁ dx₂`.
fn window_numerator<T: Real>(a: &ComplexField<T>, b: &ComplexField<T>, f: &Interval<T>, cells: usize) -> Result<Cplx<T>> {
    let g = a.grid();
    let s = g.snap(f)?;
    let (pa, pb) = (a.values(), b.values());
    let n = g.len();
    let h = g.dx();
    let mut acc = czero();
    for i in s.first..=s.last {
        let w = g.trapezoid_weight(i, s.first, s.last);
        if w == T::zero() {
            continue;
        }
        let lo = i.saturating_sub(cells);
        let hi = (i + cells).min(n - 1);
        acc += pb[i].conj() * simpson(&pa[lo..=hi], h) * w;
    }
    Ok(acc)
}

/// Average of the window numerator and its mirror (window on `ψ_b*`,
/// outer point on `ψ_a`); swapping the fields conjugates it exactly.
fn symmetric_numerator<T: Real>(a: &ComplexField<T>, b: &ComplexField<T>, f: &Interval<T>, cells: usize) -> Result<Cplx<T>> {
    let fwd = window_numerator(a, b, f, cells)?;
    let mirror = window_numerator(b, a, f, cells)?.conj();
    Ok((fwd + mirror) * T::lit(0.5))
}

fn numerator<T: Real>(kernel: Kernel, a: &ComplexField<T>, b: &ComplexField<T>, f: &Interval<T>, cells: usize) -> Result<Cplx<T>> {
    check_pair(a, b)?;
    match kernel {
        Kernel::Window => window_numerator(a, b, f, cells),
        Kernel::Symmetric => symmetric_numerator(a, b, f, cells),
    }
}

fn cells_for<T: Real>(g: &Grid<T>, eps: T) -> Result<usize> {
    let c = (eps / g.dx()).round().to_usize().unwrap_or(0);
    if c < 2 {
        return precondition(format!("ε = {eps} is below two grid spacings"));
    }
    Ok(c)
}

fn ratio<T: Real>(num: Cplx<T>, den: Cplx<T>) -> Result<Cplx<T>> {
    if den.norm().to_f64_lossy() < DENOM_FLOOR {
        return Err(Error::Degenerate(format!("intersection denominator {den} vanishes")));
    }
    Ok(num / den)
}

/// Finite-ε intersection ratio (window kernel): numerator over `F` divided
/// by the same double integral over the whole line. `psi` need not be
/// normalised.
pub fn intersection_probability_eps<T: Real>(psi: &ComplexField<T>, f: &Interval<T>, eps: T) -> Result<Cplx<T>> {
    let c = cells_for(psi.grid(), eps)?;
    let num = window_numerator(psi, psi, f, c)?;
    let den = window_numerator(psi, psi, &Interval::whole(), c)?;
    ratio(num, den)
}

/// Extrapolated ε → 0 value with its convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsLimit<T> {
    pub value: Cplx<T>,
    /// Richardson error estimate (max over real and imaginary parts).
    pub error_estimate: T,
    /// `(ε, value at ε)` for each schedule level.
    pub table: Vec<(T, Cplx<T>)>,
    /// Non-monotone convergence and similar diagnostics.
    pub warnings: Vec<String>,
}

impl<T: Real> EpsLimit<T> {
    pub fn real(&self) -> T {
        self.value.re
    }

    /// CSV `eps,value_re,value_im,extrapolated` (the extrapolated real part
    /// repeated on every row).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["eps", "value_re", "value_im", "extrapolated"])?;
        for (e, v) in &self.table {
            wtr.write_record([e.to_string(), v.re.to_string(), v.im.to_string(), self.value.re.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn extrapolate<T: Real>(sched: &EpsSchedule<T>, vals: Vec<Cplx<T>>, powers: &[u32]) -> Result<EpsLimit<T>> {
    let mut warnings = Vec::new();
    if !sched.is_halving() && vals.len() > 1 {
        warnings.push("schedule is not a halving sequence; extrapolation assumes ratio 2".to_string());
    }
    let re: Vec<T> = vals.iter().map(|v| v.re).collect();
    let im: Vec<T> = vals.iter().map(|v| v.im).collect();
    let p = &powers[..vals.len().saturating_sub(1).min(powers.len())];
    let (r_re, r_im) = (richardson(&re, p)?, richardson(&im, p)?);
    let diffs: Vec<T> = vals.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    for (k, d) in diffs.windows(2).enumerate() {
        if d[1] > d[0] * T::lit(1.1) && d[1] > T::lit(1e-14) {
            warnings.push(format!("non-monotone convergence between levels {} and {}", k + 1, k + 2));
        }
    }
    let err = if vals.len() > 1 { r_re.error_estimate.max(r_im.error_estimate) } else { T::infinity() };
    Ok(EpsLimit {
        value: Cplx::new(r_re.value, r_im.value),
        error_estimate: err,
        table: sched.values().into_iter().zip(vals).collect(),
        warnings,
    })
}

const EVEN_POWERS: [u32; 6] = [2, 4, 6, 8, 10, 12];

/// Window-kernel ratio `N(F)/N(ℝ)` for a (forward, backward) pair, with a
/// separate field supplying the denominator, extrapolated to ε → 0.
pub fn window_limit<T: Real>(
    forward: &ComplexField<T>,
    backward: &ComplexField<T>,
    denom_field: &ComplexField<T>,
    f: &Interval<T>,
    sched: &EpsSchedule<T>,
) -> Result<EpsLimit<T>> {
    check_pair(forward, denom_field)?;
    let vals = sched
        .cells
        .par_iter()
        .map(|&c| {
            let num = numerator(Kernel::Window, forward, backward, f, c)?;
            let den = window_numerator(denom_field, denom_field, &Interval::whole(), c)?;
            ratio(num, den)
        })
        .collect::<Result<Vec<_>>>()?;
    extrapolate(sched, vals, &EVEN_POWERS)
}

/// Symmetric-kernel `N(F)/(2ε)` for a (forward, backward) pair,
/// extrapolated to ε → 0. Unnormalised: tends to `∫_F ψ_a ψ_b*`.
pub fn pair_limit<T: Real>(forward: &ComplexField<T>, backward: &ComplexField<T>, f: &Interval<T>, sched: &EpsSchedule<T>) -> Result<EpsLimit<T>> {
    let dx = forward.grid().dx();
    let vals = sched
        .cells
        .par_iter()
        .map(|&c| {
            let two_eps = T::lit(2.0) * dx * T::from_usize_lossy(c);
            Ok(numerator(Kernel::Symmetric, forward, backward, f, c)? / two_eps)
        })
        .collect::<Result<Vec<_>>>()?;
    extrapolate(sched, vals, &EVEN_POWERS)
}

/// ε-limit Born value of `F`; the real part is the probability, the
/// imaginary part must vanish in the limit.
pub fn born_limit<T: Real>(psi: &ComplexField<T>, f: &Interval<T>, sched: &EpsSchedule<T>) -> Result<EpsLimit<T>> {
    window_limit(psi, psi, psi, f, sched)
}

/// Well eigenfunctions `√(2/L) sin(nπx/L)`, `n = 1..=n_max`.
pub fn well_basis<T: Real>(grid: Grid<T>, n_max: usize) -> Result<Vec<ComplexField<T>>> {
    (1..=n_max).map(|n| crate::states::well_eigenstate(grid, n)).collect()
}

#[derive(Clone, Debug)]
pub struct EigenExpansion<T> {
    pub psi: ComplexField<T>,
    pub basis: Vec<ComplexField<T>>,
    /// `c_n = ∫ ψ_n* ψ`.
    pub coeffs: Vec<Cplx<T>>,
    /// `‖ψ - Σ c_n ψ_n‖`.
    pub residual: T,
    /// `max |G - I|` over the Gram matrix of the basis.
    pub gram_deviation: T,
}

impl<T: Real> EigenExpansion<T> {
    pub fn n_max(&self) -> usize {
        self.basis.len()
    }
}

pub fn gram_deviation<T: Real>(basis: &[ComplexField<T>]) -> Result<T> {
    let rows = (0..basis.len())
        .into_par_iter()
        .map(|i| {
            let mut worst = T::zero();
            for j in i..basis.len() {
                let v = basis[i].inner(&basis[j])?;
                let want = if i == j { Cplx::new(T::one(), T::zero()) } else { czero() };
                worst = worst.max((v - want).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(rows.into_iter().fold(T::zero(), T::max))
}

pub fn expand_in_basis<T: Real>(psi: &ComplexField<T>, basis: &[ComplexField<T>]) -> Result<EigenExpansion<T>> {
    if basis.is_empty() {
        return precondition("empty basis");
    }
    let gd = gram_deviation(basis)?;
    if gd.to_f64_lossy() > GRAM_TOL {
        return precondition(format!("basis is not orthonormal (Gram deviation {gd:e})"));
    }
    let coeffs = basis.iter().map(|b| b.inner(psi)).collect::<Result<Vec<_>>>()?;
    let mut recon = vec![czero(); psi.grid().len()];
    for (c, b) in coeffs.iter().zip(basis) {
        for (r, &v) in recon.iter_mut().zip(b.values()) {
            *r += v * c;
        }
    }
    let residual = psi.l2_distance(&ComplexField::new(*psi.grid(), recon)?)?;
    Ok(EigenExpansion { psi: psi.clone(), basis: basis.to_vec(), coeffs, residual, gram_deviation: gd })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateProbabilities<T> {
    /// `p_n = |c_n|²`.
    pub p: Vec<T>,
    pub total: T,
}

pub fn state_probabilities<T: Real>(e: &EigenExpansion<T>) -> StateProbabilities<T> {
    let p: Vec<T> = e.coeffs.iter().map(|c| c.norm_sqr()).collect();
    let total = p.iter().fold(T::zero(), |a, &b| a + b);
    StateProbabilities { p, total }
}

/// ε-limit of the mixed intersection of forward `c_n ψ_n` with backward
/// `c_m ψ_m`, relative to the whole-line intersection of the full state.
/// Tends to `c_n c_m* ∫_F ψ_n ψ_m* / ‖ψ‖²`. Indices are zero-based.
pub fn cross_term<T: Real>(e: &EigenExpansion<T>, n: usize, m: usize, f: &Interval<T>, sched: &EpsSchedule<T>) -> Result<EpsLimit<T>> {
    if n == m {
        return precondition("cross term needs two different states");
    }
    if n >= e.n_max() || m >= e.n_max() {
        return precondition(format!("state index beyond truncation {}", e.n_max()));
    }
    let a = e.basis[n].scale(e.coeffs[n])?;
    let b = e.basis[m].scale(e.coeffs[m])?;
    window_limit(&a, &b, &e.psi, f, sched)
}

/// Diagonal (`n = m`) per-state contribution, the counterpart of
/// [`cross_term`].
pub fn state_term<T: Real>(e: &EigenExpansion<T>, n: usize, f: &Interval<T>, sched: &EpsSchedule<T>) -> Result<EpsLimit<T>> {
    if n >= e.n_max() {
        return precondition(format!("state index beyond truncation {}", e.n_max()));
    }
    let a = e.basis[n].scale(e.coeffs[n])?;
    window_limit(&a, &a, &e.psi, f, sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn well() -> Grid<f64> {
        Grid::<f64>::new(0.0, 1.0, 2049).unwrap()
    }

    fn sched(g: &Grid<f64>) -> EpsSchedule<f64> {
        EpsSchedule::geometric(g, 16, 4).unwrap()
    }

    #[test]
    fn simpson_rules_exact_for_cubics() {
        let h = 0.1;
        for k in 1..8usize {
            let v: Vec<Cplx<f64>> = (0..=k).map(|j| {
                let x = j as f64 * h;
                Cplx::new(x * x * x - x, 2.0 * x * x)
            }).collect();
            let len = k as f64 * h;
            let want = Cplx::new(len.powi(4) / 4.0 - len * len / 2.0, 2.0 * len.powi(3) / 3.0);
            let got = simpson(&v, h);
            if k >= 2 {
                assert!((got - want).norm() < 1e-13, "{k}");
            }
        }
    }

    #[test]
    fn uniform_field_closed_forms() {
        let g = well();
        let one = ComplexField::from_fn(g, |_| Cplx::new(1.0, 0.0)).unwrap();
        for cells in [16usize, 64, 256] {
            let eps = g.dx() * cells as f64;
            let half = intersection_probability_eps(&one, &Interval::new(0.0, 0.5).unwrap(), eps).unwrap();
            assert!((half.re - 0.5).abs() < 1e-13 && half.im == 0.0);
            let q = intersection_probability_eps(&one, &Interval::new(0.0, 0.25).unwrap(), eps).unwrap();
            let want = (2.0 * 0.25 * eps - eps * eps / 2.0) / (2.0 * eps - eps * eps);
            assert!((q.re - want).abs() < 1e-12, "{} {}", q.re, want);
        }
    }

    #[test]
    fn whole_line_is_exactly_one() {
        let g = well();
        let f = states::well_eigenstate(g, 1).unwrap().combine(Cplx::new(0.3, 0.0), &states::well_eigenstate(g, 2).unwrap(), Cplx::new(0.0, 0.7)).unwrap();
        for c in [2usize, 5, 16] {
            let v = intersection_probability_eps(&f, &Interval::whole(), g.dx() * c as f64).unwrap();
            assert_eq!(v, Cplx::new(1.0, 0.0));
        }
        assert!(intersection_probability_eps(&f, &Interval::whole(), g.dx()).is_err());
        let z = ComplexField::zeros(g);
        assert!(matches!(intersection_probability_eps(&z, &Interval::whole(), 0.01), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gaussian_half_line_by_symmetry() {
        let g = Grid::<f64>::new(-20.0, 20.0, 2049).unwrap();
        let f = states::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        let b = born_limit(&f, &Interval::new(0.0, f64::INFINITY).unwrap(), &sched(&g)).unwrap();
        assert!((b.real() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn well_ground_state_born_values() {
        let g = well();
        let f = states::well_eigenstate(g, 1).unwrap();
        let s = sched(&g);
        let half = born_limit(&f, &Interval::new(0.0, 0.5).unwrap(), &s).unwrap();
        assert!((half.real() - 0.5).abs() < 1e-4);
        let q = born_limit(&f, &Interval::new(0.0, 0.25).unwrap(), &s).unwrap();
        assert!((q.real() - (0.25 - 1.0 / (2.0 * PI))).abs() < 1e-3);
        assert!(q.value.im.abs() < 1e-12);
    }

    #[test]
    fn superposition_whole_line() {
        let g = well();
        let f = states::well_eigenstate(g, 1).unwrap()
            .combine(Cplx::new(FRAC_1_SQRT_2, 0.0), &states::well_eigenstate(g, 2).unwrap(), Cplx::new(FRAC_1_SQRT_2, 0.0))
            .unwrap();
        let b = born_limit(&f, &Interval::whole(), &sched(&g)).unwrap();
        assert!((b.real() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn expansion_coefficients() {
        let g = well();
        let basis = well_basis(g, 8).unwrap();
        let e = expand_in_basis(&basis[2], &basis).unwrap();
        assert!((e.coeffs[2].re - 1.0).abs() < 1e-12);
        assert!(e.coeffs.iter().enumerate().all(|(i, c)| i == 2 || c.norm() < 1e-8));

        let psi = basis[0].combine(Cplx::new(FRAC_1_SQRT_2, 0.0), &basis[1], Cplx::new(0.0, FRAC_1_SQRT_2)).unwrap();
        let e = expand_in_basis(&psi, &basis).unwrap();
        assert!((e.coeffs[0] - Cplx::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((e.coeffs[1] - Cplx::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-12);
        let p = state_probabilities(&e);
        assert!((p.p[0] - 0.5).abs() < 1e-12 && (p.p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probabilities_of_three_four_five() {
        let g = well();
        let basis = well_basis(g, 2).unwrap();
        let psi = basis[0].combine(Cplx::new(0.6, 0.0), &basis[1], Cplx::new(0.0, 0.8)).unwrap();
        let p = state_probabilities(&expand_in_basis(&psi, &basis).unwrap());
        assert!((p.p[0] - 0.36).abs() < 1e-12 && (p.p[1] - 0.64).abs() < 1e-12);
        assert!((p.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let g = well();
        let mut basis = well_basis(g, 3).unwrap();
        basis[1] = basis[0].clone();
        assert!(matches!(expand_in_basis(&basis[0], &basis), Err(Error::Precondition(_))));
    }

    #[test]
    fn cross_terms() {
        let g = well();
        let basis = well_basis(g, 2).unwrap();
        let (c1, c2) = (Cplx::new(FRAC_1_SQRT_2, 0.0), Cplx::new(0.0, FRAC_1_SQRT_2));
        let psi = basis[0].combine(c1, &basis[1], c2).unwrap();
        let e = expand_in_basis(&psi, &basis).unwrap();
        let s = sched(&g);
        let whole = cross_term(&e, 0, 1, &Interval::whole(), &s).unwrap();
        assert!(whole.value.norm() < 1e-8, "{}", whole.value);
        let half = cross_term(&e, 0, 1, &Interval::new(0.0, 0.5).unwrap(), &s).unwrap();
        let want = c1 * c2.conj() * (4.0 / (3.0 * PI));
        assert!((half.value - want).norm() < 1e-3);
        assert!(cross_term(&e, 1, 1, &Interval::whole(), &s).is_err());

        let only1 = basis[0].clone();
        let e1 = expand_in_basis(&only1, &basis).unwrap();
        let mut e1z = e1.clone();
        e1z.coeffs[1] = czero();
        assert_eq!(cross_term(&e1z, 0, 1, &Interval::new(0.0, 0.5).unwrap(), &s).unwrap().value, czero());
    }

    #[test]
    fn pair_kernel_is_hermitian() {
        let g = Grid::<f64>::new(-10.0, 10.0, 1001).unwrap();
        let a = states::gaussian(g, -1.0, 0.7, 1.3).unwrap();
        let b = states::gaussian(g, 1.5, 1.1, -0.4).unwrap();
        let s = EpsSchedule::geometric(&g, 16, 4).unwrap();
        let f = Interval::new(-2.0, 3.0).unwrap();
        let ab = pair_limit(&a, &b, &f, &s).unwrap();
        let ba = pair_limit(&b, &a, &f, &s).unwrap();
        assert!((ab.value - ba.value.conj()).norm() < 1e-13);
        let direct = a.mul(&b.conj()).unwrap().integrate(&f).unwrap();
        assert!((ab.value - direct).norm() < 1e-4, "{} {}", ab.value, direct);
    }

    #[test]
    fn schedule_validation() {
        let g = well();
        assert!(EpsSchedule::from_cells(&g, vec![8, 8]).is_err());
        assert!(EpsSchedule::from_cells(&g, vec![8, 1]).is_err());
        assert!(EpsSchedule::geometric(&g, 12, 4).is_err());
        let s = EpsSchedule::from_values(&g, &[16.0 * g.dx(), 4.0 * g.dx()]).unwrap();
        assert_eq!(s.cells(), &[16, 4]);
    }
}
