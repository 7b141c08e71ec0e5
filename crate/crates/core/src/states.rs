//! Closed-form states used as initial conditions and oracles.

use crate::error::{domain, Result};
use crate::lattice::{ComplexField, Grid};
use crate::scalar::{cplx, Cplx, Real};

/// `(2πσ²)^(-1/4) exp(-(x-x0)²/4σ² + ikx)`, then renormalised on the grid.
pub fn gaussian<T: Real>(grid: Grid<T>, x0: T, sigma: T, k: T) -> Result<ComplexField<T>> {
    if !(sigma > T::zero()) {
        return domain(format!("gaussian width must be positive, got {sigma}"));
    }
    let a = (T::lit(2.0) * T::PI() * sigma * sigma).powf(T::lit(-0.25));
    let four_s2 = T::lit(4.0) * sigma * sigma;
    ComplexField::from_fn(grid, |x| {
        let d = x - x0;
        Cplx::from_polar(a * (-d * d / four_s2).exp(), k * x)
    })?
    .normalized()
}

/// Analytic free evolution of [`gaussian`] at time `t` (unit mass), without
/// renormalisation.
pub fn free_gaussian_at<T: Real>(grid: Grid<T>, x0: T, sigma: T, k: T, t: T) -> Result<ComplexField<T>> {
    ComplexField::from_fn(grid, |x| free_gaussian_value(x, x0, sigma, k, t))
}

/// Pointwise value behind [`free_gaussian_at`].
pub fn free_gaussian_value<T: Real>(x: T, x0: T, sigma: T, k: T, t: T) -> Cplx<T> {
    let st = cplx(sigma * sigma, t * T::lit(0.5));
    let pref = (T::lit(2.0) * T::PI()).powf(T::lit(-0.25)) * sigma.sqrt();
    let xc = x - x0 - k * t;
    let expo = cplx(-xc * xc / T::lit(4.0), T::zero()) / st
        + cplx(T::zero(), k * (x - x0) - k * k * t * T::lit(0.5) + k * x0);
    (st.powf(T::lit(-0.5)) * expo.exp()).scale(pref)
}

/// Analytic spread `σ(t)² = σ² + t²/(4σ²)` of a free packet.
pub fn free_gaussian_variance<T: Real>(sigma: T, t: T) -> T {
    sigma * sigma + t * t / (T::lit(4.0) * sigma * sigma)
}

/// `√(2/L) sin(nπ(x - x_min)/L)` on the grid span `L`.
pub fn well_eigenstate<T: Real>(grid: Grid<T>, n: usize) -> Result<ComplexField<T>> {
    if n == 0 {
        return domain("well eigenstates start at n = 1");
    }
    let len = grid.x_max() - grid.x_min();
    let a = (T::lit(2.0) / len).sqrt();
    let kn = T::PI() * T::from_usize_lossy(n) / len;
    let x0 = grid.x_min();
    let n_last = grid.len() - 1;
    let vals = grid
        .xs()
        .enumerate()
        .map(|(i, x)| {
            // pin the walls so the Dirichlet nodes carry exact zeros
            let v = if i == 0 || i == n_last { T::zero() } else { a * (kn * (x - x0)).sin() };
            cplx(v, T::zero())
        })
        .collect();
    ComplexField::new(grid, vals)
}

/// Well eigenenergy `n²π²/(2L²)` (unit mass).
pub fn well_energy<T: Real>(len: T, n: usize) -> T {
    let k = T::PI() * T::from_usize_lossy(n) / len;
    k * k * T::lit(0.5)
}

/// `π^(-1/4) exp(-x²/2)`, ground state of `V = x²/2`.
pub fn harmonic_ground<T: Real>(grid: Grid<T>) -> Result<ComplexField<T>> {
    let a = T::PI().powf(T::lit(-0.25));
    ComplexField::from_fn(grid, |x| cplx(a * (-x * x * T::lit(0.5)).exp(), T::zero()))
}

/// `e^{ikx}`.
pub fn plane_wave<T: Real>(grid: Grid<T>, k: T) -> Result<ComplexField<T>> {
    ComplexField::from_fn(grid, |x| Cplx::from_polar(T::one(), k * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_basis_is_trapezoid_orthonormal() {
        let g = Grid::<f64>::new(0.0, 1.0, 2049).unwrap();
        let b: Vec<_> = (1..=6).map(|n| well_eigenstate(g, n).unwrap()).collect();
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                let v = bi.inner(bj).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v.re - want).abs() < 1e-13 && v.im.abs() < 1e-15, "{i} {j} {v}");
            }
        }
    }

    #[test]
    fn free_gaussian_at_zero_matches_initial() {
        let g = Grid::<f64>::new(-20.0, 20.0, 2048).unwrap();
        let a = gaussian(g, 0.5, 1.0, 2.0).unwrap();
        let b = free_gaussian_at(g, 0.5, 1.0, 2.0, 0.0).unwrap();
        assert!(a.l2_distance(&b).unwrap() < 1e-8);
        let later = free_gaussian_at(g, 0.5, 1.0, 2.0, 1.0).unwrap();
        assert!((later.l2_norm_sq().unwrap() - 1.0).abs() < 1e-8);
    }
}
