//! Thomas elimination for tridiagonal systems, plain and cyclic.
//!
//! The factorisation is stored so a constant matrix (Crank–Nicolson, implicit
//! heat steps) is eliminated once and then applied to every right-hand side.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{precondition, Error, Result};
use crate::scalar::{Cplx, Real};

/// Entry type of a tridiagonal system: a real scalar or a complex number.
pub trait Entry:
    Copy
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn magnitude(self) -> f64;
}

impl<T: Real> Entry for T {
    fn magnitude(self) -> f64 {
        self.abs().to_f64_lossy()
    }
}

impl<T: Real> Entry for Cplx<T> {
    fn magnitude(self) -> f64 {
        self.norm().to_f64_lossy()
    }
}

/// LU factors of a tridiagonal matrix with sub-diagonal `a`, diagonal `b` and
/// super-diagonal `c` (`a[0]` and `c[n-1]` are ignored).
#[derive(Clone, Debug)]
pub struct Tridiag<E> {
    a: Vec<E>,
    c_prime: Vec<E>,
    inv_pivot: Vec<E>,
}

const PIVOT_FLOOR: f64 = 1e-300;

impl<E: Entry> Tridiag<E> {
    pub fn factor(a: Vec<E>, b: Vec<E>, c: Vec<E>) -> Result<Self> {
        let n = b.len();
        if n == 0 || a.len() != n || c.len() != n {
            return precondition("tridiagonal bands must be non-empty and of equal length");
        }
        let mut c_prime = vec![E::zero(); n];
        let mut inv_pivot = vec![E::zero(); n];
        let mut prev_c = E::zero();
        for i in 0..n {
            let pivot = if i == 0 { b[0] } else { b[i] - a[i] * prev_c };
            let m = pivot.magnitude();
            if !(m > PIVOT_FLOOR) || !m.is_finite() {
                return Err(Error::Solver {
                    residual: m,
                    reason: format!("zero or non-finite pivot at row {i}"),
                });
            }
            inv_pivot[i] = E::one() / pivot;
            prev_c = c[i] * inv_pivot[i];
            c_prime[i] = prev_c;
        }
        Ok(Self { a, c_prime, inv_pivot })
    }

    /// Constant-coefficient matrix of size `n`.
    pub fn constant(n: usize, sub: E, diag: E, sup: E) -> Result<Self> {
        Self::factor(vec![sub; n], vec![diag; n], vec![sup; n])
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [E]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n {
            return precondition(format!("rhs has length {}, matrix has {n} rows", rhs.len()));
        }
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.a[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.c_prime[i] * rhs[i + 1];
        }
        if let Some(i) = rhs.iter().position(|v| !v.magnitude().is_finite()) {
            return Err(Error::Solver { residual: f64::INFINITY, reason: format!("non-finite solution at row {i}") });
        }
        Ok(())
    }
}

/// Cyclic tridiagonal matrix with constant off-diagonals (corner entries `sub` at
/// `(0, n-1)` and `sup` at `(n-1, 0)`), solved by Sherman–Morrison.
#[derive(Clone, Debug)]
pub struct CyclicTridiag<E> {
    inner: Tridiag<E>,
    z: Vec<E>,
    gamma: E,
    sub: E,
}

impl<E: Entry> CyclicTridiag<E> {
    pub fn constant(n: usize, sub: E, diag: E, sup: E) -> Result<Self> {
        Self::new(sub, vec![diag; n], sup)
    }

    /// Constant off-diagonals, varying diagonal.
    pub fn new(sub: E, diag: Vec<E>, sup: E) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return precondition("cyclic system needs at least three rows");
        }
        let gamma = -diag[0];
        let mut b = diag;
        b[0] = b[0] - gamma;
        b[n - 1] = b[n - 1] - sup * sub / gamma;
        let inner = Tridiag::factor(vec![sub; n], b, vec![sup; n])?;
        let mut z = vec![E::zero(); n];
        z[0] = gamma;
        z[n - 1] = sup;
        inner.solve_in_place(&mut z)?;
        Ok(Self { inner, z, gamma, sub })
    }

    pub fn solve_in_place(&self, rhs: &mut [E]) -> Result<()> {
        self.inner.solve_in_place(rhs)?;
        let n = rhs.len();
        let vy = rhs[0] + self.sub * rhs[n - 1] / self.gamma;
        let vz = self.z[0] + self.sub * self.z[n - 1] / self.gamma;
        let denom = E::one() + vz;
        if !(denom.magnitude() > PIVOT_FLOOR) {
            return Err(Error::Solver { residual: denom.magnitude(), reason: "singular cyclic correction".into() });
        }
        let f = vy / denom;
        for (r, &z) in rhs.iter_mut().zip(&self.z) {
            *r = *r - f * z;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(a: &[f64], b: &[f64], c: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += c[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_laplacian_system() {
        let n = 50;
        let (a, b, c) = (vec![-1.0; n], vec![2.5; n], vec![-1.0; n]);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut r = matvec(&a, &b, &c, &x);
        Tridiag::factor(a, b, c).unwrap().solve_in_place(&mut r).unwrap();
        for (u, v) in r.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_solver_error() {
        let err = Tridiag::factor(vec![0.0; 3], vec![0.0, 1.0, 1.0], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }

    #[test]
    fn cyclic_matches_dense_product() {
        let n = 17;
        let (sub, diag, sup) = (Cplx::new(-0.5, 0.25), Cplx::new(2.0, 1.0), Cplx::new(-0.5, 0.25));
        let x: Vec<Cplx<f64>> = (0..n).map(|i| Cplx::new((i as f64).cos(), (i as f64 * 0.7).sin())).collect();
        let mut r: Vec<Cplx<f64>> = (0..n)
            .map(|i| diag * x[i] + sub * x[(i + n - 1) % n] + sup * x[(i + 1) % n])
            .collect();
        CyclicTridiag::constant(n, sub, diag, sup).unwrap().solve_in_place(&mut r).unwrap();
        for (u, v) in r.iter().zip(&x) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn diagonally_dominant_roundtrip(x in prop::collection::vec(-10.0..10.0f64, 2..40),
                                         off in -1.0..1.0f64, extra in 0.1..5.0f64) {
            let n = x.len();
            let a = vec![off; n];
            let c = vec![-off * 0.5; n];
            let b = vec![off.abs() * 1.5 + extra; n];
            let mut r = matvec(&a, &b, &c, &x);
            Tridiag::factor(a, b, c).unwrap().solve_in_place(&mut r).unwrap();
            for (u, v) in r.iter().zip(&x) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
