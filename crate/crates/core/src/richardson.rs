//! Richardson extrapolation of a sequence sampled at `h, h/2, h/4, ...`.

use crate::error::{precondition, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Extrapolation<T> {
    pub value: T,
    /// `|R_{L-1,L-1} - R_{L-2,L-2}|`, the usual a-posteriori error estimate.
    pub error_estimate: T,
    /// Lower-triangular tableau, row `k` holds `R_{k,0..=k}`.
    pub tableau: Vec<Vec<T>>,
}

/// Eliminates the error terms `h^{p_1}, h^{p_2}, ...` in turn for samples
/// taken at a halving step. `powers.len()` must be at least `values.len() - 1`.
pub fn richardson<T: Real>(values: &[T], powers: &[u32]) -> Result<Extrapolation<T>> {
    let l = values.len();
    if l == 0 {
        return precondition("richardson needs at least one sample");
    }
    if powers.len() + 1 < l {
        return precondition(format!("{} samples need {} error powers", l, l - 1));
    }
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(l);
    for k in 0..l {
        let mut row = vec![values[k]];
        for j in 1..=k {
            let f = T::lit(2f64.powi(powers[j - 1] as i32)) - T::one();
            let r = row[j - 1] + (row[j - 1] - tab[k - 1][j - 1]) / f;
            row.push(r);
        }
        tab.push(row);
    }
    let value = tab[l - 1][l - 1];
    let error_estimate = if l > 1 { (value - tab[l - 2][l - 2]).abs() } else { T::infinity() };
    Ok(Extrapolation { value, error_estimate, tableau: tab })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_polynomial_error_exactly() {
        let f = |h: f64| 1.0 + 0.3 * h * h - 0.7 * h.powi(4) + 0.11 * h.powi(6);
        let v: Vec<f64> = (0..4).map(|k| f(0.5 / 2f64.powi(k))).collect();
        let r = richardson(&v, &[2, 4, 6]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn all_powers_variant() {
        let f = |h: f64| 2.0 - h + 0.5 * h * h + 0.25 * h.powi(3);
        let v: Vec<f64> = (0..4).map(|k| f(1.0 / 2f64.powi(k))).collect();
        let r = richardson(&v, &[1, 2, 3]).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        assert!(richardson(&v, &[1]).is_err());
    }
}
