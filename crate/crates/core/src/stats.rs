//! Empirical-distribution helpers: Kolmogorov–Smirnov distances and
//! grid-aligned histograms.

use crate::error::{precondition, Result};
use crate::lattice::{Grid, RealField};
use crate::scalar::Real;

/// CDF of a grid density: trapezoid running integral, normalised to end at
/// one, linearly interpolated between nodes.
#[derive(Clone, Debug)]
pub struct GridCdf<T> {
    grid: Grid<T>,
    cum: Vec<T>,
}

impl<T: Real> GridCdf<T> {
    pub fn new(density: &RealField<T>) -> Result<Self> {
        let mut cum = density.cumulative();
        let total = cum[cum.len() - 1];
        if !(total > T::zero()) {
            return precondition("density has no mass");
        }
        cum.iter_mut().for_each(|c| *c /= total);
        Ok(Self { grid: *density.grid(), cum })
    }

    pub fn eval(&self, x: T) -> T {
        let g = &self.grid;
        if x <= g.x_min() {
            return T::zero();
        }
        if x >= g.x_max() {
            return T::one();
        }
        let s = (x - g.x_min()) / g.dx();
        let i = s.floor().to_usize().unwrap_or(0).min(g.len() - 2);
        let t = s - T::from_usize_lossy(i);
        self.cum[i] + (self.cum[i + 1] - self.cum[i]) * t
    }
}

fn sorted<T: Real>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    v
}

/// One-sample KS statistic `sup |F_n - F|`.
pub fn ks_one_sample<T: Real>(samples: &[T], cdf: &GridCdf<T>) -> T {
    let s = sorted(samples);
    let n = T::from_usize_lossy(s.len().max(1));
    let mut d = T::zero();
    for (i, &x) in s.iter().enumerate() {
        let f = cdf.eval(x);
        let lo = T::from_usize_lossy(i) / n;
        let hi = T::from_usize_lossy(i + 1) / n;
        d = d.max((hi - f).abs()).max((f - lo).abs());
    }
    d
}

/// Two-sample KS statistic; symmetric in its arguments.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> T {
    let (a, b) = (sorted(a), sorted(b));
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let diff = T::from_usize_lossy(i) / na - T::from_usize_lossy(j) / nb;
        d = d.max(diff.abs());
    }
    d
}

/// Bin index on `bins` whose cells are centred on the nodes (the two end
/// cells are half width), so a trapezoid integral of counts/width is exact.
pub fn node_bin<T: Real>(bins: &Grid<T>, x: T) -> Option<usize> {
    if x < bins.x_min() || x > bins.x_max() {
        return None;
    }
    Some(bins.nearest(x))
}

pub fn node_bin_width<T: Real>(bins: &Grid<T>, i: usize) -> T {
    if i == 0 || i + 1 == bins.len() {
        bins.dx() * T::lit(0.5)
    } else {
        bins.dx()
    }
}

/// Histogram density on node-centred bins; integrates to one under the
/// trapezoid rule when every sample is inside the grid.
pub fn histogram_density<T: Real>(bins: &Grid<T>, samples: &[T]) -> (RealField<T>, Vec<usize>) {
    let mut counts = vec![0usize; bins.len()];
    for &x in samples {
        if let Some(i) = node_bin(bins, x) {
            counts[i] += 1;
        }
    }
    let n = T::from_usize_lossy(samples.len().max(1));
    let vals = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| T::from_usize_lossy(c) / (n * node_bin_width(bins, i)))
        .collect();
    (RealField::from_vec_unchecked(*bins, vals), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Interval;

    #[test]
    fn cdf_of_uniform_is_linear() {
        let g = Grid::<f64>::new(0.0, 1.0, 11).unwrap();
        let c = GridCdf::new(&RealField::from_fn(g, |_| 1.0).unwrap()).unwrap();
        assert!((c.eval(0.37) - 0.37).abs() < 1e-14);
        assert_eq!(c.eval(-1.0), 0.0);
        assert_eq!(c.eval(2.0), 1.0);
    }

    #[test]
    fn ks_of_perfect_quantiles_is_one_over_n() {
        let g = Grid::<f64>::new(0.0, 1.0, 11).unwrap();
        let c = GridCdf::new(&RealField::from_fn(g, |_| 1.0).unwrap()).unwrap();
        let n = 100;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_one_sample(&s, &c) - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn two_sample_symmetric_and_exact() {
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [0.25, 0.35, 0.45, 0.55];
        assert_eq!(ks_two_sample(&a, &b), ks_two_sample(&b, &a));
        assert!((ks_two_sample(&a, &b) - 0.5f64).abs() < 1e-15);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn histogram_integrates_to_one() {
        let g = Grid::<f64>::new(-2.0, 2.0, 41).unwrap();
        let s: Vec<f64> = (0..1000).map(|i| -2.0 + 4.0 * (i as f64 * 0.618).fract()).collect();
        let (d, counts) = histogram_density(&g, &s);
        assert_eq!(counts.iter().sum::<usize>(), 1000);
        assert!((d.integrate(&Interval::whole()).unwrap() - 1.0).abs() < 1e-12);
    }
}
