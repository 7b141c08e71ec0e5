//! Uniform 1-D grid, complex/real sampled fields and trapezoidal quadrature.
//!
//! Every other module works on fields sampled at the nodes of a [`Grid`].
//! Fields are immutable once built and validate their values on construction,
//! so downstream code never sees a NaN that was not produced by its own math.

use std::io::{Read, Write};

use crate::error::{domain, precondition, Error, Result};
use crate::scalar::{czero, Cplx, Real};

pub const MIN_POINTS: usize = 8;

/// Uniform grid `x_i = x_min + i*dx`, `i = 0..n`, both endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    x_min: T,
    x_max: T,
    n: usize,
    dx: T,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return domain(format!("grid needs at least {MIN_POINTS} points, got {n}"));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return domain(format!("grid bounds must be finite with x_max > x_min, got [{x_min}, {x_max}]"));
        }
        let dx = (x_max - x_min) / T::from_usize_lossy(n - 1);
        Ok(Self { x_min, x_max, n, dx })
    }

    #[inline]
    pub fn x_min(&self) -> T {
        self.x_min
    }

    #[inline]
    pub fn x_max(&self) -> T {
        self.x_max
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + self.dx * T::from_usize_lossy(i)
    }

    pub fn xs(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: T) -> usize {
        if x <= self.x_min {
            return 0;
        }
        if x >= self.x_max {
            return self.n - 1;
        }
        let i = ((x - self.x_min) / self.dx).round().to_usize().unwrap_or(0);
        i.min(self.n - 1)
    }

    /// Snaps an interval to grid nodes. Infinite endpoints clamp to the grid
    /// edges (the half-line or whole-line cases); a finite endpoint more than
    /// half a spacing outside the grid is a domain error.
    pub fn snap(&self, f: &Interval<T>) -> Result<SnappedInterval<T>> {
        let half = self.dx * T::lit(0.5);
        let check = |x: T| -> Result<()> {
            if x.is_finite() && (x < self.x_min - half || x > self.x_max + half) {
                return domain(format!(
                    "interval endpoint {x} outside grid [{}, {}]",
                    self.x_min, self.x_max
                ));
            }
            Ok(())
        };
        check(f.lo)?;
        check(f.hi)?;
        let first = self.nearest(f.lo);
        let last = self.nearest(f.hi);
        let dist = |x: T, i: usize| if x.is_finite() { (x - self.x(i)).abs() } else { T::zero() };
        Ok(SnappedInterval {
            first,
            last,
            snap_lo: dist(f.lo, first),
            snap_hi: dist(f.hi, last),
        })
    }

    /// Trapezoid weights restricted to the node range `first..=last`.
    pub(crate) fn trapezoid_weight(&self, i: usize, first: usize, last: usize) -> T {
        if i < first || i > last || first == last {
            T::zero()
        } else if i == first || i == last {
            self.dx * T::lit(0.5)
        } else {
            self.dx
        }
    }
}

/// Closed interval `[lo, hi]`. Infinite endpoints mean "to the grid edge".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return domain(format!("interval needs lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    /// The whole line, realised as the full grid.
    pub fn whole() -> Self {
        Self { lo: T::neg_infinity(), hi: T::infinity() }
    }

    pub fn is_whole(&self) -> bool {
        self.lo == T::neg_infinity() && self.hi == T::infinity()
    }

    /// Pieces of the line not covered by `self`. Adjacent pieces share the
    /// endpoint node, which carries zero measure under the trapezoid rule.
    pub fn complement(&self) -> Vec<Interval<T>> {
        let mut out = Vec::with_capacity(2);
        if self.lo > T::neg_infinity() {
            out.push(Interval { lo: T::neg_infinity(), hi: self.lo });
        }
        if self.hi < T::infinity() {
            out.push(Interval { lo: self.hi, hi: T::infinity() });
        }
        out
    }
}

/// An interval after snapping to nodes `first..=last`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnappedInterval<T> {
    pub first: usize,
    pub last: usize,
    pub snap_lo: T,
    pub snap_hi: T,
}

impl<T: Real> SnappedInterval<T> {
    /// Largest distance an endpoint moved while snapping.
    pub fn snap_distance(&self) -> T {
        self.snap_lo.max(self.snap_hi)
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.first && i <= self.last
    }
}

fn trapezoid<T: Real, V>(dx: T, vals: &[V]) -> V
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Mul<T, Output = V> + num_traits::Zero,
{
    match vals.len() {
        0 | 1 => V::zero(),
        n => {
            let inner = vals[1..n - 1].iter().fold(V::zero(), |acc, &v| acc + v);
            (inner + (vals[0] + vals[n - 1]) * T::lit(0.5)) * dx
        }
    }
}

/// Complex field sampled on a grid; houses a wavefunction or its conjugate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField<T> {
    grid: Grid<T>,
    values: Vec<Cplx<T>>,
}

impl<T: Real> ComplexField<T> {
    pub fn new(grid: Grid<T>, values: Vec<Cplx<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return precondition(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Numeric(format!("field value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> Cplx<T>) -> Result<Self> {
        Self::new(grid, grid.xs().map(f).collect())
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, values: vec![czero(); grid.len()] }
    }

    /// Skips the finiteness scan; callers guarantee finite values.
    pub(crate) fn from_vec_unchecked(grid: Grid<T>, values: Vec<Cplx<T>>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Cplx<T>> {
        self.values
    }

    pub fn conj(&self) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn scale(&self, c: Cplx<T>) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| v * c).collect())
    }

    /// Pointwise `a*self + b*other` on the same grid.
    pub fn combine(&self, a: Cplx<T>, other: &Self, b: Cplx<T>) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&u, &v)| u * a + v * b).collect(),
        )
    }

    /// Pointwise product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&u, &v)| u * v).collect())
    }

    /// `|f|^2` as a real field.
    pub fn density(&self) -> RealField<T> {
        RealField::from_vec_unchecked(self.grid, self.values.iter().map(|v| v.norm_sqr()).collect())
    }

    pub fn integrate(&self, f: &Interval<T>) -> Result<Cplx<T>> {
        let s = self.grid.snap(f)?;
        Ok(trapezoid(self.grid.dx, &self.values[s.first..=s.last]))
    }

    /// `∫ |f|^2 dx` over the whole grid.
    pub fn l2_norm_sq(&self) -> Result<T> {
        let dens: Vec<T> = self.values.iter().map(|v| v.norm_sqr()).collect();
        let v = trapezoid(self.grid.dx, &dens);
        if !v.is_finite() {
            return Err(Error::Numeric("squared norm overflowed".into()));
        }
        Ok(v)
    }

    /// `∫ conj(self) * other dx` over the whole grid.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        self.same_grid(other)?;
        let prod: Vec<Cplx<T>> = self.values.iter().zip(&other.values).map(|(u, &v)| u.conj() * v).collect();
        Ok(trapezoid(self.grid.dx, &prod))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.l2_norm_sq()?;
        if n <= T::zero() {
            return Err(Error::Degenerate("cannot normalise a zero field".into()));
        }
        self.scale(Cplx::new(T::one() / n.sqrt(), T::zero()))
    }

    /// L2 distance `(∫ |self - other|^2)^(1/2)`.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        let diff: Vec<T> = self.values.iter().zip(&other.values).map(|(&u, &v)| (u - v).norm_sqr()).collect();
        Ok(trapezoid(self.grid.dx, &diff).sqrt())
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return precondition("fields live on different grids");
        }
        Ok(())
    }

    /// CSV with header `x,re,im`, one row per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "re", "im"])?;
        for (x, v) in self.grid.xs().zip(&self.values) {
            wtr.write_record([x.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Real field sampled on a grid; houses densities, velocities and potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> RealField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return precondition(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("field value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid, grid.xs().map(f).collect())
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Linear interpolation of scattered samples `(xs, vs)` onto `grid`,
    /// held constant beyond the sample range. `xs` must be increasing.
    pub fn from_samples(grid: Grid<T>, xs: &[T], vs: &[T]) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return precondition("need at least two (x, value) samples of equal length");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return precondition("sample abscissae must be strictly increasing");
        }
        let values = grid
            .xs()
            .map(|x| {
                if x <= xs[0] {
                    return vs[0];
                }
                if x >= xs[xs.len() - 1] {
                    return vs[vs.len() - 1];
                }
                let k = xs.partition_point(|&s| s <= x) - 1;
                let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
                vs[k] + (vs[k + 1] - vs[k]) * t
            })
            .collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn integrate(&self, f: &Interval<T>) -> Result<T> {
        let s = self.grid.snap(f)?;
        Ok(trapezoid(self.grid.dx, &self.values[s.first..=s.last]))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// Running trapezoid integral from the left edge; `out[0] == 0`.
    pub fn cumulative(&self) -> Vec<T> {
        let half = self.grid.dx * T::lit(0.5);
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(acc);
        for w in self.values.windows(2) {
            acc += (w[0] + w[1]) * half;
            out.push(acc);
        }
        out
    }

    /// Linear interpolation at `x`, clamped to the end values outside the grid.
    pub fn interpolate(&self, x: T) -> T {
        let g = &self.grid;
        if x <= g.x_min {
            return self.values[0];
        }
        if x >= g.x_max {
            return self.values[g.n - 1];
        }
        let s = (x - g.x_min) / g.dx;
        let i = s.floor().to_usize().unwrap_or(0).min(g.n - 2);
        let t = s - T::from_usize_lossy(i);
        self.values[i] + (self.values[i + 1] - self.values[i]) * t
    }

    /// L2 distance `(∫ (self - other)^2)^(1/2)`.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        if self.grid != other.grid {
            return precondition("fields live on different grids");
        }
        let diff: Vec<T> = self.values.iter().zip(&other.values).map(|(&u, &v)| (u - v) * (u - v)).collect();
        Ok(trapezoid(self.grid.dx, &diff).sqrt())
    }

    /// CSV with header `x,value`, one row per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "value"])?;
        for (x, v) in self.grid.xs().zip(&self.values) {
            wtr.write_record([x.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads an `x,value` CSV (header required) and interpolates it onto `grid`.
    pub fn read_csv<R: Read>(grid: Grid<T>, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |col: usize| -> Result<T> {
                let s = rec.get(col).ok_or_else(|| Error::Domain(format!("row {}: missing column {col}", row + 2)))?;
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Domain(format!("row {}: cannot parse {s:?} as a number", row + 2)))?;
                Ok(T::lit(v))
            };
            xs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        Self::from_samples(grid, &xs, &vs)
    }
}
