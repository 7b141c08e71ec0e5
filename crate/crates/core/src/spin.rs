//! Two-level complex-probability algebra with a basis-indexed `*` pairing.
//!
//! The pairing is a bilinear form fixed by four basis values
//! ([`PairingTable`]); orthonormality is then checked by
//! [`exclusivity_sum_check`], not assumed.

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Accepted `| |c₁|²+|c₂|² - 1 |` without auto-normalisation.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Ket, forward-evolving.
    Forward,
    /// Bra, backward-evolving.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    fn index(self) -> usize {
        match self {
            Outcome::Up => 0,
            Outcome::Down => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinSide<T> {
    pub side: Side,
    /// Amplitudes on `{↑, ↓}`; already conjugated on the backward side.
    pub components: [Cplx<T>; 2],
}

impl<T: Real> SpinSide<T> {
    pub fn ket(components: [Cplx<T>; 2]) -> Self {
        Self { side: Side::Forward, components }
    }

    /// Bra built from ket amplitudes (conjugates them).
    pub fn bra_of(components: [Cplx<T>; 2]) -> Self {
        Self { side: Side::Backward, components: [components[0].conj(), components[1].conj()] }
    }

    pub fn basis(side: Side, o: Outcome) -> Self {
        let mut components = [Cplx::new(T::zero(), T::zero()); 2];
        components[o.index()] = Cplx::new(T::one(), T::zero());
        Self { side, components }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState<T> {
    c: [Cplx<T>; 2],
}

impl<T: Real> SpinState<T> {
    pub fn c1(&self) -> Cplx<T> {
        self.c[0]
    }

    pub fn c2(&self) -> Cplx<T> {
        self.c[1]
    }

    pub fn ket(&self) -> SpinSide<T> {
        SpinSide::ket(self.c)
    }

    pub fn bra(&self) -> SpinSide<T> {
        SpinSide::bra_of(self.c)
    }

    pub fn with_phase(&self, theta: T) -> Self {
        let p = Cplx::from_polar(T::one(), theta);
        Self { c: [self.c[0] * p, self.c[1] * p] }
    }
}

pub fn make_spin_state<T: Real>(c1: Cplx<T>, c2: Cplx<T>, auto_normalize: bool) -> Result<SpinState<T>> {
    let n2 = c1.norm_sqr() + c2.norm_sqr();
    if !n2.is_finite() {
        return Err(Error::Domain("spin amplitudes must be finite".into()));
    }
    if n2 == T::zero() {
        return Err(Error::Degenerate("zero spin vector".into()));
    }
    let dev = (n2 - T::one()).abs().to_f64_lossy();
    if dev > NORM_TOL && !auto_normalize {
        return Err(Error::Precondition(format!("|c1|²+|c2|² = {n2}, not 1")));
    }
    let c = if dev > 1e-15 {
        let s = n2.sqrt();
        [c1 / s, c2 / s]
    } else {
        [c1, c2]
    };
    Ok(SpinState { c })
}

/// Values `ω_j⁽¹⁾ * ω_k⁽²⁾` of the pairing between forward label `j` and
/// backward label `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingTable<T> {
    pub omega: [[Cplx<T>; 2]; 2],
}

impl<T: Real> PairingTable<T> {
    pub fn orthonormal() -> Self {
        let (o, z) = (Cplx::new(T::one(), T::zero()), Cplx::new(T::zero(), T::zero()));
        Self { omega: [[o, z], [z, o]] }
    }

    /// Diagonal fixed at 1, off-diagonal `γ` and its time-reversed `γ*`.
    pub fn with_cross(gamma: Cplx<T>) -> Self {
        let mut t = Self::orthonormal();
        t.omega[0][1] = gamma;
        t.omega[1][0] = gamma.conj();
        t
    }

    pub fn star(&self, x: &SpinSide<T>, y: &SpinSide<T>) -> Result<Cplx<T>> {
        let (bra, ket) = match (x.side, y.side) {
            (Side::Backward, Side::Forward) => (x, y),
            (Side::Forward, Side::Backward) => (y, x),
            _ => return Err(Error::Undefined("pairing two same-side objects is undefined".into())),
        };
        let mut acc = Cplx::new(T::zero(), T::zero());
        for j in 0..2 {
            for k in 0..2 {
                acc += ket.components[j] * bra.components[k] * self.omega[j][k];
            }
        }
        Ok(acc)
    }

    /// Probability of finding the particle anywhere, either spin, in state
    /// `s`: the sum of the four exclusive parts.
    fn total(&self, s: &SpinState<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for j in 0..2 {
            for k in 0..2 {
                acc += s.c[j] * s.c[k].conj() * self.omega[j][k];
            }
        }
        acc
    }
}

/// `star` under the orthonormal table.
pub fn star<T: Real>(x: &SpinSide<T>, y: &SpinSide<T>) -> Result<Cplx<T>> {
    PairingTable::orthonormal().star(x, y)
}

pub fn spin_probability<T: Real>(s: &SpinState<T>, o: Outcome) -> T {
    s.c[o.index()].norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExclusivityReport<T> {
    pub p_up: T,
    pub p_down: T,
    /// `↑` forward with `↓` backward.
    pub s3: Cplx<T>,
    /// `↓` forward with `↑` backward.
    pub s4: Cplx<T>,
    pub total: Cplx<T>,
    /// Totals for the probes `(1,1)/√2` and `(1,i)/√2`.
    pub probe_totals: [Cplx<T>; 2],
    /// Cross value recovered from the two probes.
    pub inferred_cross: Cplx<T>,
    pub passes: bool,
}

/// The four exclusive parts of "anywhere, either spin" for `s` under
/// `table`, plus the two probe states that pin down the cross value.
pub fn exclusivity_sum_check<T: Real>(s: &SpinState<T>, table: &PairingTable<T>) -> ExclusivityReport<T> {
    let c = |j: usize, k: usize| s.c[j] * s.c[k].conj() * table.omega[j][k];
    let (s3, s4) = (c(0, 1), c(1, 0));
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let probes = [
        SpinState { c: [Cplx::new(h, T::zero()), Cplx::new(h, T::zero())] },
        SpinState { c: [Cplx::new(h, T::zero()), Cplx::new(T::zero(), h)] },
    ];
    let probe_totals = probes.map(|p| table.total(&p));
    let one = Cplx::new(T::one(), T::zero());
    let inferred_cross = Cplx::new((probe_totals[0] - one).re, (probe_totals[1] - one).re);
    let total = table.total(s);
    let tol = T::lit(1e-12);
    let passes = (total - one).norm() <= tol && s3.norm() <= tol && s4.norm() <= tol && inferred_cross.norm() <= tol;
    ExclusivityReport {
        p_up: spin_probability(s, Outcome::Up),
        p_down: spin_probability(s, Outcome::Down),
        s3,
        s4,
        total,
        probe_totals,
        inferred_cross,
        passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    #[test]
    fn construction() {
        let s = make_spin_state(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2), false).unwrap();
        assert_eq!(s.bra().components, [c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)]);
        assert_eq!(s.bra().side, Side::Backward);
        let s = make_spin_state(c(0.6, 0.0), c(0.8, 0.0), false).unwrap();
        assert!((spin_probability(&s, Outcome::Up) + spin_probability(&s, Outcome::Down) - 1.0).abs() < 1e-15);
        assert!(matches!(make_spin_state(c(0.0, 0.0), c(0.0, 0.0), true), Err(Error::Degenerate(_))));
        assert!(matches!(make_spin_state(c(1.0, 0.0), c(1.0, 0.0), false), Err(Error::Precondition(_))));
        let s = make_spin_state(c(1.0, 0.0), c(1.0, 0.0), true).unwrap();
        assert!((s.c1().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pairing_values() {
        let s = make_spin_state(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2), false).unwrap();
        assert!((star(&s.bra(), &s.ket()).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let up_b = SpinSide::basis(Side::Backward, Outcome::Up);
        let down_k = SpinSide::basis(Side::Forward, Outcome::Down);
        assert_eq!(star(&up_b, &down_k).unwrap(), c(0.0, 0.0));
        assert_eq!(star(&up_b, &s.ket()).unwrap(), s.c1());
        assert_eq!(star(&s.ket(), &up_b).unwrap(), s.c1());
        assert!(matches!(star(&s.ket(), &s.ket()), Err(Error::Undefined(_))));
        assert!(matches!(star(&s.bra(), &up_b), Err(Error::Undefined(_))));
    }

    #[test]
    fn probabilities() {
        let s = make_spin_state(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2), false).unwrap();
        assert!((spin_probability(&s, Outcome::Up) - 0.5).abs() < 1e-15);
        let s = make_spin_state(c(1.0, 0.0), c(0.0, 0.0), false).unwrap();
        assert_eq!(spin_probability(&s, Outcome::Down), 0.0);
        let s = make_spin_state(c(0.6, 0.0), c(0.0, 0.8), false).unwrap();
        assert!((spin_probability(&s, Outcome::Up) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn exclusivity_under_orthonormal_table() {
        let s = make_spin_state(c(0.6, 0.0), c(0.0, 0.8), false).unwrap();
        let r = exclusivity_sum_check(&s, &PairingTable::orthonormal());
        assert!(r.passes);
        assert_eq!(r.s3, c(0.0, 0.0));
        assert!((r.total - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn probes_recover_a_planted_cross_value() {
        let gamma = c(0.3, -0.2);
        let table = PairingTable::with_cross(gamma);
        let s = make_spin_state(c(0.6, 0.0), c(0.8, 0.0), false).unwrap();
        let r = exclusivity_sum_check(&s, &table);
        assert!(!r.passes);
        assert!((r.inferred_cross - gamma).norm() < 1e-15);
        assert!((r.probe_totals[0].re - 1.3).abs() < 1e-15);
        assert!((r.probe_totals[1].re - 0.8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn star_is_hermitian_and_phase_blind(
            a in -1.0f64..1.0, b in -1.0f64..1.0, p in -1.0f64..1.0, q in -1.0f64..1.0,
            e in -1.0f64..1.0, f in -1.0f64..1.0, g in -1.0f64..1.0, h in -1.0f64..1.0,
            theta in -3.2f64..3.2,
        ) {
            prop_assume!(a * a + b * b + p * p + q * q > 1e-3 && e * e + f * f + g * g + h * h > 1e-3);
            let phi = make_spin_state(c(a, b), c(p, q), true).unwrap();
            let psi = make_spin_state(c(e, f), c(g, h), true).unwrap();
            let x = star(&phi.bra(), &psi.ket()).unwrap();
            let y = star(&psi.bra(), &phi.ket()).unwrap();
            prop_assert!((x - y.conj()).norm() < 1e-14);
            let rot = psi.with_phase(theta);
            for o in [Outcome::Up, Outcome::Down] {
                prop_assert!((spin_probability(&rot, o) - spin_probability(&psi, o)).abs() < 1e-14);
            }
            let total = spin_probability(&psi, Outcome::Up) + spin_probability(&psi, Outcome::Down);
            prop_assert!((total - 1.0).abs() < 1e-14);
            prop_assert!(exclusivity_sum_check(&psi, &PairingTable::orthonormal()).passes);
        }
    }
}
