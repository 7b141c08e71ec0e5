//! Measure-level calculus of complex-valued events.
//!
//! Events are labels carrying a complex measure, not outcome sets. Only the
//! combinations the theory actually defines are computed; anything else
//! between non-real events is [`Error::Undefined`].

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Tolerance for identities of pure complex arithmetic.
pub const EXACT_TOL: f64 = 1e-15;
/// Tolerance for identities fed by quadrature.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    /// Hyper-sample space.
    OmegaH,
    /// Real sample space.
    Omega,
    /// Forward-evolving event `T → {x ∈ F, t_c}`.
    T,
    /// Backward-evolving event `A → {x ∈ F, t_c}`.
    A,
    /// `T ∩ A`, the real event.
    S,
    /// `T ∩ Aᶜ`.
    J1,
    /// `A ∩ Tᶜ`.
    J2,
}

impl Event {
    /// Events contained in the real sample space carry real measures.
    pub fn is_real(self) -> bool {
        matches!(self, Event::Omega | Event::OmegaH | Event::S)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Event::OmegaH => "Ω_h",
            Event::Omega => "Ω",
            Event::T => "T",
            Event::A => "A",
            Event::S => "S",
            Event::J1 => "J₁",
            Event::J2 => "J₂",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventMeasure<T> {
    pub event: Event,
    pub value: Cplx<T>,
}

/// Forward/backward decomposition of one detection event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition<T> {
    pub p_t: Cplx<T>,
    pub p_a: Cplx<T>,
    pub s: T,
    /// `P_T - s`, the measure of `J₁`.
    pub d1: Cplx<T>,
    /// `P_A - s`, the measure of `J₂`.
    pub d2: Cplx<T>,
    pub kind: DecompositionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionKind {
    /// `P_T = P_A*` with non-real parts: the quantum case.
    Nonreal,
    /// `P_T = P_A*` with everything real and `d ≠ 0`.
    ClassicalDegenerate,
    /// `P_T = P_A = s`: `T = A = S`, which the theory rules out.
    Collapsed,
    /// `P_T ≠ P_A*`.
    Inconsistent,
}

impl<T: Real> Decomposition<T> {
    pub fn consistent(&self) -> bool {
        self.kind != DecompositionKind::Inconsistent
    }

    pub fn measure(&self, e: Event) -> Cplx<T> {
        let one = Cplx::new(T::one(), T::zero());
        match e {
            Event::OmegaH | Event::Omega => one,
            Event::T => self.p_t,
            Event::A => self.p_a,
            Event::S => Cplx::new(self.s, T::zero()),
            Event::J1 => self.d1,
            Event::J2 => self.d2,
        }
    }

    pub fn measures(&self) -> Vec<EventMeasure<T>> {
        [Event::OmegaH, Event::Omega, Event::T, Event::A, Event::S, Event::J1, Event::J2]
            .into_iter()
            .map(|event| EventMeasure { event, value: self.measure(event) })
            .collect()
    }
}

/// `d₁ = P_T - s`, `d₂ = P_A - s`; consistency means `P_T = P_A*` within
/// `tol` (use [`EXACT_TOL`] or [`QUADRATURE_TOL`]).
pub fn decompose_event_tol<T: Real>(p_t: Cplx<T>, p_a: Cplx<T>, s: T, tol: f64) -> Decomposition<T> {
    let sc = Cplx::new(s, T::zero());
    let d1 = p_t - sc;
    let d2 = p_a - sc;
    let close = |z: Cplx<T>| z.norm().to_f64_lossy() <= tol;
    let kind = if !close(p_t - p_a.conj()) {
        DecompositionKind::Inconsistent
    } else if close(d1) && close(d2) {
        DecompositionKind::Collapsed
    } else if d1.im.to_f64_lossy().abs() <= tol {
        DecompositionKind::ClassicalDegenerate
    } else {
        DecompositionKind::Nonreal
    };
    Decomposition { p_t, p_a, s, d1, d2, kind }
}

pub fn decompose_event<T: Real>(p_t: Cplx<T>, p_a: Cplx<T>, s: T) -> Decomposition<T> {
    decompose_event_tol(p_t, p_a, s, EXACT_TOL)
}

/// Intersection of two labelled events, where the theory defines it.
pub fn intersect(a: Event, b: Event) -> Result<Event> {
    use Event::*;
    if a == b {
        return Ok(a);
    }
    let (x, y) = if (a as u8) <= (b as u8) { (a, b) } else { (b, a) };
    match (x, y) {
        (OmegaH, e) => Ok(e),
        (Omega, S) | (T, A) | (T, S) | (A, S) => Ok(S),
        (T, J1) => Ok(J1),
        (A, J2) => Ok(J2),
        _ => Err(Error::Undefined(format!("{a} ∩ {b} is not defined for non-real events"))),
    }
}

/// Union of two labelled events, where the theory defines it.
pub fn union(a: Event, b: Event) -> Result<Event> {
    use Event::*;
    if a == b {
        return Ok(a);
    }
    let (x, y) = if (a as u8) <= (b as u8) { (a, b) } else { (b, a) };
    match (x, y) {
        (OmegaH, _) => Ok(OmegaH),
        (Omega, S) => Ok(Omega),
        (S, J1) | (T, S) | (T, J1) => Ok(T),
        (A, S) | (S, J2) | (A, J2) => Ok(A),
        _ => Err(Error::Undefined(format!("{a} ∪ {b} is not defined for non-real events"))),
    }
}

/// Solution of `z₁ = z₁z₂ + δ₁`, `z₂ = z₁z₂ + δ₂` with `z₁ = z`, `z₂ = z*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntangledPair<T> {
    pub z1: Cplx<T>,
    pub z2: Cplx<T>,
    pub s: Cplx<T>,
    pub d1: Cplx<T>,
    pub d2: Cplx<T>,
}

impl<T: Real> EntangledPair<T> {
    /// Largest violation of the pair identities.
    pub fn identity_residual(&self) -> T {
        [
            (self.z1 - self.z2.conj()).norm(),
            (self.d1 - self.d2.conj()).norm(),
            self.s.im.abs(),
            (self.z1 - self.s - self.d1).norm(),
            (self.z2 - self.s - self.d2).norm(),
            (self.z1 * self.z2 - self.s).norm(),
        ]
        .into_iter()
        .fold(T::zero(), T::max)
    }
}

pub fn entangled_pair_solve<T: Real>(z: Cplx<T>) -> Result<EntangledPair<T>> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("z = {z} is not finite")));
    }
    let s = Cplx::new(z.norm_sqr(), T::zero());
    let d1 = z - s;
    Ok(EntangledPair { z1: z, z2: z.conj(), s, d1, d2: d1.conj() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperMeasureCheck<T> {
    /// `μ(Ω) = 1` and `μ(J₁) + μ(J₂) = 0`.
    pub holds: bool,
    /// Both J parts are nonzero and real: the sum rule is met only
    /// classically.
    pub real_valued_j_parts: bool,
    pub sum_residual: T,
}

pub fn hyper_measure_check<T: Real>(mu_omega: Cplx<T>, mu_j1: Cplx<T>, mu_j2: Cplx<T>) -> HyperMeasureCheck<T> {
    let tol = T::lit(EXACT_TOL);
    let sum_residual = (mu_j1 + mu_j2).norm();
    let omega_ok = (mu_omega - Cplx::new(T::one(), T::zero())).norm() <= tol;
    let nonzero = |z: Cplx<T>| z.norm() > tol;
    let real = |z: Cplx<T>| z.im.abs() <= tol;
    HyperMeasureCheck {
        holds: omega_ok && sum_residual <= tol,
        real_valued_j_parts: nonzero(mu_j1) && nonzero(mu_j2) && real(mu_j1) && real(mu_j2),
        sum_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    #[test]
    fn pair_from_worked_value() {
        let p = entangled_pair_solve(c(0.6, 0.3)).unwrap();
        assert!((p.s - c(0.45, 0.0)).norm() < 1e-15);
        assert!((p.d1 - c(0.15, 0.3)).norm() < 1e-15);
        assert!((p.d2 - c(0.15, -0.3)).norm() < 1e-15);
        assert!((p.s + p.d2 - c(0.6, -0.3)).norm() < 1e-15);
        assert!(p.identity_residual() < 1e-15);
    }

    #[test]
    fn pair_real_and_zero() {
        let p = entangled_pair_solve(c(0.3, 0.0)).unwrap();
        assert!((p.s.re - 0.09).abs() < 1e-16);
        assert_eq!(p.d1, p.d2);
        assert!((p.d1.re - 0.21).abs() < 1e-16);
        let z = entangled_pair_solve(c(0.0, 0.0)).unwrap();
        assert_eq!((z.s, z.d1, z.d2), (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        assert!(entangled_pair_solve(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn decomposition_kinds() {
        let d = decompose_event(c(0.5, 0.2), c(0.5, -0.2), 0.4);
        assert_eq!(d.kind, DecompositionKind::Nonreal);
        assert_eq!(d.d1, d.d2.conj());
        let d = decompose_event(c(0.5, 0.0), c(0.5, 0.0), 0.4);
        assert_eq!(d.kind, DecompositionKind::ClassicalDegenerate);
        assert_eq!(d.d1, d.d2);
        let d = decompose_event(c(0.4, 0.0), c(0.4, 0.0), 0.4);
        assert_eq!(d.kind, DecompositionKind::Collapsed);
        let d = decompose_event(c(0.5, 0.2), c(0.5, 0.2), 0.4);
        assert!(!d.consistent());
        assert_eq!(d.measure(Event::OmegaH), c(1.0, 0.0));
        assert_eq!(d.measures().len(), 7);
    }

    #[test]
    fn hyper_measure_examples() {
        let h = hyper_measure_check(c(1.0, 0.0), c(0.2, 0.1), c(-0.2, -0.1));
        assert!(h.holds && !h.real_valued_j_parts);
        let h = hyper_measure_check(c(1.0, 0.0), c(0.3, 0.0), c(-0.3, 0.0));
        assert!(h.holds && h.real_valued_j_parts);
        assert!(!hyper_measure_check(c(0.9, 0.0), c(0.2, 0.1), c(-0.2, -0.1)).holds);
        assert!(!hyper_measure_check(c(1.0, 0.0), c(0.2, 0.1), c(-0.2, 0.1)).holds);
    }

    #[test]
    fn event_algebra() {
        use Event::*;
        assert_eq!(intersect(T, A).unwrap(), S);
        assert_eq!(intersect(A, T).unwrap(), S);
        assert_eq!(intersect(OmegaH, J2).unwrap(), J2);
        assert_eq!(intersect(S, Omega).unwrap(), S);
        assert!(matches!(intersect(J1, J2), Err(Error::Undefined(_))));
        assert!(matches!(intersect(J1, A), Err(Error::Undefined(_))));
        assert_eq!(union(S, J1).unwrap(), T);
        assert_eq!(union(J2, S).unwrap(), A);
        assert!(matches!(union(T, A), Err(Error::Undefined(_))));
        assert!(S.is_real() && !T.is_real() && !J1.is_real());
    }

    #[test]
    fn measures_are_additive_on_defined_unions() {
        let d = decompose_event(c(0.5, 0.2), c(0.5, -0.2), 0.4);
        for (a, b) in [(Event::S, Event::J1), (Event::S, Event::J2)] {
            let u = union(a, b).unwrap();
            assert!((d.measure(u) - d.measure(a) - d.measure(b)).norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn pair_identities(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let p = entangled_pair_solve(c(re, im)).unwrap();
            prop_assert_eq!(p.s.im, 0.0);
            prop_assert_eq!(p.z1, c(re, im));
            prop_assert!((p.d1.norm() - p.d2.norm()).abs() <= 1e-15 * (1.0 + p.d1.norm()));
            prop_assert!(p.identity_residual() <= 1e-13 * (1.0 + p.s.re));
        }

        #[test]
        fn conjugate_inputs_are_consistent(re in -1.0f64..1.0, im in -1.0f64..1.0, s in 0.0f64..1.0) {
            let d = decompose_event(c(re, im), c(re, -im), s);
            prop_assert!(d.consistent());
            prop_assert_eq!(d.d1, d.d2.conj());
        }
    }
}
