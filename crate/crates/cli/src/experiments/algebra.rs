use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use rand::Rng;
use revdiff::borncalc::born_limit;
use revdiff::eventcalc::{decompose_event_tol, entangled_pair_solve, hyper_measure_check, intersect, union, Event, QUADRATURE_TOL};
use revdiff::lattice::Interval;
use revdiff::spin::{exclusivity_sum_check, make_spin_state, spin_probability, star, Outcome, PairingTable, Side, SpinSide, SpinState};
use revdiff::{states, Cplx};

use super::Ctx;
use crate::config::{ConfigError, SimConfig};
use crate::report::Report;
use crate::RunError;

const EXACT: f64 = 1e-15;
const ALL_EVENTS: [Event; 7] = [Event::OmegaH, Event::Omega, Event::T, Event::A, Event::S, Event::J1, Event::J2];

fn c(re: f64, im: f64) -> Cplx<f64> {
    Cplx::new(re, im)
}

pub fn eventcalc(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("eventcalc");
    let cfg = &ctx.cfg.eventcalc;
    let mut rng = ctx.rng(0x4556_454e);
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        worst = worst.max(entangled_pair_solve(z)?.identity_residual());
    }
    r.at_most("entangled_identity_residual_max", worst, EXACT);

    // Forward and backward intersections from quadrature on the well.
    let wg = ctx.well_grid()?;
    let sched = ctx.schedule(&wg)?;
    let p1 = states::well_eigenstate(wg, 1)?;
    let p2 = states::well_eigenstate(wg, 2)?;
    let sup = p1.combine(c(FRAC_1_SQRT_2, 0.0), &p2, c(0.0, FRAC_1_SQRT_2))?;
    let mut worst_delta = 0.0f64;
    let mut consistent = true;
    for f in [Interval::new(0.0, 0.5)?, Interval::new(0.1, 0.45)?, Interval::new(0.3, 0.9)?] {
        let s = born_limit(&sup, &f, &sched)?.real();
        let d = decompose_event_tol(sup.integrate(&f)?, sup.conj().integrate(&f)?, s, QUADRATURE_TOL);
        consistent &= d.consistent();
        worst_delta = worst_delta.max((d.d1 - d.d2.conj()).norm());
    }
    r.holds("quadrature_decomposition_consistent", consistent);
    r.below("quadrature_delta_conjugacy_max", worst_delta, QUADRATURE_TOL);

    // (μ(Ω), μ(J₁), μ(J₂)) → (holds, real-valued J parts).
    let table = [
        (c(1.0, 0.0), c(0.15, 0.3), c(-0.15, -0.3), true, false),
        (c(1.0, 0.0), c(0.2, 0.0), c(-0.2, 0.0), true, true),
        (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), true, false),
        (c(0.9, 0.0), c(0.15, 0.3), c(-0.15, -0.3), false, false),
        (c(1.0, 0.0), c(0.15, 0.3), c(0.15, -0.3), false, false),
    ];
    let truth_ok = table.iter().all(|&(o, j1, j2, holds, real)| {
        let h = hyper_measure_check(o, j1, j2);
        h.holds == holds && h.real_valued_j_parts == real
    });
    r.holds("hyper_measure_truth_table", truth_ok);

    // Both operations are symmetric, and pairs of distinct non-real
    // events outside the defined list stay undefined.
    let mut algebra_ok = intersect(Event::J1, Event::J2).is_err() && union(Event::T, Event::A).is_err();
    for a in ALL_EVENTS {
        for b in ALL_EVENTS {
            algebra_ok &= intersect(a, b).ok() == intersect(b, a).ok() && union(a, b).ok() == union(b, a).ok();
        }
    }
    r.holds("undefined_combinations_rejected", algebra_ok);

    let z = cfg.z.parse("eventcalc.z")?;
    let pair = entangled_pair_solve(z)?;
    r.metric("worked_s", pair.s.re);
    r.metric("worked_identity_residual", pair.identity_residual());
    let d = decompose_event_tol(pair.z1, pair.z2, pair.s.re, EXACT);
    let mut wtr = csv::Writer::from_writer(ctx.csv("worked_example.csv")?);
    wtr.write_record(["event", "re", "im"]).map_err(revdiff::Error::from)?;
    for m in d.measures() {
        wtr.write_record([m.event.to_string(), m.value.re.to_string(), m.value.im.to_string()])
            .map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;

    let mut ops = csv::Writer::from_writer(ctx.csv("event_algebra.csv")?);
    ops.write_record(["a", "b", "intersection", "union"]).map_err(revdiff::Error::from)?;
    let show = |e: revdiff::Result<Event>| e.map(|e| e.to_string()).unwrap_or_else(|_| "undefined".into());
    for a in ALL_EVENTS {
        for b in ALL_EVENTS {
            ops.write_record([a.to_string(), b.to_string(), show(intersect(a, b)), show(union(a, b))])
                .map_err(revdiff::Error::from)?;
        }
    }
    ops.flush()?;
    Ok(r)
}

pub fn spin_state_of(cfg: &SimConfig) -> Result<SpinState<f64>, RunError> {
    let s = &cfg.spin;
    make_spin_state(s.c1.parse("spin.c1")?, s.c2.parse("spin.c2")?, s.normalize)
        .map_err(|e| ConfigError::Invalid { key: "spin.c1".into(), reason: e.to_string() }.into())
}

/// Twelve decimals with trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Probabilities, pairing table and exclusive parts as text.
pub fn spin_table(s: &SpinState<f64>) -> Result<String, RunError> {
    let mut out = String::new();
    let fmt = |z: Cplx<f64>| format!("{:+.6}{:+.6}i", z.re, z.im);
    let _ = writeln!(out, "state c1 = {}, c2 = {}", fmt(s.c1()), fmt(s.c2()));
    let _ = writeln!(out, "P↑={}", short(spin_probability(s, Outcome::Up)));
    let _ = writeln!(out, "P↓={}", short(spin_probability(s, Outcome::Down)));
    let _ = writeln!(out, "orthonormality table (bra * ket):");
    let name = |o: Outcome| if o == Outcome::Up { "↑" } else { "↓" };
    for j in [Outcome::Up, Outcome::Down] {
        for k in [Outcome::Up, Outcome::Down] {
            let v = star(&SpinSide::basis(Side::Backward, j), &SpinSide::basis(Side::Forward, k))?;
            let _ = writeln!(out, "  ⟨{}|{}⟩ = {}", name(j), name(k), fmt(v));
        }
    }
    let _ = writeln!(out, "  ⟨↑|ψ⟩ = {}", fmt(star(&SpinSide::basis(Side::Backward, Outcome::Up), &s.ket())?));
    let _ = writeln!(out, "  ⟨↓|ψ⟩ = {}", fmt(star(&SpinSide::basis(Side::Backward, Outcome::Down), &s.ket())?));
    let e = exclusivity_sum_check(s, &PairingTable::orthonormal());
    let _ = writeln!(out, "exclusive parts: S3 = {}, S4 = {}, total = {}", fmt(e.s3), fmt(e.s4), fmt(e.total));
    let _ = writeln!(out, "probe totals: {}, {}", fmt(e.probe_totals[0]), fmt(e.probe_totals[1]));
    Ok(out)
}

pub fn spin(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("spin");
    let state = spin_state_of(ctx.cfg)?;
    let text = spin_table(&state)?;
    std::fs::write(ctx.out.join("table.txt"), &text)?;
    r.metric("p_up", spin_probability(&state, Outcome::Up));
    r.metric("p_down", spin_probability(&state, Outcome::Down));

    let mut ortho = 0.0f64;
    for j in [Outcome::Up, Outcome::Down] {
        for k in [Outcome::Up, Outcome::Down] {
            let v: Cplx<f64> = star(&SpinSide::basis(Side::Backward, j), &SpinSide::basis(Side::Forward, k))?;
            let want = if j == k { 1.0 } else { 0.0 };
            ortho = ortho.max((v - c(want, 0.0)).norm());
        }
    }
    r.at_most("orthonormality_max_err", ortho, EXACT);
    r.metric("self_pairing", (star(&state.bra(), &state.ket())? - c(1.0, 0.0)).norm());

    let mut rng = ctx.rng(0x5350_494e);
    let (mut proj, mut total, mut phase) = (0.0f64, 0.0f64, 0.0f64);
    let mut passes = true;
    let mut states = vec![state];
    for _ in 0..ctx.cfg.spin.samples {
        let a = rng.random_range(0.0..PI / 2.0);
        let s = make_spin_state(
            Cplx::from_polar(a.cos(), rng.random_range(-PI..PI)),
            Cplx::from_polar(a.sin(), rng.random_range(-PI..PI)),
            true,
        )?;
        states.push(s);
    }
    for s in &states {
        proj = proj.max((star(&SpinSide::basis(Side::Backward, Outcome::Up), &s.ket())? - s.c1()).norm());
        let e = exclusivity_sum_check(s, &PairingTable::orthonormal());
        passes &= e.passes;
        total = total.max((e.total - c(1.0, 0.0)).norm());
        let rotated = s.with_phase(rng.random_range(-PI..PI));
        for o in [Outcome::Up, Outcome::Down] {
            phase = phase.max((spin_probability(s, o) - spin_probability(&rotated, o)).abs());
        }
    }
    r.at_most("projection_c1_max_err", proj, EXACT);
    r.holds("exclusivity_passes", passes);
    r.at_most("exclusivity_total_max_err", total, EXACT);
    r.at_most("phase_invariance_max_err", phase, EXACT);

    // A non-orthogonal pairing is caught by the probes.
    let bad = exclusivity_sum_check(&state, &PairingTable::with_cross(c(0.1, 0.05)));
    r.holds("cross_pairing_detected", !bad.passes && (bad.inferred_cross - c(0.1, 0.05)).norm() < 1e-12);
    Ok(r)
}
