use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use revdiff::borncalc::{
    born_limit, cross_term, expand_in_basis, intersection_probability_eps, state_probabilities, state_term, well_basis,
};
use revdiff::eventcalc::{decompose_event_tol, QUADRATURE_TOL};
use revdiff::lattice::{ComplexField, Interval};
use revdiff::{states, Cplx};

use super::Ctx;
use crate::report::Report;
use crate::RunError;

const HALF_TOL: f64 = 1e-4;
const QUARTER_TOL: f64 = 1e-3;
const ORACLE_TOL: f64 = 2e-4;
const IM_LIMIT_TOL: f64 = 1e-6;
/// Allowed growth between consecutive |Im| values along the schedule.
const IM_JITTER: f64 = 1.1;
const EIGEN_TOL: f64 = 1e-8;
const CROSS_HALF_TOL: f64 = 1e-6;

/// Ground state, `(ψ₁ + iψ₂)/√2` and the configured packet.
fn bundled(ctx: &Ctx) -> Result<Vec<(&'static str, ComplexField<f64>)>, RunError> {
    let wg = ctx.well_grid()?;
    let p1 = states::well_eigenstate(wg, 1)?;
    let p2 = states::well_eigenstate(wg, 2)?;
    let sup = p1.combine(Cplx::new(FRAC_1_SQRT_2, 0.0), &p2, Cplx::new(0.0, FRAC_1_SQRT_2))?;
    Ok(vec![("ground", p1), ("superposition", sup), ("packet", ctx.packet(ctx.grid()?)?)])
}

pub fn born(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("born");
    let c = &ctx.cfg.born;
    let wg = ctx.well_grid()?;
    let sched = ctx.schedule(&wg)?;
    let ground = states::well_eigenstate(wg, 1)?;

    let f = Interval::new(c.f_lo, c.f_hi)?;
    let lim = born_limit(&ground, &f, &sched)?;
    r.metric("born_F", lim.real());
    r.metric("born_F_error_estimate", lim.error_estimate);
    lim.write_csv(ctx.csv("convergence.csv")?)?;
    let half = born_limit(&ground, &Interval::new(0.0, 0.5)?, &sched)?.real();
    r.below("born_F_half_err", (half - 0.5).abs(), HALF_TOL);
    r.metric("born_F_half", half);
    let quarter = born_limit(&ground, &Interval::new(0.0, 0.25)?, &sched)?.real();
    r.below("born_F_quarter_err", (quarter - (0.25 - 1.0 / (2.0 * PI))).abs(), QUARTER_TOL);
    r.metric("born_F_quarter", quarter);

    let mut rng = ctx.rng(0x424f_524e);
    let mut worst_oracle = 0.0f64;
    let mut worst_im = 0.0f64;
    let mut monotone = true;
    let mut worst_delta = 0.0f64;
    let mut wtr = csv::Writer::from_writer(ctx.csv("random_intervals.csv")?);
    wtr.write_record(["state", "lo", "hi", "born_limit", "direct"]).map_err(revdiff::Error::from)?;
    for (name, psi) in bundled(ctx)? {
        let g = *psi.grid();
        let sched = ctx.schedule(&g)?;
        let norm = psi.l2_norm_sq()?;
        let span = g.x_max() - g.x_min();
        for _ in 0..c.random_intervals {
            let a = g.x_min() + rng.random::<f64>() * span;
            let b = g.x_min() + rng.random::<f64>() * span;
            let f = Interval::new(a.min(b), a.max(b))?;
            let born = born_limit(&psi, &f, &sched)?.real();
            let direct = psi.density().integrate(&f)? / norm;
            worst_oracle = worst_oracle.max((born - direct).abs());
            wtr.write_record([name.to_string(), f.lo.to_string(), f.hi.to_string(), born.to_string(), direct.to_string()])
                .map_err(revdiff::Error::from)?;
        }

        let f = Interval::new(g.x(g.len() / 5), g.x(g.len() / 2))?;
        let ims = sched
            .values()
            .iter()
            .map(|&e| Ok(intersection_probability_eps(&psi, &f, e)?.im.abs()))
            .collect::<Result<Vec<f64>, RunError>>()?;
        monotone &= ims.windows(2).all(|w| w[1] <= IM_JITTER * w[0] + 1e-16);
        let lim = born_limit(&psi, &f, &sched)?;
        worst_im = worst_im.max(lim.value.im.abs());
        lim.write_csv(ctx.csv(&format!("imaginary_decay_{name}.csv"))?)?;

        let p_t = psi.integrate(&f)?;
        let p_a = psi.conj().integrate(&f)?;
        let d = decompose_event_tol(p_t, p_a, lim.real(), QUADRATURE_TOL);
        worst_delta = worst_delta.max((d.d1 - d.d2.conj()).norm());
    }
    wtr.flush()?;
    r.below("born_vs_direct_max", worst_oracle, ORACLE_TOL);
    r.holds("imaginary_decay_monotone", monotone);
    r.below("imaginary_after_extrapolation_max", worst_im, IM_LIMIT_TOL);
    r.metric("quadrature_delta_conjugacy_max", worst_delta);
    Ok(r)
}

pub fn eigen_born(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("eigen-born");
    let wg = ctx.well_grid()?;
    let sched = ctx.schedule(&wg)?;
    let basis = well_basis(wg, ctx.cfg.well.modes)?;
    let sup = bundled(ctx)?.swap_remove(1).1;

    let e = expand_in_basis(&sup, &basis[..2.min(basis.len())])?;
    let p = state_probabilities(&e);
    let p_err = p.p.iter().map(|x| (x - 0.5).abs()).fold(0.0, f64::max);
    r.below("state_probabilities_err", p_err, EIGEN_TOL);
    r.metric("p1", p.p[0]);
    r.metric("p2", p.p[1]);
    let whole = cross_term(&e, 0, 1, &Interval::whole(), &sched)?;
    r.below("cross_term_whole_line", whole.value.norm(), EIGEN_TOL);

    // ∫₀^½ ψ₁ψ₂ = 4/(3π) for unit-box sine modes.
    let half = Interval::new(0.0, 0.5)?;
    let cross = cross_term(&e, 0, 1, &half, &sched)?;
    let want = e.coeffs[0] * e.coeffs[1].conj() * (4.0 / (3.0 * PI));
    r.metric("cross_term_half_re", cross.value.re);
    r.metric("cross_term_half_im", cross.value.im);
    r.below("cross_term_half_err", (cross.value - want).norm(), CROSS_HALF_TOL);
    let diag = state_term(&e, 0, &half, &sched)?.value + state_term(&e, 1, &half, &sched)?.value;
    let total = diag + cross.value + cross_term(&e, 1, 0, &half, &sched)?.value;
    r.metric("additivity_residual", (total - born_limit(&sup, &half, &sched)?.value).norm());

    let s = &ctx.cfg.state;
    let width = s.sigma.min(0.08);
    let gauss = ComplexField::from_fn(wg, |x| {
        let d = x - 0.5;
        Cplx::from_polar((-d * d / (2.0 * width * width)).exp(), s.k * x)
    })?
    .normalized()?;
    let eg = expand_in_basis(&gauss, &basis)?;
    let pg = state_probabilities(&eg);
    r.below("gaussian_total_err", (pg.total - 1.0).abs(), EIGEN_TOL);
    r.metric("gaussian_residual", eg.residual);
    r.metric("gram_deviation", eg.gram_deviation);

    let mut wtr = csv::Writer::from_writer(ctx.csv("coefficients.csv")?);
    wtr.write_record(["n", "c_re", "c_im", "p"]).map_err(revdiff::Error::from)?;
    for (i, (c, p)) in eg.coeffs.iter().zip(&pg.p).enumerate() {
        wtr.write_record([(i + 1).to_string(), c.re.to_string(), c.im.to_string(), p.to_string()])
            .map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;
    Ok(r)
}
