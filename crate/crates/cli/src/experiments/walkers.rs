use revdiff::evolve::{evolve_window, stationary_state, time_reverse, Boundary, Direction, EvolveOptions, Potential};
use revdiff::lattice::{ComplexField, Grid};
use revdiff::walkers::{ensemble_stats, ks_against_density, propagate, reversal_compare, sample_initial, PropagateOptions};

use super::Ctx;
use crate::report::Report;
use crate::RunError;

const KS_MAX: f64 = 0.02;
const REVERSAL_FRAC_MIN: f64 = 0.95;
const ROUGHNESS_REL_MAX: f64 = 0.2;
/// Walkers kept for the trajectory dump.
const TRACE_WALKERS: usize = 64;

fn ensemble_pair(ctx: &Ctx, r: &mut Report, tag: &str, psi0: &ComplexField<f64>, v: &Potential<f64>, seed: u64) -> Result<(), RunError> {
    let c = &ctx.cfg.walker;
    let w = ctx.window()?;
    let opts = EvolveOptions { mass: ctx.cfg.mass, ..Default::default() };
    let fwd = evolve_window(psi0, v, w, opts)?;
    let rev = time_reverse(&fwd);
    let popts = PropagateOptions { record_times: vec![c.t_c], horizon: Some(c.t_c), ..Default::default() };
    let rho_c = fwd.frame_at_time(c.t_c)?.density();

    let a = propagate(&sample_initial(&fwd.first().density(), c.n, seed)?, &fwd, Direction::Forward, &popts)?;
    r.below(&format!("{tag}_ks_forward"), ks_against_density(&a, c.t_c, &rho_c)?, KS_MAX);
    let b = propagate(&sample_initial(&rev.first().density(), c.n, seed ^ 1)?, &rev, Direction::Backward, &popts)?;
    r.below(&format!("{tag}_ks_backward"), ks_against_density(&b, c.t_c, &rho_c)?, KS_MAX);
    r.metric(&format!("{tag}_continuity_violations"), (a.continuity_violations() + b.continuity_violations()) as f64);

    let g = fwd.grid();
    let bins = Grid::new(g.x_min(), g.x_max(), c.bins)?;
    let rep = reversal_compare(&a, &b, c.t_c, &bins)?;
    r.metric(&format!("{tag}_pair_ks"), rep.ks);
    r.metric(&format!("{tag}_velocity_l2"), rep.velocity_l2);
    r.metric(&format!("{tag}_velocity_noise_floor"), rep.velocity_noise_floor);
    r.metric(&format!("{tag}_bins_compared"), rep.bins_compared as f64);
    r.at_least(&format!("{tag}_reversal_frac_within_3se"), rep.frac_within_3se, REVERSAL_FRAC_MIN);

    ensemble_stats(&a, c.t_c, &bins)?.write_csv(ctx.csv(&format!("{tag}_forward_stats.csv"))?)?;
    ensemble_stats(&b, c.t_c, &bins)?.write_csv(ctx.csv(&format!("{tag}_backward_stats.csv"))?)?;

    let every = ctx.cfg.output.every.max(1);
    let trace = propagate(
        &sample_initial(&fwd.first().density(), TRACE_WALKERS, seed ^ 2)?,
        &fwd,
        Direction::Forward,
        &PropagateOptions { record_stride: every, ..Default::default() },
    )?;
    trace.write_csv(ctx.csv(&format!("{tag}_trajectories.csv"))?, 1)?;
    Ok(())
}

pub fn walkers(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("walkers");
    let g = ctx.grid()?;
    let seed = ctx.cfg.seed;
    ensemble_pair(ctx, &mut r, "packet", &ctx.packet(g)?, &Potential::free(g), seed.wrapping_mul(4).wrapping_add(1))?;
    let v = Potential::harmonic(g, ctx.cfg.potential.omega, ctx.cfg.mass)?;
    let psi = stationary_state(&v, Boundary::Dirichlet, ctx.cfg.mass)?;
    ensemble_pair(ctx, &mut r, "stationary", &psi, &v, seed.wrapping_mul(4).wrapping_add(2))?;

    // Increment roughness against 2β² = 1/m across masses.
    let w = ctx.window()?;
    let psi0 = ctx.packet(g)?;
    let mut wtr = csv::Writer::from_writer(ctx.csv("roughness.csv")?);
    wtr.write_record(["mass", "roughness", "expected"]).map_err(revdiff::Error::from)?;
    let mut worst = 0.0f64;
    for (i, &m) in ctx.cfg.walker.masses.iter().enumerate() {
        let h = evolve_window(&psi0, &Potential::free(g), w, EvolveOptions { mass: m, ..Default::default() })?;
        let e = sample_initial(&h.first().density(), ctx.cfg.walker.n_roughness, seed.wrapping_mul(4).wrapping_add(3) ^ ((i as u64) << 32))?;
        let ts = propagate(&e, &h, Direction::Forward, &PropagateOptions::default())?;
        let want = 2.0 * ts.beta2();
        worst = worst.max((ts.roughness() / want - 1.0).abs());
        wtr.write_record([m.to_string(), ts.roughness().to_string(), want.to_string()]).map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;
    r.below("roughness_scaling_rel_err", worst, ROUGHNESS_REL_MAX);
    Ok(r)
}
