use revdiff::borncalc::born_limit;
use revdiff::evolve::{evolve_window, Boundary, Direction, EvolveOptions, Potential, TimeWindow};
use revdiff::lattice::Grid;
use revdiff::slit::{
    dark_fringe_check, evolve_to_screen, fringe_table, fringe_visibility, measured_fringe_spacing, screen_bins, screen_profile, slit_state,
    write_fringe_csv, SlitConfig,
};
use revdiff::walkers::{ks_against_density, propagate, sample_initial, PropagateOptions};

use super::Ctx;
use crate::report::Report;
use crate::RunError;

const CONJUGATE_TOL: f64 = 1e-10;
const FOUR_TERM_TOL: f64 = 2e-4;
const SPACING_REL_TOL: f64 = 0.05;
const DARK_RATIO_MAX: f64 = 0.1;
/// Maxima below this fraction of the peak are ignored when locating fringes.
const FRINGE_FLOOR: f64 = 0.1;
const PROFILE_BINS: usize = 400;
const WALKER_KS_MAX: f64 = 0.02;

pub fn double_slit(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("double-slit");
    let c = &ctx.cfg.slit;
    let cfg = SlitConfig { d: c.d, sigma: c.sigma, k: c.k, t_screen: c.t_screen };
    let g = Grid::new(c.x_min, c.x_max, c.n)?;
    let v = Potential::free(g);
    let s0 = slit_state(&cfg, g)?;
    let s = evolve_to_screen(&s0, &cfg, &v, c.n_steps, Boundary::Dirichlet)?;
    let sched = ctx.schedule(&g)?;
    r.metric("overlap_re", s.overlap.re);
    r.metric("overlap_drift", (s.overlap - s0.overlap).norm());

    let rows = fringe_table(&s, &screen_bins(c.screen_lo, c.screen_hi, c.bins)?, &sched)?;
    let (mut defect, mut worst) = (0.0f64, 0.0f64);
    for row in &rows {
        defect = defect.max(row.terms.conjugate_defect());
        let born = born_limit(&s.psi, &row.bin, &sched)?.real();
        worst = worst.max((row.terms.normalized_sum().re - born).abs());
    }
    r.below("p21_conj_p12_defect", defect, CONJUGATE_TOL);
    r.below("four_term_vs_born_max", worst, FOUR_TERM_TOL);
    write_fringe_csv(&rows, ctx.csv("fringes.csv")?)?;

    let rho = s.psi.density();
    let spacing = measured_fringe_spacing(&rho, FRINGE_FLOOR)?;
    let far = cfg.far_field_spacing();
    r.metric("fringe_spacing", spacing);
    r.metric("fringe_spacing_far_field", far);
    r.metric("fringe_spacing_exact", cfg.fringe_spacing());
    r.below("fringe_spacing_rel_err", (spacing / far - 1.0).abs(), SPACING_REL_TOL);
    r.metric("fringe_visibility", fringe_visibility(&rho, FRINGE_FLOOR));

    let dark = dark_fringe_check(&s, &cfg, cfg.fringe_spacing() / 10.0, &sched)?;
    r.metric("dark_fringe_x", dark.x_dark);
    r.metric("dark_fringe_born", dark.born);
    r.metric("dark_fringe_diagonal", dark.terms.normalized_diagonal());
    r.below("dark_fringe_ratio", dark.ratio, DARK_RATIO_MAX);

    let profile = screen_profile(&s.psi, PROFILE_BINS)?;
    profile.write_csv(ctx.csv("screen_profile.csv")?)?;

    let n = ctx.cfg.walker.n_slit;
    if n > 0 {
        let w = TimeWindow::new(c.t_screen, c.n_steps)?;
        let h = evolve_window(&s0.psi, &v, w, EvolveOptions::default())?;
        let opts = PropagateOptions { record_times: vec![c.t_screen], ..Default::default() };
        let e = sample_initial(&h.first().density(), n, ctx.cfg.seed.wrapping_mul(4).wrapping_add(5))?;
        let ts = propagate(&e, &h, Direction::Forward, &opts)?;
        r.below("walker_screen_ks", ks_against_density(&ts, c.t_screen, &h.last().density())?, WALKER_KS_MAX);
        let (hist, _) = revdiff::stats::histogram_density(profile.grid(), &ts.positions_at_time(c.t_screen)?);
        hist.write_csv(ctx.csv("walker_screen_profile.csv")?)?;
    }
    Ok(r)
}
