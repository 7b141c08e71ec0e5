use std::io::Write;

use rand::Rng;
use revdiff::evolve::{
    evolve_backward, evolve_window, heat_round_trip, schrodinger_round_trip, time_reverse, Boundary, CrankNicolson, EvolveOptions,
    FieldHistory, HeatMode, HeatStepper, Potential,
};
use revdiff::hydro::{continuity_residual, hydro_decompose, kinetic_energy, newton_residual, velocity_reversal_check, HydroOptions, Order};
use revdiff::lattice::{Interval, RealField};
use revdiff::states;

use super::Ctx;
use crate::config::PotentialKind;
use crate::report::Report;
use crate::RunError;

const UNITARITY_TOL: f64 = 1e-10;
const ROUND_TRIP_TOL: f64 = 1e-8;
const HEAT_CONTRAST_MIN: f64 = 1e-2;
const VELOCITY_REVERSAL_TOL: f64 = 1e-10;
const BACKWARD_AGREEMENT_TOL: f64 = 1e-10;
const FURTH_TOL: f64 = 1e-6;

fn max_norm_defect(h: &FieldHistory<f64>) -> Result<f64, RunError> {
    let mut worst = 0.0f64;
    for f in h.frames() {
        worst = worst.max((f.l2_norm_sq()? - 1.0).abs());
    }
    Ok(worst)
}

fn write_snapshots<W: Write>(h: &FieldHistory<f64>, every: usize, w: W) -> Result<(), RunError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "x", "re", "im"]).map_err(revdiff::Error::from)?;
    for k in (0..h.frames().len()).step_by(every) {
        let t = h.window().time(k).to_string();
        for (x, v) in h.grid().xs().zip(h.frame(k).values()) {
            wtr.write_record([t.clone(), x.to_string(), v.re.to_string(), v.im.to_string()]).map_err(revdiff::Error::from)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn evolve(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("evolve");
    let g = ctx.grid()?;
    let v = ctx.potential(g)?;
    let w = ctx.window()?;
    let opts = EvolveOptions { mass: ctx.cfg.mass, ..Default::default() };
    let h = evolve_window(&ctx.packet(g)?, &v, w, opts)?;
    r.below("unitarity_packet", max_norm_defect(&h)?, UNITARITY_TOL);
    let cn = CrankNicolson::new(&v, w.dt(), Boundary::Dirichlet, ctx.cfg.mass)?;
    let e0 = cn.energy(h.first());
    r.metric("energy_packet", e0);
    r.metric("energy_drift_rel", ((cn.energy(h.last()) - e0) / e0).abs());
    if ctx.cfg.potential.kind == PotentialKind::Free && ctx.cfg.mass == 1.0 {
        let s = &ctx.cfg.state;
        let exact = states::free_gaussian_at(g, s.x0, s.sigma, s.k, w.t0())?;
        r.metric("packet_vs_analytic_l2", h.last().l2_distance(&exact)?);
    }

    let wg = ctx.well_grid()?;
    let hw = evolve_window(&states::well_eigenstate(wg, 1)?, &Potential::free(wg), w, EvolveOptions::default())?;
    r.below("unitarity_well", max_norm_defect(&hw)?, UNITARITY_TOL);

    let mut norms = csv::Writer::from_writer(ctx.csv("norms.csv")?);
    norms.write_record(["t", "norm_packet", "norm_well"]).map_err(revdiff::Error::from)?;
    for k in 0..=w.n_steps() {
        norms
            .write_record([w.time(k).to_string(), h.frame(k).l2_norm_sq()?.to_string(), hw.frame(k).l2_norm_sq()?.to_string()])
            .map_err(revdiff::Error::from)?;
    }
    norms.flush()?;
    write_snapshots(&h, ctx.cfg.output.every, ctx.csv("packet_history.csv")?)?;
    Ok(r)
}

/// Five clock readings spread over the interior of the window.
fn sample_times(t0: f64) -> [f64; 5] {
    [0.1, 0.3, 0.5, 0.7, 0.9].map(|f| f * t0)
}

pub fn reversal(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("reversal");
    let g = ctx.grid()?;
    let v = ctx.potential(g)?;
    let w = ctx.window()?;
    let opts = EvolveOptions { mass: ctx.cfg.mass, ..Default::default() };
    let psi0 = ctx.packet(g)?;
    r.below("round_trip_l2", schrodinger_round_trip(&psi0, &v, w, opts)?, ROUND_TRIP_TOL);

    let fwd = evolve_window(&psi0, &v, w, opts)?;
    let rev = time_reverse(&fwd);
    let bwd = evolve_backward(fwd.last(), &v, w, opts)?;
    let mut worst = 0.0f64;
    for k in 0..=w.n_steps() {
        worst = worst.max(bwd.frame(k).l2_distance(rev.frame(k))?);
    }
    r.below("backward_vs_reversed_l2", worst, BACKWARD_AGREEMENT_TOL);
    r.below("velocity_reversal_max", velocity_reversal_check(&fwd, &sample_times(w.t0()))?, VELOCITY_REVERSAL_TOL);

    let tc = ctx.cfg.walker.t_c;
    let hopts = HydroOptions::with_mass(ctx.cfg.mass);
    let a = hydro_decompose(fwd.frame_at_time(tc)?, hopts)?;
    let b = hydro_decompose(rev.frame_at_time(tc)?, hopts)?;
    let mut wtr = csv::Writer::from_writer(ctx.csv("velocity_reversal.csv")?);
    wtr.write_record(["x", "eta_forward", "eta_reversed", "valid"]).map_err(revdiff::Error::from)?;
    for (i, x) in g.xs().enumerate() {
        wtr.write_record([
            x.to_string(),
            a.eta.values()[i].to_string(),
            b.eta.values()[i].to_string(),
            u8::from(a.valid[i] && b.valid[i]).to_string(),
        ])
        .map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;
    Ok(r)
}

fn variance(rho: &RealField<f64>) -> Result<f64, RunError> {
    let g = *rho.grid();
    let moment = |f: &dyn Fn(f64) -> f64| -> Result<f64, RunError> {
        let v = g.xs().zip(rho.values()).map(|(x, p)| f(x) * p).collect();
        Ok(RealField::new(g, v)?.integrate(&Interval::whole())?)
    };
    let m0 = moment(&|_| 1.0)?;
    let mean = moment(&|x| x)? / m0;
    Ok(moment(&|x| (x - mean) * (x - mean))? / m0)
}

pub fn heat_contrast(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("heat-contrast");
    let g = ctx.grid()?;
    let w = ctx.window()?;
    let d = ctx.cfg.heat.d;
    let clean = ctx.packet(g)?.density();
    let mut rng = ctx.rng(0x4845_4154);
    let noisy: Vec<f64> = clean.values().iter().map(|&p| p * (1.0 + ctx.cfg.heat.noise * rng.random_range(-1.0..1.0))).collect();
    let mass = RealField::new(g, noisy.clone())?.integrate(&Interval::whole())?;
    let rho0 = RealField::new(g, noisy.into_iter().map(|p| p / mass).collect())?;

    let c = heat_round_trip(&rho0, d, w)?;
    r.above("heat_identical_protocol_l2", c.identical_protocol_l2, HEAT_CONTRAST_MIN);
    r.metric("heat_forward_l2", c.forward_l2);
    match &c.negative_d {
        Ok(l2) => {
            r.metric("anti_diffusion_failed", 0.0);
            r.metric("anti_diffusion_l2", *l2);
        }
        Err(_) => {
            r.metric("anti_diffusion_failed", 1.0);
        }
    }
    let v = ctx.potential(g)?;
    let opts = EvolveOptions { mass: ctx.cfg.mass, ..Default::default() };
    r.below("schrodinger_round_trip_l2", schrodinger_round_trip(&ctx.packet(g)?, &v, w, opts)?, ROUND_TRIP_TOL);

    let stepper = HeatStepper::new(g, d, w.dt(), HeatMode::Physical)?;
    let var0 = variance(&clean)?;
    let mut rho = clean.clone();
    for _ in 0..w.n_steps() {
        rho = stepper.step(&rho)?;
    }
    let growth = variance(&rho)? - var0;
    let want = 2.0 * d * w.t0();
    r.below("variance_growth_rel_err", ((growth - want) / want).abs(), FURTH_TOL);

    let mut fwd = rho0.clone();
    for _ in 0..w.n_steps() {
        fwd = stepper.step(&fwd)?;
    }
    let mut again = fwd.clone();
    for _ in 0..w.n_steps() {
        again = stepper.step(&again)?;
    }
    let mut wtr = csv::Writer::from_writer(ctx.csv("heat.csv")?);
    wtr.write_record(["x", "rho0", "rho_forward", "rho_round_trip"]).map_err(revdiff::Error::from)?;
    for (i, x) in g.xs().enumerate() {
        wtr.write_record([x.to_string(), rho0.values()[i].to_string(), fwd.values()[i].to_string(), again.values()[i].to_string()])
            .map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;
    if let Err(e) = &c.negative_d {
        writeln!(ctx.csv("anti_diffusion.txt")?, "{e}")?;
    }
    Ok(r)
}

/// Free-packet closed forms at time `t` (unit mass): `(η, u, Q)`.
fn packet_fields(x: f64, x0: f64, sigma: f64, k: f64, t: f64) -> (f64, f64, f64) {
    let xc = x - x0 - k * t;
    let s2t = states::free_gaussian_variance(sigma, t);
    let eta = k + xc * t / (4.0 * sigma.powi(4) + t * t);
    let u = -xc / (2.0 * s2t);
    let q = -0.5 * (xc * xc / (4.0 * s2t * s2t) - 1.0 / (2.0 * s2t));
    (eta, u, q)
}

pub fn hydro(ctx: &Ctx) -> Result<Report, RunError> {
    let mut r = ctx.report("hydro");
    let g = ctx.grid()?;
    let v = ctx.potential(g)?;
    let w = ctx.window()?;
    let m = ctx.cfg.mass;
    let s = &ctx.cfg.state;
    let opts = EvolveOptions { mass: m, ..Default::default() };
    let h = evolve_window(&ctx.packet(g)?, &v, w, opts)?;
    let fourth = HydroOptions { mass: 1.0, order: Order::Fourth, ..Default::default() };

    let t = w.t0();
    let exact = states::free_gaussian_at(g, s.x0, s.sigma, s.k, t)?;
    let hf = hydro_decompose(&exact, fourth)?;
    let core = 3.0 * states::free_gaussian_variance(s.sigma, t).sqrt();
    let (mut e_eta, mut e_u, mut e_q) = (0.0f64, 0.0f64, 0.0f64);
    for (i, x) in g.xs().enumerate() {
        if (x - s.x0 - s.k * t).abs() > core || !hf.valid[i] || hf.one_sided[i] {
            continue;
        }
        let (eta, u, q) = packet_fields(x, s.x0, s.sigma, s.k, t);
        e_eta = e_eta.max((hf.eta.values()[i] - eta).abs());
        e_u = e_u.max((hf.u.values()[i] - u).abs());
        e_q = e_q.max((hf.q.values()[i] - q).abs());
    }
    r.below("eta_vs_closed_form", e_eta, 1e-5);
    r.below("u_vs_closed_form", e_u, 1e-5);
    r.below("q_vs_closed_form", e_q, 1e-4);

    let (lhs, rhs) = kinetic_energy(&exact, 1.0)?;
    let ke = 0.5 * (s.k * s.k + 1.0 / (4.0 * s.sigma * s.sigma));
    r.metric("kinetic_energy_lhs", lhs);
    r.metric("kinetic_energy_rhs", rhs);
    r.below("kinetic_energy_split_rel", ((lhs - rhs) / ke).abs(), 1e-6);
    r.below("kinetic_energy_vs_closed_form_rel", ((lhs - ke) / ke).abs(), 1e-6);

    let cont = continuity_residual(&h)?;
    r.metric("continuity_residual_max", cont.max());
    let nr = newton_residual(&h, &v, 1e-3)?;
    r.metric("newton_as_printed_max", nr.as_printed);
    r.metric("newton_material_max", nr.material);

    // Osmotic velocity of one density at increasing mass.
    let psi0 = h.first();
    let base = hydro_decompose(psi0, HydroOptions::with_mass(1.0))?;
    let umax = base.u.values().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut worst = 0.0f64;
    for &mm in &ctx.cfg.walker.masses {
        let hm = hydro_decompose(psi0, HydroOptions::with_mass(mm))?;
        for i in 0..g.len() {
            if base.valid[i] {
                worst = worst.max((hm.u.values()[i] * mm - base.u.values()[i]).abs() / umax);
            }
        }
    }
    r.below("u_mass_scaling_rel_err", worst, 1e-10);

    let fin = hydro_decompose(h.last(), HydroOptions::with_mass(m))?;
    fin.write_csv(ctx.csv("hydro_final.csv")?)?;
    let mut wtr = csv::Writer::from_writer(ctx.csv("newton.csv")?);
    wtr.write_record(["t", "as_printed", "material"]).map_err(revdiff::Error::from)?;
    for (t, a, b) in &nr.per_frame {
        wtr.write_record([t.to_string(), a.to_string(), b.to_string()]).map_err(revdiff::Error::from)?;
    }
    wtr.flush()?;
    Ok(r)
}
