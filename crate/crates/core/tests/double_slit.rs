use revdiff::borncalc::{born_limit, EpsSchedule};
use revdiff::evolve::{Boundary, Potential};
use revdiff::lattice::Grid;
use revdiff::slit::{dark_fringe_check, evolve_to_screen, fringe_table, measured_fringe_spacing, screen_bins, slit_state, SlitConfig};

#[test]
fn default_two_slit_screen() {
    let g = Grid::<f64>::new(-40.0, 40.0, 4096).unwrap();
    let cfg = SlitConfig::default();
    let s0 = slit_state(&cfg, g).unwrap();
    let s = evolve_to_screen(&s0, &cfg, &Potential::free(g), 1000, Boundary::Dirichlet).unwrap();
    assert!((s.overlap - s0.overlap).norm() < 1e-12);
    let sched = EpsSchedule::geometric(&g, 16, 4).unwrap();

    let rows = fringe_table(&s, &screen_bins(-10.0, 10.0, 20).unwrap(), &sched).unwrap();
    let mut worst = 0.0f64;
    for r in &rows {
        let t = &r.terms;
        assert!(t.conjugate_defect() < 1e-10);
        assert!(t.p11.value.im.abs() < 1e-8 && t.p22.value.im.abs() < 1e-8);
        assert!(t.raw_sum().im.abs() < 1e-10);
        assert!(t.p12.value.norm() > 1e-12);
        let born = born_limit(&s.psi, &r.bin, &sched).unwrap().real();
        worst = worst.max((t.normalized_sum().re - born).abs());
    }
    assert!(worst < 2e-4, "{worst}");

    let spacing = measured_fringe_spacing(&s.psi.density(), 0.1).unwrap();
    let far = cfg.far_field_spacing();
    eprintln!("spacing {spacing} far {far}");
    assert!((spacing / far - 1.0).abs() < 0.05);

    let dark = dark_fringe_check(&s, &cfg, cfg.fringe_spacing() / 10.0, &sched).unwrap();
    eprintln!("dark {} ratio {} worst {worst}", dark.x_dark, dark.ratio);
    assert!(dark.ratio < 0.1);
    assert!(dark.terms.normalized_diagonal() > 0.0);
}
