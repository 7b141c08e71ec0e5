use std::path::Path;

use revdiff_cli::config::{load_config, SimConfig};
use revdiff_cli::report::Report;
use revdiff_cli::{resolve_config, run, Cli};

use clap::Parser;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("revdiff").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(dir: &Path) -> Report {
    Report::read(&dir.join("report.json")).unwrap()
}

#[test]
fn empty_config_gives_defaults() {
    let cfg = load_config(None, &[]).unwrap();
    assert_eq!(cfg, SimConfig::default());
    assert_eq!((cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n), (-20.0, 20.0, 2048));
    assert_eq!((cfg.window.t0, cfg.window.n_steps, cfg.seed), (1.0, 1000, 0));
}

#[test]
fn bad_config_exits_two_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[grid]\nn = 4\n").unwrap();
    let (code, _, err) = call(&["born", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("grid.n"), "{err}");

    std::fs::write(&path, "[grid]\nnodes = 64\n").unwrap();
    let (code, _, err) = call(&["born", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("nodes"), "{err}");

    let (code, _, err) = call(&["born", "--set", "window.t0=fast"]);
    assert_eq!(code, 2);
    assert!(err.contains("t0") || err.contains("invalid type"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(call(&["teleport"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&["--set", "experiment=teleport", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("teleport"));
}

#[test]
fn help_lists_defaults() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Configuration defaults") && out.contains("n_steps = 1000"), "{out}");
}

#[test]
fn spin_demo_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = call(&["spin", "--c1", "0.6", "--c2", "0.8i", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("P↑=0.36\n") && out.contains("P↓=0.64\n"), "{out}");
    assert!(out.contains("⟨↑|↓⟩ = +0.000000+0.000000i"));
    let r = report(dir.path());
    assert_eq!(r.experiment, "spin");
    assert!((r.metrics["p_up"] - 0.36).abs() < 1e-15);
    assert!(r.artifacts.contains(&"table.txt".to_string()));
}

#[test]
fn unnormalised_spin_state_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&["spin", "--c1", "1", "--c2", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    let (code, out, _) = call(&["spin", "--c1", "1", "--c2", "1", "--normalize", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("P↑=0.5\n"), "{out}");
}

#[test]
fn born_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("well.toml");
    std::fs::write(&path, "seed = 3\n[well]\nn = 1025\nmodes = 8\n[born]\nrandom_intervals = 3\n").unwrap();
    let out = dir.path().join("out");
    let (code, text, err) = call(&["born", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}{err}");
    let r = report(&out);
    assert!((r.metrics["born_F_half"] - 0.5).abs() < 1e-4);
    assert_eq!(r.config_echo["seed"], 3);
    assert!(r.assertions.iter().all(|a| a.pass));
    assert!(out.join("convergence.csv").exists());
}

#[test]
fn failed_assertion_exits_one_and_names_metric() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&[
        "walkers",
        "--set",
        "walker.n=50",
        "--set",
        "walker.n_roughness=50",
        "--set",
        "walker.masses=[1.0]",
        "--set",
        "window.n_steps=200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("assertion failed: packet_ks_forward"), "{err}");
}

#[test]
fn seeded_runs_repeat_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--seed", "9", "--set", "walker.n=2000", "--set", "walker.n_roughness=500", "--set", "window.n_steps=200"];
    let mut args_a = vec!["walkers", "--threads", "1", "--out", a.path().to_str().unwrap()];
    args_a.extend(common);
    let mut args_b = vec!["walkers", "--threads", "3", "--out", b.path().to_str().unwrap()];
    args_b.extend(common);
    call(&args_a);
    call(&args_b);
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert!(!ra.metrics.is_empty());
    assert_eq!(ra.metrics, rb.metrics);
}

#[test]
fn output_directory_precedence() {
    let cli = Cli::parse_from(["revdiff", "spin", "--seed", "5"]);
    let cfg = resolve_config(&cli).unwrap();
    assert_eq!(cfg.experiment, "spin");
    assert_eq!(cfg.seed, 5);

    let cli = Cli::parse_from(["revdiff", "eventcalc", "--z", "-0.2+0.4i", "--out", "elsewhere"]);
    let cfg = resolve_config(&cli).unwrap();
    assert_eq!(cfg.out_dir, Path::new("elsewhere"));
    assert_eq!(cfg.eventcalc.z.parse("z").unwrap(), num_complex::Complex64::new(-0.2, 0.4));
}
