//! End-to-end checks of the binary: exit codes, byte-identical reruns and
//! the printed distance.

use std::path::Path;
use std::process::{Command, Output};

fn sticky1d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sticky1d"))
        .args(args)
        .env_remove("STICKY1D_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_EULERIAN: &str = "
solver = eulerian
N = 8
M = 8
sigma = 1
T = 0.05
output_stride = 5
seed = 42

[K_rho]
family = gaussian_exp
amplitude = -1
exponent = 2
";

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, SMALL_EULERIAN);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let r = sticky1d(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
        ]);
        assert!(
            r.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    for name in [
        "snapshots.csv",
        "events.csv",
        "diagnostics.csv",
        "rho_final.csv",
        "eta_final.csv",
        "config.cfg",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn distance_prints_unit_gap() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write(&a, "position,mass\n0,1\n");
    write(&b, "position,mass\n1,1\n");
    let r = sticky1d(&[
        "distance",
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "1.0");
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(
        &cfg,
        "solver = eulerian\nN = 4\nM = 4\nsigma = 1\nepsilon = 1\nT = 1\n",
    );
    let r = sticky1d(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("config-error"), "stderr: {err}");
}

#[test]
fn missing_out_dir_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, SMALL_EULERIAN);
    let r = sticky1d(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn env_var_supplies_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, SMALL_EULERIAN);
    let out = dir.path().join("from_env");
    let r = Command::new(env!("CARGO_BIN_EXE_sticky1d"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("STICKY1D_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(r.status.success());
    assert!(out.join("snapshots.csv").exists());
}

#[test]
fn sweep_check_passes_on_smooth_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    write(
        &cfg,
        "
solver = lagrangian_second
n_cells = 8
sigma = 1
T = 0.2
seed = 7

[K_rho]
family = gaussian_exp
amplitude = -1
exponent = 2

[K_eta]
family = gaussian_exp
amplitude = -1
exponent = 2
",
    );
    let out = dir.path().join("sweep_out");
    let r = sticky1d(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--sigmas",
        "2,5,20",
        "--out",
        out.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    assert!(out.join("sweep.csv").exists());
    assert!(out.join("summary.json").exists());
}

#[test]
fn decay_and_reproduce_and_validate_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("decay.cfg");
    write(
        &cfg,
        "
solver = lagrangian_newtonian
n_cells = 8
sigma = 1
T = 0.5
velocity_range = 0 0

[K_rho]
family = newtonian

[K_eta]
family = newtonian

[H_rho]
family = gaussian_exp
amplitude = -1
exponent = 2

[H_eta]
family = gaussian_exp
amplitude = -1
exponent = 2

[A_rho]
family = quadratic_well
amplitude = 1

[A_eta]
family = quadratic_well
amplitude = 1
",
    );
    let out = dir.path().join("decay_out");
    let r = sticky1d(&[
        "decay",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    assert!(out.join("decay.csv").exists());

    let r = sticky1d(&["reproduce", "--figure", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(
        r.status.code(),
        Some(1),
        "unknown figure id is an input error"
    );

    let r = sticky1d(&["validate-potentials", "--config", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("K_rho"), "{text}");
    assert!(text.contains("A_eta"), "{text}");
}

#[test]
fn compare_prints_a_small_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cmp.cfg");
    write(
        &cfg,
        "
solver = lagrangian_second
n_cells = 8
sigma = 1
T = 0.1
velocity_range = 0 0

[K_rho]
family = gaussian_exp
amplitude = -0.5
exponent = 2
",
    );
    let r = sticky1d(&["compare", "--config", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let value: f64 = String::from_utf8_lossy(&r.stdout).trim().parse().unwrap();
    assert!((0.0..0.01).contains(&value), "deviation {value}");
}
