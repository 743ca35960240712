//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantity next to its pinned threshold. Run with
//! `cargo test -p sticky1d-core --test acceptance -- --nocapture` to see
//! every line.

mod common;

use common::*;
use rand::Rng;
use std::time::Instant;
use sticky1d_core::config::{InitialLayout, PotentialSet, SimConfig, Solver};
use sticky1d_core::eulerian::{self, MergeRule, Species, TimeMode};
use sticky1d_core::experiments;
use sticky1d_core::lagrangian::{self, LagrangianState};
use sticky1d_core::potentials::PotentialSpec;
use sticky1d_core::transport::{project_cone, w2, GridFunction};

fn ge(amplitude: f64, scale: f64, exponent: f64) -> PotentialSpec {
    PotentialSpec::gaussian_exp(amplitude, scale, exponent)
}

/// Criterion 1: the quantile-side distance agrees with the exact sorted
/// transport cost on 200 random pairs (tolerance 1e-10), and with a full
/// coupling brute force on small rational instances.
#[test]
fn criterion_01_isometry_oracle() {
    let started = Instant::now();
    let mut rng = test_rng(1001);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mu = random_measure(&mut rng, 64);
        let nu = random_measure(&mut rng, 64);
        let d2 = {
            let d = w2(&mu, &nu);
            d * d
        };
        let pairs = |m: &sticky1d_core::transport::AtomicMeasure| -> Vec<(f64, f64)> {
            m.atoms().iter().map(|a| (a.position, a.mass)).collect()
        };
        let oracle = sorted_matching_cost(&pairs(&mu), &pairs(&nu));
        worst = worst.max((d2 - oracle).abs());
    }
    assert!(worst <= 1e-10, "sorted-matching deviation {worst}");

    let mut worst_small: f64 = 0.0;
    for _ in 0..60 {
        let denom = rng.random_range(2..=7);
        let (mu, mu_expanded) = random_rational_measure(&mut rng, 4, denom);
        let (nu, nu_expanded) = random_rational_measure(&mut rng, 4, denom);
        let d2 = {
            let d = w2(&mu, &nu);
            d * d
        };
        let brute = permutation_brute_force_cost(&mu_expanded, &nu_expanded);
        worst_small = worst_small.max((d2 - brute).abs());
    }
    assert!(
        worst_small <= 1e-10,
        "coupling brute-force deviation {worst_small}"
    );

    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "took {dt:?}");
    println!(
        "PASS criterion 1: isometry oracle, max |w2^2 - oracle| = {worst:.3e} (small-case {worst_small:.3e}) <= 1e-10, {dt:?}"
    );
}

/// Criterion 2: cone projection cost within 1e-9 of the brute-force
/// quadratic program on 1000 random weighted instances, and the
/// subdifferential inequality holds against 1000 random monotone
/// competitors per instance.
#[test]
fn criterion_02_pava_optimality() {
    let started = Instant::now();
    let mut rng = test_rng(1002);
    let mut worst_cost_gap: f64 = 0.0;
    let mut worst_pairing: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let out = project_cone(&values, &weights).unwrap();
        let (_, oracle_cost) = isotonic_qp_oracle(&values, &weights);
        let cost = weighted_cost(&values, &weights, &out);
        worst_cost_gap = worst_cost_gap.max((cost - oracle_cost).abs());

        for _ in 0..1000 {
            let z = random_monotone(&mut rng, n, -12.0, 12.0);
            let pairing: f64 = values
                .iter()
                .zip(&weights)
                .zip(out.iter().zip(&z))
                .map(|((v, w), (y, z))| w * (v - y) * (z - y))
                .sum();
            worst_pairing = worst_pairing.max(pairing);
        }
    }
    assert!(worst_cost_gap <= 1e-9, "cost gap {worst_cost_gap}");
    assert!(
        worst_pairing <= 1e-9,
        "subdifferential pairing {worst_pairing}"
    );
    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "took {dt:?}");
    println!(
        "PASS criterion 2: cone projection optimal, cost gap {worst_cost_gap:.3e} <= 1e-9, worst competitor pairing {worst_pairing:.3e} <= 1e-9, {dt:?}"
    );
}

/// Criterion 3: the linear-on-the-cone self energy agrees with the
/// brute-force double integral to 1e-12 on 100 random monotone profiles.
#[test]
fn criterion_03_linearization_lemma() {
    let started = Instant::now();
    let mut rng = test_rng(1003);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=128);
        let xs = random_monotone(&mut rng, n, -2.0, 2.0);
        let s = lagrangian::self_energy_linear(&GridFunction::new(xs.clone())).unwrap();
        let mut brute = 0.0;
        for &a in &xs {
            for &b in &xs {
                brute += (a - b).abs();
            }
        }
        brute *= 0.5 / (n as f64 * n as f64);
        worst = worst.max((s - brute).abs());
    }
    assert!(worst <= 1e-12, "deviation {worst}");
    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "took {dt:?}");
    println!("PASS criterion 3: linearization lemma, max deviation {worst:.3e} <= 1e-12, {dt:?}");
}

/// Criterion 4: measured convergence order of the three-stage Runge-Kutta
/// step on the exact damped free flow is at least 2.5.
#[test]
fn criterion_04_rk_order() {
    let started = Instant::now();
    let sigma = 1.0f64;
    let t_final = 1.0f64;
    let specs = PotentialSet::all_zero();
    let mut errors = Vec::new();
    for dt in [0.1f64, 0.05, 0.025] {
        let single = |v: f64| eulerian::SpeciesState::new(vec![0.0], vec![v], vec![1.0]).unwrap();
        let mut state = eulerian::TwoSpeciesState::new(single(1.0), single(0.0));
        for _ in 0..(t_final / dt).round() as usize {
            eulerian::step_rk3(&mut state, &specs, sigma, TimeMode::Original, dt).unwrap();
        }
        errors.push((state.rho.velocities()[0] - (-sigma * t_final).exp()).abs());
    }
    let s1 = (errors[0] / errors[1]).log2();
    let s2 = (errors[1] / errors[2]).log2();
    let order = s1.min(s2);
    assert!(order >= 2.5, "order {order} (slopes {s1}, {s2})");
    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "took {dt:?}");
    println!("PASS criterion 4: RK convergence order {order:.2} >= 2.5, {dt:?}");
}

fn figure1_config(seed: u64) -> SimConfig {
    let mut config = SimConfig::minimal(Solver::Eulerian);
    config.n_rho = 160;
    config.n_eta = 150;
    config.potentials.k_rho = ge(-1.0, 1.0, 3.0);
    config.potentials.k_eta = ge(-1.0, 1.0, 4.0);
    config.potentials.h_rho = ge(-1.0, 1.0, 2.0);
    config.potentials.h_eta = config.potentials.h_rho;
    config.sigma = 1.0;
    config.dt = 1e-3;
    config.t_final = 1.0;
    config.toll = 0.002;
    config.merge_rule = MergeRule::Momentum;
    config.seed = seed;
    config
}

/// Criterion 5: the all-attractive particle run keeps ordering, conserves
/// mass to 1e-12 and conserves momentum at every merge to 1e-12.
#[test]
fn criterion_05_sticky_conservation() {
    let started = Instant::now();
    let config = figure1_config(42);
    let out = eulerian::simulate(&config).expect("ordering violations are reported as errors");

    let mut worst_mass: f64 = 0.0;
    for snap in &out.snapshots {
        for s in [&snap.rho, &snap.eta] {
            assert!(s.positions().windows(2).all(|w| w[1] >= w[0]));
            worst_mass = worst_mass.max((s.masses().iter().sum::<f64>() - 1.0).abs());
        }
    }
    assert!(worst_mass <= 1e-12, "mass drift {worst_mass}");

    assert!(
        !out.events.is_empty(),
        "the attractive run must produce merges"
    );
    let mut worst_momentum: f64 = 0.0;
    for e in &out.events {
        worst_momentum = worst_momentum.max((e.momentum_pre - e.momentum_post).abs());
        assert!(e.ke_lost >= -1e-12);
    }
    assert!(worst_momentum <= 1e-12, "momentum defect {worst_momentum}");

    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "took {dt:?}");
    println!(
        "PASS criterion 5: sticky run with {} merges, mass drift {worst_mass:.3e} <= 1e-12, momentum defect {worst_momentum:.3e} <= 1e-12, {dt:?}",
        out.events.len()
    );
}

fn newtonian_specs() -> PotentialSet {
    let mut specs = PotentialSet::all_zero();
    specs.k_rho = PotentialSpec::newtonian();
    specs.k_eta = PotentialSpec::newtonian();
    specs.h_rho = ge(-1.0, 1.0, 2.0);
    specs.h_eta = specs.h_rho;
    specs.a_rho = PotentialSpec::quadratic_well(1.0, 0.0);
    specs.a_eta = PotentialSpec::quadratic_well(1.0, 0.0);
    specs
}

fn random_newtonian_state(seed: u64, n: usize, with_velocities: bool) -> LagrangianState {
    let mut rng = test_rng(seed);
    let x = GridFunction::new(random_monotone(&mut rng, n, -1.0, 1.0));
    let y = GridFunction::new(random_monotone(&mut rng, n, -1.0, 1.0));
    let (v, w) = if with_velocities {
        (
            GridFunction::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
            GridFunction::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
        )
    } else {
        (
            GridFunction::constant(n, 0.0),
            GridFunction::constant(n, 0.0),
        )
    };
    LagrangianState::new(x, y, v, w, 1.0).unwrap()
}

/// Criterion 6: per-step energy dissipation of the Newtonian projected
/// scheme, n = 64, sigma = 1, dt = 1e-3, T = 5.
#[test]
fn criterion_06_energy_dissipation() {
    let started = Instant::now();
    let specs = newtonian_specs();
    let mut state = random_newtonian_state(42, 64, true);
    let dt = 1e-3;
    let mut prev = lagrangian::energy_functional(&state, &specs).unwrap();
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    for _ in 0..5000 {
        state.step_newtonian(&specs, 1.0, dt).unwrap();
        let e = lagrangian::energy_functional(&state, &specs).unwrap();
        worst_rise = worst_rise.max(e - prev);
        assert!(e <= prev + 1e-8, "energy rose by {}", e - prev);
        prev = e;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: energy dissipation, worst per-step rise {worst_rise:.3e} <= 1e-8, {elapsed:?}"
    );
}

/// Criterion 7: damping sweep on the comparison-figure kernels. The
/// integrated distance to the first-order limit decreases strictly, drops
/// by at least 1e3 from sigma = 5 to sigma = 1000, and scales like epsilon
/// with a log-log slope in [0.5, 1.5].
#[test]
fn criterion_07_large_damping_limit() {
    let started = Instant::now();
    let mut base = SimConfig::minimal(Solver::LagrangianSecond);
    base.n_rho = 64;
    base.n_eta = 64;
    base.potentials.k_rho = ge(-1.0, 1.0, 3.0);
    base.potentials.k_eta = ge(-1.0, 1.0, 4.0);
    base.potentials.h_rho = ge(-1.0, 1.0, 2.0);
    base.potentials.h_eta = base.potentials.h_rho;
    base.sigma = 1.0;
    base.dt = 1e-3;
    base.t_final = 2.0;
    base.output_stride = 10;
    base.seed = 42;
    base.velocity_range = (-1.0, 1.0);

    let result = experiments::damping_sweep(&base, &[5.0, 10.0, 100.0, 1000.0]).unwrap();
    for e in &result.entries {
        println!(
            "  sweep sigma = {:>6}: D = {:.6e}, terminal W2 = {:.6e}",
            e.sigma, e.d_integral, e.terminal_w2
        );
    }
    assert!(
        result.d_strictly_decreasing(),
        "D must decrease strictly in sigma"
    );
    let d5 = result.entries[0].d_integral;
    let d1000 = result.entries[3].d_integral;
    assert!(
        d1000 <= 1e-3 * d5,
        "D(1000) = {d1000} vs 1e-3 * D(5) = {}",
        1e-3 * d5
    );
    let slope = result.loglog_slope();
    assert!((0.5..=1.5).contains(&slope), "log-log slope {slope}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS criterion 7: damping sweep, D(1000)/D(5) = {:.3e} <= 1e-3, slope {slope:.3} in [0.5, 1.5], {elapsed:?}",
        d1000 / d5
    );
}

/// Criterion 8: Newtonian decay at desk scale. Terminal norms shrink by
/// 1e-2 and the state collapses to the Dirac pair at the well center.
#[test]
fn criterion_08_newtonian_collapse() {
    let started = Instant::now();
    let mut config = SimConfig::minimal(Solver::LagrangianNewtonian);
    config.n_rho = 64;
    config.n_eta = 64;
    config.potentials = newtonian_specs();
    config.sigma = 1.0;
    config.dt = 1e-3;
    config.t_final = 20.0;
    config.output_stride = 100;
    let mut rng = test_rng(42);
    let x = random_monotone(&mut rng, 64, -1.0, 1.0);
    let y = random_monotone(&mut rng, 64, -1.0, 1.0);
    config.layout = InitialLayout::ExplicitGrid {
        x,
        y,
        v: vec![0.0; 64],
        w: vec![0.0; 64],
    };

    let series = experiments::newtonian_decay(&config, 20.0).unwrap();
    let last = series.times.len() - 1;
    let initial = series.norm_sum(0);
    let terminal = series.norm_sum(last);
    assert!(
        terminal <= 1e-2 * initial,
        "norms {terminal} vs 1e-2 * {initial}"
    );
    let w2_final = series.w2_to_center[last];
    assert!(w2_final <= 1e-2, "W2 to collapse {w2_final}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 8: collapse, terminal/initial norms {:.3e} <= 1e-2, W2 to Dirac pair {w2_final:.3e} <= 1e-2, {elapsed:?}",
        terminal / initial
    );
}

/// Criterion 9: particle and grid solvers agree on a smooth pre-collision
/// configuration to within 5 dt in the product Wasserstein distance.
#[test]
fn criterion_09_cross_validation() {
    let started = Instant::now();
    let mut config = SimConfig::minimal(Solver::LagrangianSecond);
    config.n_rho = 64;
    config.n_eta = 64;
    config.potentials.k_rho = ge(-0.5, 1.0, 2.0);
    config.potentials.k_eta = ge(-0.5, 1.0, 2.0);
    config.potentials.h_rho = ge(-0.25, 1.0, 2.0);
    config.potentials.h_eta = config.potentials.h_rho;
    config.sigma = 1.0;
    config.dt = 1e-3;
    config.t_final = 0.4;
    config.output_stride = 10;
    config.velocity_range = (0.0, 0.0);

    let deviation = experiments::cross_validate(&config).unwrap();
    let bound = 5.0 * config.dt;
    assert!(deviation <= bound, "deviation {deviation} > {bound}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 9: cross-validation deviation {deviation:.3e} <= {bound:.1e}, {elapsed:?}"
    );
}

/// Criterion 10: the figure bundles regenerate with their documented seeds
/// and carry the logged qualitative properties.
#[test]
fn criterion_10_figure_bundles() {
    let started = Instant::now();
    let seed = 42;
    for id in 1..=8u8 {
        let bundle = experiments::reproduce_figure(id, seed).unwrap();
        let summary = experiments::bundle_summary(&bundle);
        for check in &summary.checks {
            assert!(check.passed, "fig{id} check {} failed", check.name);
        }
        match id {
            1 | 4 => {
                let history = &bundle.runs[0].cluster_history;
                let first = history.first().unwrap();
                let last = history.last().unwrap();
                assert!(last.1 < first.1 && last.2 < first.2, "fig{id} must coarsen");
            }
            3 => {
                assert_ne!(
                    bundle.runs[0].cluster_history, bundle.runs[1].cluster_history,
                    "fig3 seeds must produce different merge patterns"
                );
            }
            8 => {
                let curves: Vec<&experiments::FigureRun> = bundle
                    .runs
                    .iter()
                    .filter(|r| !r.w2_curve.is_empty())
                    .collect();
                assert_eq!(curves.len(), 3);
                for pair in curves.windows(2) {
                    let small = &pair[0].w2_curve;
                    let big = &pair[1].w2_curve;
                    let max_small = small.iter().map(|p| p.1).fold(0.0, f64::max);
                    let max_big = big.iter().map(|p| p.1).fold(0.0, f64::max);
                    assert!(max_big < max_small, "larger sigma must stay below");
                }
            }
            _ => {}
        }
        // The writer round-trips through the filesystem.
        if id == 1 {
            let dir = tempfile::tempdir().unwrap();
            experiments::write_figure_bundle(dir.path(), &bundle).unwrap();
            assert!(dir
                .path()
                .join("fig1/all_attractive/trajectory.csv")
                .exists());
            assert!(dir.path().join("fig1/summary.json").exists());
        }
        println!("  fig{id}: {} runs, all checks passed", bundle.runs.len());
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 10: figure bundles 1-8 regenerate with seed {seed}, {elapsed:?}");
}

/// The sticky run of criterion 5 also underlies the merge-bookkeeping
/// cross-check: events must name same-species neighbours only.
#[test]
fn merge_events_stay_within_species() {
    let mut config = figure1_config(7);
    config.t_final = 0.2;
    let out = eulerian::simulate(&config).unwrap();
    for e in &out.events {
        assert!(matches!(e.species, Species::Rho | Species::Eta));
        assert_eq!(e.right, e.left + 1);
    }
}
