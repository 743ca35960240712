//! Reproducible studies: the damping sweep, the large-time decay run for
//! Newtonian self-attraction with external wells, cross-validation of the
//! particle and grid solvers, and regeneration of the qualitative figure
//! bundles.

use crate::config::{PotentialSet, SimConfig, Solver};
use crate::error::{Error, Result};
use crate::eulerian;
use crate::io::{self, CheckOutcome, RunSummary};
use crate::lagrangian::{self, LagrangianState};
use crate::parallel;
use crate::potentials::PotentialSpec;
use crate::transport::{self, GridFunction, PseudoInverse};
use std::path::Path;
use std::time::{Duration, Instant};

/// One row of a damping sweep: the time-integrated squared distance between
/// the rescaled second-order trajectory and the first-order limit.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub sigma: f64,
    pub epsilon: f64,
    pub d_integral: f64,
    pub terminal_w2: f64,
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn d_strictly_decreasing(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].d_integral < w[0].d_integral)
    }

    /// Least-squares slope of `log D` against `log epsilon`.
    pub fn loglog_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.d_integral > 0.0)
            .map(|e| (e.epsilon.ln(), e.d_integral.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

fn require_sublinear_gradients(specs: &PotentialSet) -> Result<()> {
    for (name, spec) in specs.slots() {
        if name.starts_with('A') || spec.is_zero() {
            continue;
        }
        let report = spec.validate(10.0, 201)?;
        if !report.satisfies_sl {
            return Err(Error::Config(format!(
                "damping sweep needs kernels with sub-linear gradients; {name} fails"
            )));
        }
    }
    Ok(())
}

/// Recorded (X, Y) profile pairs at the output times.
type PairTrajectory = Vec<(GridFunction, GridFunction)>;

/// Trapezoid of the squared product distance between two recorded
/// trajectories over their (shared) output times.
fn integrated_square_distance(
    times: &[f64],
    a: &[(GridFunction, GridFunction)],
    b: &[(GridFunction, GridFunction)],
) -> f64 {
    let d2: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|((ax, ay), (bx, by))| {
            let dx = ax.l2_distance(bx);
            let dy = ay.l2_distance(by);
            dx * dx + dy * dy
        })
        .collect();
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (d2[k] + d2[k - 1]);
    }
    acc
}

fn record_first_order(
    init: &LagrangianState,
    specs: &PotentialSet,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<(Vec<f64>, PairTrajectory)> {
    let mut state = init.clone();
    let mut times = vec![state.time];
    let mut traj = vec![(state.x.clone(), state.y.clone())];
    for step in 1..=n_steps {
        state.step_first_order(specs, dt)?;
        if step % stride == 0 || step == n_steps {
            times.push(state.time);
            traj.push((state.x.clone(), state.y.clone()));
        }
    }
    Ok((times, traj))
}

/// For each damping value, run the rescaled second-order solver against the
/// first-order limit from the same initial measures and integrate the
/// squared distance in time. The configured velocity draw is held fixed in
/// the original time frame, so each rescaled run starts from `sigma` times
/// it. Entries run in parallel and are reported in input order.
pub fn damping_sweep(base: &SimConfig, sigmas: &[f64]) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(Error::Config("sweep needs at least one sigma".into()));
    }
    if sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Config("sweep sigmas must be positive".into()));
    }
    base.validate()?;
    require_sublinear_gradients(&base.potentials)?;

    let init = lagrangian::initial_state(base)?;
    let specs = &base.potentials;
    let dt = base.dt;
    let n_steps = base.n_steps();
    let stride = base.output_stride;

    let (times, reference) = record_first_order(&init, specs, dt, n_steps, stride)?;

    let entries: Vec<Result<SweepEntry>> = parallel::map_items(sigmas, |&sigma| {
        let started = Instant::now();
        let epsilon = sigma.powi(-2);
        // Rescaled initial velocities: time runs sigma times slower, so the
        // fixed physical draw becomes sigma times itself.
        let scale =
            |g: &GridFunction| GridFunction::new(g.values().iter().map(|v| sigma * v).collect());
        let mut state = LagrangianState::new(
            init.x.clone(),
            init.y.clone(),
            scale(&init.v),
            scale(&init.w),
            epsilon,
        )?;
        let mut traj = vec![(state.x.clone(), state.y.clone())];
        for step in 1..=n_steps {
            state.step_second_order(specs, dt)?;
            if step % stride == 0 || step == n_steps {
                traj.push((state.x.clone(), state.y.clone()));
            }
        }
        let d_integral = integrated_square_distance(&times, &traj, &reference);
        let (lx, ly) = traj.last().unwrap();
        let (rx, ry) = reference.last().unwrap();
        let dx = lx.l2_distance(rx);
        let dy = ly.l2_distance(ry);
        Ok(SweepEntry {
            sigma,
            epsilon,
            d_integral,
            terminal_w2: (dx * dx + dy * dy).sqrt(),
            runtime: started.elapsed(),
        })
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { entries })
}

/// Norm, energy and distance-to-collapse series of a Newtonian run.
#[derive(Debug, Clone)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub l2_x: Vec<f64>,
    pub l2_y: Vec<f64>,
    pub l2_v: Vec<f64>,
    pub l2_w: Vec<f64>,
    pub energy: Vec<f64>,
    /// Product distance to the Dirac pair at the well center.
    pub w2_to_center: Vec<f64>,
    pub well_center: f64,
}

impl DecaySeries {
    pub fn norm_sum(&self, k: usize) -> f64 {
        self.l2_x[k] + self.l2_y[k] + self.l2_v[k] + self.l2_w[k]
    }

    pub fn energy_nonincreasing(&self, tol_per_interval: f64) -> bool {
        self.energy
            .windows(2)
            .all(|w| w[1] <= w[0] + tol_per_interval)
    }
}

/// Coercivity constants of an external well about its own center, sampled
/// on a symmetric grid.
fn well_constants(spec: &PotentialSpec, radius: f64) -> (f64, f64) {
    let m = 200;
    let mut lambda = f64::INFINITY;
    let mut alpha = f64::INFINITY;
    for j in 1..=m {
        let u = radius * j as f64 / m as f64;
        for x in [spec.center + u, spec.center - u] {
            let r = x - spec.center;
            lambda = lambda.min(spec.eval(x) / (r * r));
            alpha = alpha.min(r * spec.eval_derivative(x) / (r * r));
        }
    }
    (lambda, alpha)
}

/// Run the Newtonian projected solver to the horizon and record the decay
/// series. Requires unit Newtonian self kernels, a symmetric attractive
/// cross kernel and coercive external wells.
pub fn newtonian_decay(config: &SimConfig, horizon: f64) -> Result<DecaySeries> {
    config.validate()?;
    let specs = &config.potentials;
    for (name, k) in [("K_rho", &specs.k_rho), ("K_eta", &specs.k_eta)] {
        if k.family != crate::potentials::Family::Newtonian || k.amplitude != 1.0 {
            return Err(Error::Config(format!(
                "decay run requires unit newtonian {name}"
            )));
        }
    }
    if !specs.symmetric_cross() {
        return Err(Error::Config(
            "decay run requires symmetric cross potentials".into(),
        ));
    }
    if !specs.h_rho.is_zero() {
        let report = specs.h_rho.validate(10.0, 201)?;
        if !report.satisfies_at {
            return Err(Error::Config(
                "decay run requires an attractive cross potential".into(),
            ));
        }
    }
    for (name, a) in [("A_rho", &specs.a_rho), ("A_eta", &specs.a_eta)] {
        let (lambda, alpha) = well_constants(a, 10.0);
        if !(lambda > 0.0) || !(alpha > 0.0) {
            return Err(Error::Config(format!(
                "decay run requires coercive external wells; {name} has lambda = {lambda}, alpha = {alpha}"
            )));
        }
    }
    if specs.a_rho.center != specs.a_eta.center {
        return Err(Error::Config(
            "decay run expects both wells at one center".into(),
        ));
    }
    let center = specs.a_rho.center;

    let mut state = lagrangian::initial_state(config)?;
    let dt = config.dt;
    let n_steps = ((horizon / dt).round() as usize).max(1);
    let mut series = DecaySeries {
        times: Vec::new(),
        l2_x: Vec::new(),
        l2_y: Vec::new(),
        l2_v: Vec::new(),
        l2_w: Vec::new(),
        energy: Vec::new(),
        w2_to_center: Vec::new(),
        well_center: center,
    };
    let mut push = |state: &LagrangianState| -> Result<()> {
        series.times.push(state.time);
        series.l2_x.push(state.x.l2_norm());
        series.l2_y.push(state.y.l2_norm());
        series.l2_v.push(state.v.l2_norm());
        series.l2_w.push(state.w.l2_norm());
        series
            .energy
            .push(lagrangian::energy_functional(state, specs)?);
        let shifted = |g: &GridFunction| -> f64 {
            let n = g.n_cells() as f64;
            (g.values()
                .iter()
                .map(|v| (v - center) * (v - center))
                .sum::<f64>()
                / n)
                .sqrt()
        };
        let dx = shifted(&state.x);
        let dy = shifted(&state.y);
        series.w2_to_center.push(dx.hypot(dy));
        Ok(())
    };
    push(&state)?;
    for step in 1..=n_steps {
        state.step_newtonian(specs, config.sigma, dt)?;
        if step % config.output_stride == 0 || step == n_steps {
            push(&state)?;
        }
    }
    Ok(series)
}

fn grid_measure(g: &GridFunction) -> crate::transport::AtomicMeasure {
    let x = PseudoInverse::from_uniform(g.values().to_vec())
        .expect("solver profiles are monotone on (0,1)");
    transport::to_measure(&x)
}

/// Run the equal-mass particle simulator (in the rescaled frame) and the
/// second-order grid solver from matched initial data; return the largest
/// product Wasserstein deviation over the output times.
pub fn cross_validate(config: &SimConfig) -> Result<f64> {
    config.validate()?;
    let specs = &config.potentials;
    let epsilon = config.epsilon();
    let dt = config.dt;
    let n_steps = config.n_steps();

    let mut grid_state = lagrangian::initial_state(config)?;
    let n = grid_state.n_cells();
    let mut particle_state = eulerian::TwoSpeciesState::new(
        eulerian::SpeciesState::new(
            grid_state.x.values().to_vec(),
            grid_state.v.values().to_vec(),
            vec![1.0 / n as f64; n],
        )?,
        eulerian::SpeciesState::new(
            grid_state.y.values().to_vec(),
            grid_state.w.values().to_vec(),
            vec![1.0 / n as f64; n],
        )?,
    );

    let mut worst: f64 = 0.0;
    for step in 1..=n_steps {
        eulerian::step_rk3(
            &mut particle_state,
            specs,
            config.sigma,
            eulerian::TimeMode::Rescaled { epsilon },
            dt,
        )?;
        eulerian::detect_and_merge(&mut particle_state, config.toll, config.merge_rule);
        grid_state.step_second_order(specs, dt)?;
        if step % config.output_stride == 0 || step == n_steps {
            let d_rho = transport::w2(
                &particle_state.rho.to_measure(),
                &grid_measure(&grid_state.x),
            );
            let d_eta = transport::w2(
                &particle_state.eta.to_measure(),
                &grid_measure(&grid_state.y),
            );
            worst = worst.max(d_rho.hypot(d_eta));
        }
    }
    Ok(worst)
}

/// Trajectory payload of one figure run.
#[derive(Debug, Clone)]
pub enum FigureTrajectory {
    Particles(Vec<eulerian::Snapshot>),
    Grid(Vec<lagrangian::Snapshot>),
}

#[derive(Debug, Clone)]
pub struct FigureRun {
    pub label: String,
    pub config: SimConfig,
    /// (time, clusters_rho, clusters_eta) per output time.
    pub cluster_history: Vec<(f64, usize, usize)>,
    /// Distance to the first-order reference per output time; empty for
    /// plain evolution runs.
    pub w2_curve: Vec<(f64, f64)>,
    pub trajectory: FigureTrajectory,
}

#[derive(Debug, Clone)]
pub struct FigureBundle {
    pub id: u8,
    pub seed: u64,
    pub runs: Vec<FigureRun>,
}

fn ge(amplitude: f64, scale: f64, exponent: f64) -> PotentialSpec {
    PotentialSpec::gaussian_exp(amplitude, scale, exponent)
}

fn particle_config(
    n: usize,
    m: usize,
    potentials: PotentialSet,
    sigma: f64,
    t_final: f64,
    seed: u64,
) -> SimConfig {
    let mut c = SimConfig::minimal(Solver::Eulerian);
    c.n_rho = n;
    c.n_eta = m;
    c.potentials = potentials;
    c.sigma = sigma;
    c.t_final = t_final;
    c.seed = seed;
    c
}

fn run_particle_figure(label: &str, config: &SimConfig) -> Result<FigureRun> {
    let out = eulerian::simulate(config)?;
    let cluster_history = out
        .diagnostics
        .iter()
        .map(|d| (d.time, d.clusters_rho, d.clusters_eta))
        .collect();
    Ok(FigureRun {
        label: label.to_string(),
        config: config.clone(),
        cluster_history,
        w2_curve: Vec::new(),
        trajectory: FigureTrajectory::Particles(out.snapshots),
    })
}

/// Comparison runs: first-order reference plus one rescaled second-order run
/// per damping value, with the distance curve recorded against the
/// reference.
fn run_comparison_figure(base: &SimConfig, sigmas: &[f64]) -> Result<Vec<FigureRun>> {
    let init = lagrangian::initial_state(base)?;
    let specs = &base.potentials;
    let dt = base.dt;
    let n_steps = base.n_steps();
    let stride = base.output_stride;
    let (times, reference) = record_first_order(&init, specs, dt, n_steps, stride)?;

    let mut first_config = base.clone();
    first_config.solver = Solver::LagrangianFirst;
    let mut runs = vec![FigureRun {
        label: "first_order".to_string(),
        config: first_config,
        cluster_history: times
            .iter()
            .zip(&reference)
            .map(|(t, (x, y))| {
                (
                    *t,
                    transport::clusters(x.values(), 0.0).num_blocks(),
                    transport::clusters(y.values(), 0.0).num_blocks(),
                )
            })
            .collect(),
        w2_curve: Vec::new(),
        trajectory: FigureTrajectory::Grid(
            times
                .iter()
                .zip(&reference)
                .map(|(t, (x, y))| lagrangian::Snapshot {
                    time: *t,
                    x: x.clone(),
                    y: y.clone(),
                    v: GridFunction::constant(x.n_cells(), 0.0),
                    w: GridFunction::constant(y.n_cells(), 0.0),
                })
                .collect(),
        ),
    }];

    for &sigma in sigmas {
        let mut config = base.clone();
        config.solver = Solver::LagrangianSecond;
        config.sigma = sigma;
        // Unlike the sweep, every damping value starts from the identical
        // rescaled state, so the curves differ only through epsilon and the
        // pointwise ordering across sigma is visible from time zero.
        let mut state = LagrangianState::new(
            init.x.clone(),
            init.y.clone(),
            init.v.clone(),
            init.w.clone(),
            sigma.powi(-2),
        )?;
        let mut snaps = vec![lagrangian::Snapshot {
            time: state.time,
            x: state.x.clone(),
            y: state.y.clone(),
            v: state.v.clone(),
            w: state.w.clone(),
        }];
        let mut curve = vec![(0.0, 0.0)];
        let mut history = vec![(
            0.0,
            transport::clusters(state.x.values(), 0.0).num_blocks(),
            transport::clusters(state.y.values(), 0.0).num_blocks(),
        )];
        let mut out_idx = 0usize;
        for step in 1..=n_steps {
            state.step_second_order(specs, dt)?;
            if step % stride == 0 || step == n_steps {
                out_idx += 1;
                let (rx, ry) = &reference[out_idx];
                let dx = state.x.l2_distance(rx);
                let dy = state.y.l2_distance(ry);
                curve.push((state.time, (dx * dx + dy * dy).sqrt()));
                history.push((
                    state.time,
                    transport::clusters(state.x.values(), 0.0).num_blocks(),
                    transport::clusters(state.y.values(), 0.0).num_blocks(),
                ));
                snaps.push(lagrangian::Snapshot {
                    time: state.time,
                    x: state.x.clone(),
                    y: state.y.clone(),
                    v: state.v.clone(),
                    w: state.w.clone(),
                });
            }
        }
        runs.push(FigureRun {
            label: format!("sigma_{sigma}"),
            config,
            cluster_history: history,
            w2_curve: curve,
            trajectory: FigureTrajectory::Grid(snaps),
        });
    }
    Ok(runs)
}

fn grid_config(
    n: usize,
    potentials: PotentialSet,
    sigma: f64,
    t_final: f64,
    seed: u64,
) -> SimConfig {
    let mut c = SimConfig::minimal(Solver::LagrangianSecond);
    c.n_rho = n;
    c.n_eta = n;
    c.potentials = potentials;
    c.sigma = sigma;
    c.t_final = t_final;
    c.seed = seed;
    c
}

/// Regenerate the qualitative content of one of the eight studies with the
/// captioned potentials and counts. Velocities are random, so reproduction
/// is qualitative; the returned histories carry the logged properties.
pub fn reproduce_figure(id: u8, seed: u64) -> Result<FigureBundle> {
    let runs = match id {
        1 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = ge(-1.0, 1.0, 3.0);
            p.k_eta = ge(-1.0, 1.0, 4.0);
            p.h_rho = ge(-1.0, 1.0, 2.0);
            p.h_eta = p.h_rho;
            vec![run_particle_figure(
                "all_attractive",
                &particle_config(160, 150, p, 1.0, 1.0, seed),
            )?]
        }
        2 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = ge(-3.0, 1.0, 2.0);
            p.k_eta = ge(-2.0, 2.0, 3.0);
            p.h_rho = PotentialSpec::power(-1.0, 2.0);
            p.h_eta = ge(1.0, 1.0, 2.0);
            vec![run_particle_figure(
                "repulsive_cross",
                &particle_config(180, 200, p, 1.0, 1.0, seed),
            )?]
        }
        3 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = ge(2.0, 1.0, 2.0);
            p.k_eta = ge(1.0, 1.0, 3.0);
            p.h_rho = PotentialSpec::power(1.0, 2.0);
            p.h_eta = ge(-1.0, 3.0, 2.0);
            vec![
                run_particle_figure(
                    "velocities_a",
                    &particle_config(170, 160, p, 1.0, 1.0, seed),
                )?,
                run_particle_figure(
                    "velocities_b",
                    &particle_config(170, 160, p, 1.0, 1.0, seed.wrapping_add(1)),
                )?,
            ]
        }
        4 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = PotentialSpec::newtonian();
            p.k_eta = PotentialSpec::newtonian();
            p.h_rho = ge(-1.0, 1.0, 2.0);
            p.h_eta = p.h_rho;
            p.a_rho = PotentialSpec::quadratic_well(1.0, 0.5);
            p.a_eta = PotentialSpec::quadratic_well(2.0, 0.5);
            vec![run_particle_figure(
                "newtonian_attractive_cross",
                &particle_config(200, 210, p, 1.0, 2.0, seed),
            )?]
        }
        5 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = PotentialSpec::newtonian();
            p.k_eta = PotentialSpec::newtonian();
            p.h_rho = ge(3.0, 1.0, 4.0);
            p.h_eta = p.h_rho;
            p.a_rho = PotentialSpec::quadratic_well(0.5, 0.5);
            p.a_eta = PotentialSpec::quadratic_well(5.0, 0.5);
            vec![run_particle_figure(
                "newtonian_repulsive_cross",
                &particle_config(180, 190, p, 1.0, 2.0, seed),
            )?]
        }
        6 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = ge(-1.0, 1.0, 3.0);
            p.k_eta = ge(-1.0, 1.0, 4.0);
            p.h_rho = ge(-1.0, 1.0, 2.0);
            p.h_eta = p.h_rho;
            run_comparison_figure(&grid_config(160, p, 10.0, 1.0, seed), &[10.0, 1000.0])?
        }
        7 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = ge(-1.0, 1.0, 2.0);
            p.k_eta = ge(-1.0, 3.0, 3.0);
            p.h_rho = PotentialSpec::power(1.0, 2.0);
            p.h_eta = ge(-1.0, 2.0, 4.0);
            run_comparison_figure(&grid_config(180, p, 5.0, 1.0, seed), &[5.0, 900.0])?
        }
        8 => {
            let mut p = PotentialSet::all_zero();
            p.k_rho = PotentialSpec::newtonian();
            p.k_eta = PotentialSpec::newtonian();
            p.h_rho = ge(-1.0, 1.0, 2.0);
            p.h_eta = p.h_rho;
            run_comparison_figure(&grid_config(128, p, 2.0, 2.0, seed), &[2.0, 5.0, 20.0])?
        }
        other => return Err(Error::InvalidInput(format!("unknown figure id {other}"))),
    };
    Ok(FigureBundle { id, seed, runs })
}

fn nonincreasing(history: &[(f64, usize, usize)]) -> bool {
    history
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 && w[1].2 <= w[0].2)
}

/// Pointwise comparison of two distance curves after time zero.
fn curve_below(big_sigma: &[(f64, f64)], small_sigma: &[(f64, f64)]) -> bool {
    big_sigma
        .iter()
        .zip(small_sigma)
        .skip(1)
        .all(|((_, a), (_, b))| *a <= *b + 1e-12)
}

/// The logged qualitative properties of a bundle, as a machine-readable
/// summary.
pub fn bundle_summary(bundle: &FigureBundle) -> RunSummary {
    let mut checks = Vec::new();
    for run in &bundle.runs {
        if !run.cluster_history.is_empty()
            && matches!(run.trajectory, FigureTrajectory::Particles(_))
        {
            let first = run.cluster_history.first().unwrap();
            let last = run.cluster_history.last().unwrap();
            checks.push(CheckOutcome {
                name: format!("{}:clusters_nonincreasing", run.label),
                passed: nonincreasing(&run.cluster_history),
                value: (last.1 + last.2) as f64,
                threshold: (first.1 + first.2) as f64,
            });
        }
    }
    if bundle.id == 3 && bundle.runs.len() == 2 {
        let differ = bundle.runs[0].cluster_history != bundle.runs[1].cluster_history;
        checks.push(CheckOutcome {
            name: "seed_variation_changes_merge_pattern".into(),
            passed: differ,
            value: if differ { 1.0 } else { 0.0 },
            threshold: 1.0,
        });
    }
    let curves: Vec<(&FigureRun, f64)> = bundle
        .runs
        .iter()
        .filter(|r| !r.w2_curve.is_empty())
        .map(|r| (r, r.config.sigma))
        .collect();
    for pair in curves.windows(2) {
        let (small, s_small) = pair[0];
        let (big, s_big) = pair[1];
        let passed = curve_below(&big.w2_curve, &small.w2_curve);
        checks.push(CheckOutcome {
            name: format!("w2_curve_sigma_{s_big}_below_sigma_{s_small}"),
            passed,
            value: big.w2_curve.iter().map(|p| p.1).fold(0.0, f64::max),
            threshold: small.w2_curve.iter().map(|p| p.1).fold(0.0, f64::max),
        });
    }
    RunSummary { checks }
}

/// Write a bundle as one directory per run: config snapshot, trajectory
/// CSV, cluster history and distance curve, plus the bundle summary.
pub fn write_figure_bundle(dir: &Path, bundle: &FigureBundle) -> Result<()> {
    let root = dir.join(format!("fig{}", bundle.id));
    for run in &bundle.runs {
        let run_dir = root.join(&run.label);
        std::fs::create_dir_all(&run_dir)?;
        std::fs::write(run_dir.join("config.cfg"), run.config.canonical_text())?;
        match &run.trajectory {
            FigureTrajectory::Particles(snaps) => {
                io::write_particle_snapshots(&run_dir.join("trajectory.csv"), snaps)?
            }
            FigureTrajectory::Grid(snaps) => {
                io::write_grid_snapshots(&run_dir.join("trajectory.csv"), snaps)?
            }
        }
        io::write_cluster_history(&run_dir.join("clusters.csv"), &run.cluster_history)?;
        if !run.w2_curve.is_empty() {
            io::write_w2_curve(&run_dir.join("w2.csv"), &run.w2_curve)?;
        }
    }
    io::write_json(&root.join("summary.json"), &bundle_summary(bundle))?;
    Ok(())
}

/// Summary for `sweep --check`: the integrated distance must decrease
/// strictly in the damping parameter.
pub fn sweep_summary(result: &SweepResult) -> RunSummary {
    let passed = result.d_strictly_decreasing();
    let checks = vec![CheckOutcome {
        name: "d_integral_strictly_decreasing".into(),
        passed,
        value: result
            .entries
            .last()
            .map(|e| e.d_integral)
            .unwrap_or(f64::NAN),
        threshold: result
            .entries
            .first()
            .map(|e| e.d_integral)
            .unwrap_or(f64::NAN),
    }];
    RunSummary { checks }
}

/// Summary for `decay --check`: energy must not rise between outputs.
pub fn decay_summary(series: &DecaySeries, stride: usize) -> RunSummary {
    let tol = 1e-8 * stride as f64;
    let passed = series.energy_nonincreasing(tol);
    let checks = vec![CheckOutcome {
        name: "energy_nonincreasing".into(),
        passed,
        value: series.energy.last().copied().unwrap_or(f64::NAN),
        threshold: series.energy.first().copied().unwrap_or(f64::NAN),
    }];
    RunSummary { checks }
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# schema {}", io::SCHEMA_VERSION)?;
    writeln!(out, "sigma,epsilon,d_integral,terminal_w2")?;
    for e in &result.entries {
        writeln!(
            out,
            "{},{},{},{}",
            io::fmt17(e.sigma),
            io::fmt17(e.epsilon),
            io::fmt17(e.d_integral),
            io::fmt17(e.terminal_w2)
        )?;
    }
    Ok(())
}

pub fn write_decay_csv(path: &Path, series: &DecaySeries) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# schema {}", io::SCHEMA_VERSION)?;
    writeln!(out, "time,l2_x,l2_y,l2_v,l2_w,energy,w2_to_center")?;
    for k in 0..series.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            io::fmt17(series.times[k]),
            io::fmt17(series.l2_x[k]),
            io::fmt17(series.l2_y[k]),
            io::fmt17(series.l2_v[k]),
            io::fmt17(series.l2_w[k]),
            io::fmt17(series.energy[k]),
            io::fmt17(series.w2_to_center[k])
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_validation_of_zero_dynamics_is_exact() {
        let mut config = SimConfig::minimal(Solver::LagrangianSecond);
        config.n_rho = 8;
        config.n_eta = 8;
        config.velocity_range = (0.0, 0.0);
        config.t_final = 0.02;
        let dev = cross_validate(&config).unwrap();
        assert!(dev <= 1e-14, "deviation {dev}");
    }

    #[test]
    fn identical_trajectories_integrate_to_zero() {
        let g = GridFunction::new(vec![0.0, 1.0]);
        let traj = vec![(g.clone(), g.clone()), (g.clone(), g.clone())];
        assert_eq!(integrated_square_distance(&[0.0, 1.0], &traj, &traj), 0.0);
    }

    #[test]
    fn unknown_figure_is_rejected() {
        assert!(reproduce_figure(0, 1).is_err());
        assert!(reproduce_figure(9, 1).is_err());
    }

    #[test]
    fn sweep_rejects_quartic_kernels() {
        let mut config = SimConfig::minimal(Solver::LagrangianSecond);
        config.n_rho = 4;
        config.n_eta = 4;
        config.potentials.k_rho = PotentialSpec::power(1.0, 4.0);
        assert!(damping_sweep(&config, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn decay_requires_coercive_wells() {
        let mut config = SimConfig::minimal(Solver::LagrangianNewtonian);
        config.n_rho = 4;
        config.n_eta = 4;
        config.potentials.k_rho = PotentialSpec::newtonian();
        config.potentials.k_eta = PotentialSpec::newtonian();
        // No wells at all: lambda = 0.
        assert!(newtonian_decay(&config, 1.0).is_err());
    }

    #[test]
    fn well_constants_of_quadratic() {
        let (lambda, alpha) = well_constants(&PotentialSpec::quadratic_well(2.0, 0.3), 5.0);
        assert!((lambda - 2.0).abs() <= 1e-9);
        assert!((alpha - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn sweep_is_bit_reproducible() {
        let mut base = SimConfig::minimal(Solver::LagrangianSecond);
        base.n_rho = 8;
        base.n_eta = 8;
        base.potentials.k_rho = PotentialSpec::gaussian_exp(-1.0, 1.0, 2.0);
        base.t_final = 0.05;
        base.seed = 11;
        let a = damping_sweep(&base, &[2.0, 10.0]).unwrap();
        let b = damping_sweep(&base, &[2.0, 10.0]).unwrap();
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ea.d_integral.to_bits(), eb.d_integral.to_bits());
            assert_eq!(ea.terminal_w2.to_bits(), eb.terminal_w2.to_bits());
        }
    }
}
