//! Command-line surface: dispatches the config-driven simulators and
//! experiments and writes their output bundles.
//!
//! Exit codes: 0 success, 1 configuration/input error, 2 numerical failure,
//! 3 failed acceptance check (`sweep`/`decay` with `--check`).

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;
use sticky1d_core::config::{self, SimConfig, Solver};
use sticky1d_core::error::{Error, Result};
use sticky1d_core::{eulerian, experiments, io, lagrangian, transport};

/// Environment variable consulted when `--out` is not given.
pub const OUT_DIR_ENV: &str = "STICKY1D_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "sticky1d",
    version,
    about = "Two-species sticky-particle dynamics in 1D"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the solver selected by the config and write its output bundle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to $STICKY1D_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Damping sweep: rescaled second-order runs against the first-order limit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated damping values, e.g. 5,10,100,1000.
        #[arg(long)]
        sigmas: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 3 unless the integrated distance decreases strictly.
        #[arg(long)]
        check: bool,
    },
    /// Large-time decay run for Newtonian self-attraction with wells.
    Decay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Horizon override (defaults to the config's T).
        #[arg(long)]
        horizon: Option<f64>,
        /// Exit 3 unless the energy is nonincreasing.
        #[arg(long)]
        check: bool,
    },
    /// Cross-validate the particle and grid solvers; prints the worst
    /// product Wasserstein deviation.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate one of the qualitative figure bundles (1-8).
    Reproduce {
        #[arg(long)]
        figure: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the admissibility of every potential slot in the config.
    ValidatePotentials {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Quadratic Wasserstein distance between two measure CSV files.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Error::Config(format!(
                "no output directory: pass --out or set ${OUT_DIR_ENV}"
            ))
        })
}

fn write_common(dir: &Path, config: &SimConfig, wall_time_s: f64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.cfg"), config.canonical_text())?;
    io::write_json(
        &dir.join("metadata.json"),
        &io::RunMetadata::new(config, wall_time_s),
    )?;
    Ok(())
}

fn cmd_simulate(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<i32> {
    let mut config = config::load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = out_dir(out)?;
    let started = Instant::now();
    match config.solver {
        Solver::Eulerian => {
            let result = eulerian::simulate(&config)?;
            std::fs::create_dir_all(&dir)?;
            io::write_particle_snapshots(&dir.join("snapshots.csv"), &result.snapshots)?;
            io::write_events(&dir.join("events.csv"), &result.events)?;
            io::write_diagnostics(&dir.join("diagnostics.csv"), &result.diagnostics)?;
            if let Some(last) = result.snapshots.last() {
                io::write_measure(&dir.join("rho_final.csv"), &last.rho.to_measure())?;
                io::write_measure(&dir.join("eta_final.csv"), &last.eta.to_measure())?;
            }
            write_common(&dir, &config, started.elapsed().as_secs_f64())?;
            println!(
                "simulate: {} steps, {} merge events, final counts {}x{}",
                config.n_steps(),
                result.events.len(),
                result.snapshots.last().map(|s| s.rho.len()).unwrap_or(0),
                result.snapshots.last().map(|s| s.eta.len()).unwrap_or(0),
            );
        }
        _ => {
            let result = lagrangian::run(&config)?;
            std::fs::create_dir_all(&dir)?;
            io::write_grid_snapshots(&dir.join("fields.csv"), &result.snapshots)?;
            io::write_diagnostics(&dir.join("diagnostics.csv"), &result.diagnostics)?;
            if let Some(last) = result.snapshots.last() {
                let x = transport::PseudoInverse::from_uniform(last.x.values().to_vec())?;
                let y = transport::PseudoInverse::from_uniform(last.y.values().to_vec())?;
                io::write_pseudo_inverse(&dir.join("x_final.csv"), &x)?;
                io::write_pseudo_inverse(&dir.join("y_final.csv"), &y)?;
                io::write_measure(&dir.join("rho_final.csv"), &transport::to_measure(&x))?;
                io::write_measure(&dir.join("eta_final.csv"), &transport::to_measure(&y))?;
            }
            write_common(&dir, &config, started.elapsed().as_secs_f64())?;
            let last = result.diagnostics.last();
            println!(
                "simulate: {} steps, final clusters {}x{}",
                config.n_steps(),
                last.map(|d| d.clusters_rho).unwrap_or(0),
                last.map(|d| d.clusters_eta).unwrap_or(0),
            );
        }
    }
    Ok(0)
}

fn parse_sigmas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad sigma value `{tok}`")))
        })
        .collect()
}

fn cmd_sweep(config_path: &Path, sigmas: &str, out: Option<PathBuf>, check: bool) -> Result<i32> {
    let config = config::load_config(config_path)?;
    let sigmas = parse_sigmas(sigmas)?;
    let dir = out_dir(out)?;
    let started = Instant::now();
    let result = experiments::damping_sweep(&config, &sigmas)?;
    std::fs::create_dir_all(&dir)?;
    experiments::write_sweep_csv(&dir.join("sweep.csv"), &result)?;
    let summary = experiments::sweep_summary(&result);
    io::write_json(&dir.join("summary.json"), &summary)?;
    write_common(&dir, &config, started.elapsed().as_secs_f64())?;
    for e in &result.entries {
        println!(
            "sigma = {:>8}: D = {:.6e}, terminal W2 = {:.6e}",
            e.sigma, e.d_integral, e.terminal_w2
        );
    }
    Ok(if check && !summary.all_passed() { 3 } else { 0 })
}

fn cmd_decay(
    config_path: &Path,
    out: Option<PathBuf>,
    horizon: Option<f64>,
    check: bool,
) -> Result<i32> {
    let config = config::load_config(config_path)?;
    let horizon = horizon.unwrap_or(config.t_final);
    let dir = out_dir(out)?;
    let started = Instant::now();
    let series = experiments::newtonian_decay(&config, horizon)?;
    std::fs::create_dir_all(&dir)?;
    experiments::write_decay_csv(&dir.join("decay.csv"), &series)?;
    let summary = experiments::decay_summary(&series, config.output_stride);
    io::write_json(&dir.join("summary.json"), &summary)?;
    write_common(&dir, &config, started.elapsed().as_secs_f64())?;
    let last = series.times.len() - 1;
    println!(
        "decay: |X|+|Y|+|V|+|W| went from {:.6e} to {:.6e}; W2 to collapse {:.6e}",
        series.norm_sum(0),
        series.norm_sum(last),
        series.w2_to_center[last],
    );
    Ok(if check && !summary.all_passed() { 3 } else { 0 })
}

fn cmd_compare(config_path: &Path) -> Result<i32> {
    let config = config::load_config(config_path)?;
    let dev = experiments::cross_validate(&config)?;
    println!("{dev:?}");
    Ok(0)
}

fn cmd_reproduce(figure: u8, seed: u64, out: Option<PathBuf>) -> Result<i32> {
    let dir = out_dir(out)?;
    let bundle = experiments::reproduce_figure(figure, seed)?;
    experiments::write_figure_bundle(&dir, &bundle)?;
    let summary = experiments::bundle_summary(&bundle);
    for check in &summary.checks {
        println!(
            "fig{figure} {}: {}",
            check.name,
            if check.passed { "ok" } else { "FAILED" }
        );
    }
    Ok(0)
}

fn cmd_validate_potentials(config_path: &Path, radius: f64, samples: usize) -> Result<i32> {
    let config = config::load_config(config_path)?;
    for (name, spec) in config.potentials.slots() {
        let r = spec.validate(radius, samples)?;
        println!(
            "{name}: family={} A={} SQ={} SL={} AT={} H1={} H2={} K(c)=0:{}{}{}",
            spec.family,
            r.satisfies_a,
            r.satisfies_sq,
            r.satisfies_sl,
            r.satisfies_at,
            r.satisfies_h1,
            r.satisfies_h2,
            r.zero_at_origin,
            r.sl_constant
                .map(|c| format!(" C={c:.6}"))
                .unwrap_or_default(),
            r.witness
                .map(|w| format!(" witness={w:.6}"))
                .unwrap_or_default(),
        );
    }
    Ok(0)
}

fn cmd_distance(a: &Path, b: &Path) -> Result<i32> {
    let mu = io::read_measure(a)?;
    let nu = io::read_measure(b)?;
    println!("{:?}", transport::w2(&mu, &nu));
    Ok(0)
}

/// Parse and run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Simulate { config, out, seed } => cmd_simulate(&config, out, seed),
        Cmd::Sweep {
            config,
            sigmas,
            out,
            check,
        } => cmd_sweep(&config, &sigmas, out, check),
        Cmd::Decay {
            config,
            out,
            horizon,
            check,
        } => cmd_decay(&config, out, horizon, check),
        Cmd::Compare { config } => cmd_compare(&config),
        Cmd::Reproduce { figure, seed, out } => cmd_reproduce(figure, seed, out),
        Cmd::ValidatePotentials {
            config,
            radius,
            samples,
        } => cmd_validate_potentials(&config, radius, samples),
        Cmd::Distance { a, b } => cmd_distance(&a, &b),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("[{}] {}", e.code(), e);
            e.exit_code()
        }
    }
}
