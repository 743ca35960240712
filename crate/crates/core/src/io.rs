//! File formats: CSV series, measure files, run metadata and summaries.
//!
//! Every CSV starts with a `# schema` comment and a header row; floats are
//! written with 17 significant digits so files round-trip exactly and runs
//! with equal (config, seed) are byte-identical.

use crate::config::SimConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::eulerian::MergeEvent;
use crate::transport::{Atom, AtomicMeasure, PseudoInverse};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";
pub const RK_TABLEAU: &str = "ssp-rk3-shu-osher";
pub const RESOLVENT_SCHEME: &str = "semi-implicit-cone-projection";

/// 17 significant digits; enough to reproduce any f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn schema_line(out: &mut impl Write) -> Result<()> {
    writeln!(out, "# schema {SCHEMA_VERSION}")?;
    Ok(())
}

pub fn write_particle_snapshots(
    path: &Path,
    snapshots: &[crate::eulerian::Snapshot],
) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "time,species,index,position,velocity,mass")?;
    for snap in snapshots {
        for (species, s) in [("rho", &snap.rho), ("eta", &snap.eta)] {
            for i in 0..s.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt17(snap.time),
                    species,
                    i,
                    fmt17(s.positions()[i]),
                    fmt17(s.velocities()[i]),
                    fmt17(s.masses()[i])
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_grid_snapshots(path: &Path, snapshots: &[crate::lagrangian::Snapshot]) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "time,field,index,value")?;
    for snap in snapshots {
        for (field, g) in [
            ("X", &snap.x),
            ("Y", &snap.y),
            ("V", &snap.v),
            ("W", &snap.w),
        ] {
            for (i, value) in g.values().iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt17(snap.time),
                    field,
                    i,
                    fmt17(*value)
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_events(path: &Path, events: &[MergeEvent]) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(
        out,
        "time,species,indices,momentum_pre,momentum_post,ke_lost"
    )?;
    for e in events {
        writeln!(
            out,
            "{},{},{}-{},{},{},{}",
            fmt17(e.time),
            e.species,
            e.left,
            e.right,
            fmt17(e.momentum_pre),
            fmt17(e.momentum_post),
            fmt17(e.ke_lost)
        )?;
    }
    Ok(())
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(
        out,
        "time,kinetic,total_energy,l2_x,l2_y,l2_v,l2_w,w2_ref,merge_events,clusters_rho,clusters_eta"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt17(r.time),
            fmt17(r.kinetic),
            opt17(r.total_energy),
            fmt17(r.l2_x),
            fmt17(r.l2_y),
            fmt17(r.l2_v),
            fmt17(r.l2_w),
            opt17(r.w2_to_reference),
            r.merge_events,
            r.clusters_rho,
            r.clusters_eta
        )?;
    }
    Ok(())
}

pub fn write_measure(path: &Path, mu: &AtomicMeasure) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "position,mass")?;
    for a in mu.atoms() {
        writeln!(out, "{},{}", fmt17(a.position), fmt17(a.mass))?;
    }
    Ok(())
}

pub fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut atoms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("position") {
            continue;
        }
        let mut parts = line.split(',');
        let bad = |msg: &str| Error::Parse {
            line: idx + 1,
            message: msg.into(),
        };
        let position: f64 = parts
            .next()
            .ok_or_else(|| bad("missing position"))?
            .trim()
            .parse()
            .map_err(|_| bad("position is not a number"))?;
        let mass: f64 = parts
            .next()
            .ok_or_else(|| bad("missing mass"))?
            .trim()
            .parse()
            .map_err(|_| bad("mass is not a number"))?;
        atoms.push(Atom { position, mass });
    }
    atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
    AtomicMeasure::new(atoms)
}

pub fn write_pseudo_inverse(path: &Path, x: &PseudoInverse) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "value,width")?;
    for (i, v) in x.values().iter().enumerate() {
        let width = x.breakpoints()[i + 1] - x.breakpoints()[i];
        writeln!(out, "{},{}", fmt17(*v), fmt17(width))?;
    }
    Ok(())
}

/// Provenance of one run. Wall time is the only non-reproducible field and
/// lives here, outside the data CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub artifact_version: String,
    pub schema_version: String,
    pub rk_tableau: String,
    pub resolvent_scheme: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl RunMetadata {
    pub fn new(config: &SimConfig, wall_time_s: f64) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
            rk_tableau: RK_TABLEAU.to_string(),
            resolvent_scheme: RESOLVENT_SCHEME.to_string(),
            config_hash: config.hash_hex(),
            seed: config.seed,
            wall_time_s,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("json serialization failed: {e}")))?;
    writeln!(out, "{text}")?;
    Ok(())
}

/// One pass/fail entry of a machine-readable run summary.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub checks: Vec<CheckOutcome>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn write_w2_curve(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "time,w2")?;
    for (t, d) in curve {
        writeln!(out, "{},{}", fmt17(*t), fmt17(*d))?;
    }
    Ok(())
}

pub fn write_cluster_history(path: &Path, history: &[(f64, usize, usize)]) -> Result<()> {
    let mut out = create(path)?;
    schema_line(&mut out)?;
    writeln!(out, "time,clusters_rho,clusters_eta")?;
    for (t, r, e) in history {
        writeln!(out, "{},{},{}", fmt17(*t), r, e)?;
    }
    Ok(())
}
