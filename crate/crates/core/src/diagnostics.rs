//! Per-output-time diagnostics shared by both solver families.

use serde::Serialize;

/// One diagnostics row. Norms are `L^2(0,1)` norms of the quantile-side
/// profiles (mass-weighted on the particle side). `total_energy` is absent
/// when the energy is undefined (asymmetric cross potentials) and
/// `w2_to_reference` when no reference is attached to the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub kinetic: f64,
    pub total_energy: Option<f64>,
    pub l2_x: f64,
    pub l2_y: f64,
    pub l2_v: f64,
    pub l2_w: f64,
    pub w2_to_reference: Option<f64>,
    /// Cumulative merge-event count (always zero for grid solvers).
    pub merge_events: usize,
    pub clusters_rho: usize,
    pub clusters_eta: usize,
}
