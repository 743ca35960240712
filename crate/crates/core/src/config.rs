//! Experiment configuration: a flat key-value text format with one section
//! per potential slot, validation, and a canonical re-serialization whose
//! hash is stable under comments and key reordering.
//!
//! ```text
//! # two attracting species
//! solver = eulerian
//! N = 160
//! M = 150
//! sigma = 1
//! T = 1
//!
//! [K_rho]
//! family = gaussian_exp
//! amplitude = -1
//! exponent = 3
//! ```
//!
//! Defaults: `dt = 1e-3`, `toll = 0.002`, `output_stride = 10`,
//! `merge_rule = momentum`, `velocity_range = -1 1`, `seed = 0`,
//! `initial_layout = uniform_grid`. Exactly one of `sigma`/`epsilon` must be
//! given; missing potential slots are zero.

use crate::error::{Error, Result};
use crate::eulerian::MergeRule;
use crate::potentials::{Family, PotentialSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Eulerian,
    LagrangianSecond,
    LagrangianFirst,
    LagrangianNewtonian,
    Picard,
}

impl Solver {
    pub fn is_lagrangian(&self) -> bool {
        !matches!(self, Solver::Eulerian)
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Solver::Eulerian => "eulerian",
            Solver::LagrangianSecond => "lagrangian_second",
            Solver::LagrangianFirst => "lagrangian_first",
            Solver::LagrangianNewtonian => "lagrangian_newtonian",
            Solver::Picard => "picard",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eulerian" => Ok(Solver::Eulerian),
            "lagrangian_second" => Ok(Solver::LagrangianSecond),
            "lagrangian_first" => Ok(Solver::LagrangianFirst),
            "lagrangian_newtonian" => Ok(Solver::LagrangianNewtonian),
            "picard" => Ok(Solver::Picard),
            other => Err(Error::Config(format!("unknown solver `{other}`"))),
        }
    }
}

/// The six potential slots: self-interaction, cross-interaction and
/// external, per species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSet {
    pub k_rho: PotentialSpec,
    pub k_eta: PotentialSpec,
    pub h_rho: PotentialSpec,
    pub h_eta: PotentialSpec,
    pub a_rho: PotentialSpec,
    pub a_eta: PotentialSpec,
}

impl PotentialSet {
    pub fn all_zero() -> Self {
        let z = PotentialSpec::zero();
        Self {
            k_rho: z,
            k_eta: z,
            h_rho: z,
            h_eta: z,
            a_rho: z,
            a_eta: z,
        }
    }

    pub fn symmetric_cross(&self) -> bool {
        self.h_rho == self.h_eta
    }

    pub fn slots(&self) -> [(&'static str, &PotentialSpec); 6] {
        [
            ("K_rho", &self.k_rho),
            ("K_eta", &self.k_eta),
            ("H_rho", &self.h_rho),
            ("H_eta", &self.h_eta),
            ("A_rho", &self.a_rho),
            ("A_eta", &self.a_eta),
        ]
    }

    pub fn validate_params(&self) -> Result<()> {
        for (name, spec) in self.slots() {
            spec.validate_params()
                .map_err(|e| Error::Config(format!("potential slot {name}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitSpecies {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialLayout {
    /// Positions uniformly spaced on [0,1]; velocities drawn uniformly from
    /// the configured range with the seeded per-species streams.
    UniformGrid,
    ExplicitParticles {
        rho: ExplicitSpecies,
        eta: ExplicitSpecies,
    },
    ExplicitGrid {
        x: Vec<f64>,
        y: Vec<f64>,
        v: Vec<f64>,
        w: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub solver: Solver,
    pub potentials: PotentialSet,
    pub n_rho: usize,
    pub n_eta: usize,
    /// Damping parameter; the rescaled solvers use `epsilon = sigma^-2`.
    pub sigma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub toll: f64,
    pub merge_rule: MergeRule,
    pub velocity_range: (f64, f64),
    pub seed: u64,
    pub layout: InitialLayout,
    pub picard_max_iters: usize,
    pub picard_tol: f64,
}

impl SimConfig {
    /// A minimal runnable config with the documented defaults; callers
    /// override what they need.
    pub fn minimal(solver: Solver) -> Self {
        Self {
            solver,
            potentials: PotentialSet::all_zero(),
            n_rho: 4,
            n_eta: 4,
            sigma: 1.0,
            dt: 1e-3,
            t_final: 0.01,
            output_stride: 10,
            toll: 0.002,
            merge_rule: MergeRule::Momentum,
            velocity_range: (-1.0, 1.0),
            seed: 0,
            layout: InitialLayout::UniformGrid,
            picard_max_iters: 200,
            picard_tol: 1e-8,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.sigma.powi(-2)
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config("horizon T must be positive".into()));
        }
        if !(self.toll > 0.0) {
            return Err(Error::Config("toll must be positive".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config("sigma must be positive and finite".into()));
        }
        if self.output_stride == 0 {
            return Err(Error::Config("output_stride must be at least 1".into()));
        }
        if self.n_rho == 0 || self.n_eta == 0 {
            return Err(Error::Config(
                "particle/cell counts must be positive".into(),
            ));
        }
        if self.velocity_range.0 > self.velocity_range.1 {
            return Err(Error::Config("velocity_range must satisfy lo <= hi".into()));
        }
        if self.solver.is_lagrangian() && self.n_rho != self.n_eta {
            return Err(Error::Config(
                "lagrangian solvers share one grid: n_cells sets both species".into(),
            ));
        }
        if let InitialLayout::ExplicitParticles { rho, eta } = &self.layout {
            for (name, s, n) in [("rho", rho, self.n_rho), ("eta", eta, self.n_eta)] {
                if s.positions.len() != n || s.velocities.len() != n || s.masses.len() != n {
                    return Err(Error::Config(format!(
                        "explicit {name} lists must all have length {n}"
                    )));
                }
            }
        }
        if let InitialLayout::ExplicitGrid { x, y, v, w } = &self.layout {
            if x.len() != self.n_rho || v.len() != self.n_rho {
                return Err(Error::Config(
                    "x_init/v_init must have length n_cells".into(),
                ));
            }
            if y.len() != self.n_eta || w.len() != self.n_eta {
                return Err(Error::Config(
                    "y_init/w_init must have length n_cells".into(),
                ));
            }
        }
        self.potentials.validate_params()
    }

    /// Canonical serialization: fixed key order, 17 significant digits.
    /// Parsing it back reproduces the config exactly.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# canonical config, schema {}",
            crate::io::SCHEMA_VERSION
        );
        let _ = writeln!(s, "solver = {}", self.solver);
        if self.solver.is_lagrangian() {
            let _ = writeln!(s, "n_cells = {}", self.n_rho);
        } else {
            let _ = writeln!(s, "N = {}", self.n_rho);
            let _ = writeln!(s, "M = {}", self.n_eta);
        }
        let _ = writeln!(s, "sigma = {}", fmt_float(self.sigma));
        let _ = writeln!(s, "dt = {}", fmt_float(self.dt));
        let _ = writeln!(s, "T = {}", fmt_float(self.t_final));
        let _ = writeln!(s, "output_stride = {}", self.output_stride);
        let _ = writeln!(s, "toll = {}", fmt_float(self.toll));
        let rule = match self.merge_rule {
            MergeRule::Momentum => "momentum",
            MergeRule::Paper => "paper",
        };
        let _ = writeln!(s, "merge_rule = {rule}");
        let _ = writeln!(
            s,
            "velocity_range = {} {}",
            fmt_float(self.velocity_range.0),
            fmt_float(self.velocity_range.1)
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "picard_max_iters = {}", self.picard_max_iters);
        let _ = writeln!(s, "picard_tol = {}", fmt_float(self.picard_tol));
        match &self.layout {
            InitialLayout::UniformGrid => {
                let _ = writeln!(s, "initial_layout = uniform_grid");
            }
            InitialLayout::ExplicitParticles { rho, eta } => {
                let _ = writeln!(s, "initial_layout = explicit");
                let _ = writeln!(s, "rho_positions = {}", fmt_list(&rho.positions));
                let _ = writeln!(s, "rho_velocities = {}", fmt_list(&rho.velocities));
                let _ = writeln!(s, "rho_masses = {}", fmt_list(&rho.masses));
                let _ = writeln!(s, "eta_positions = {}", fmt_list(&eta.positions));
                let _ = writeln!(s, "eta_velocities = {}", fmt_list(&eta.velocities));
                let _ = writeln!(s, "eta_masses = {}", fmt_list(&eta.masses));
            }
            InitialLayout::ExplicitGrid { x, y, v, w } => {
                let _ = writeln!(s, "initial_layout = explicit");
                let _ = writeln!(s, "x_init = {}", fmt_list(x));
                let _ = writeln!(s, "y_init = {}", fmt_list(y));
                let _ = writeln!(s, "v_init = {}", fmt_list(v));
                let _ = writeln!(s, "w_init = {}", fmt_list(w));
            }
        }
        for (name, spec) in self.potentials.slots() {
            let _ = writeln!(s);
            let _ = writeln!(s, "[{name}]");
            let _ = writeln!(s, "family = {}", spec.family);
            if !matches!(spec.family, Family::Zero) {
                let _ = writeln!(s, "amplitude = {}", fmt_float(spec.amplitude));
                let _ = writeln!(s, "exponent = {}", fmt_float(spec.exponent));
                let _ = writeln!(s, "scale = {}", fmt_float(spec.scale));
                let _ = writeln!(s, "center = {}", fmt_float(spec.center));
            }
        }
        s
    }

    /// FNV-1a hash of the canonical text, as a fixed-width hex string.
    pub fn hash_hex(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical_text().as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| fmt_float(*x))
        .collect::<Vec<_>>()
        .join(" ")
}

const SECTION_NAMES: [&str; 6] = ["K_rho", "K_eta", "H_rho", "H_eta", "A_rho", "A_eta"];

type RawMap = BTreeMap<String, (usize, String)>;

struct RawConfig {
    top: RawMap,
    sections: BTreeMap<String, RawMap>,
}

fn tokenize(text: &str) -> Result<RawConfig> {
    let mut top = RawMap::new();
    let mut sections: BTreeMap<String, RawMap> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?
                .trim();
            if !SECTION_NAMES.contains(&name) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown potential slot `{name}`"),
                });
            }
            current = Some(name.to_string());
            sections.entry(name.to_string()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let map = match &current {
            Some(sec) => sections.get_mut(sec).unwrap(),
            None => &mut top,
        };
        if map.insert(key.clone(), (line_no, value)).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(RawConfig { top, sections })
}

fn parse_value<T: FromStr>(map: &mut RawMap, key: &str, what: &str) -> Result<Option<T>> {
    match map.remove(key) {
        None => Ok(None),
        Some((line, v)) => v.parse::<T>().map(Some).map_err(|_| Error::Parse {
            line,
            message: format!("field `{key}`: expected {what}, got `{v}`"),
        }),
    }
}

fn parse_list(map: &mut RawMap, key: &str) -> Result<Option<Vec<f64>>> {
    match map.remove(key) {
        None => Ok(None),
        Some((line, v)) => {
            let mut out = Vec::new();
            for tok in v.split_whitespace() {
                out.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("field `{key}`: `{tok}` is not a number"),
                })?);
            }
            Ok(Some(out))
        }
    }
}

fn parse_potential(name: &str, map: &mut RawMap) -> Result<PotentialSpec> {
    let (family_line, family_str) = map
        .remove("family")
        .ok_or_else(|| Error::Config(format!("potential slot {name}: missing `family`")))?;
    let family = Family::from_str(&family_str).map_err(|e| Error::Parse {
        line: family_line,
        message: e.to_string(),
    })?;
    let amplitude = parse_value::<f64>(map, "amplitude", "a number")?.unwrap_or(1.0);
    let exponent = parse_value::<f64>(map, "exponent", "a number")?.unwrap_or(2.0);
    let scale = parse_value::<f64>(map, "scale", "a number")?.unwrap_or(1.0);
    let center = parse_value::<f64>(map, "center", "a number")?.unwrap_or(0.0);
    if let Some((line, _)) = map.values().next() {
        let key = map.keys().next().unwrap().clone();
        return Err(Error::Parse {
            line: *line,
            message: format!("unknown key `{key}` in [{name}]"),
        });
    }
    let spec = match family {
        Family::Zero => PotentialSpec::zero(),
        family => PotentialSpec {
            family,
            amplitude,
            exponent,
            scale,
            center,
        },
    };
    spec.validate_params()
        .map_err(|e| Error::Config(format!("potential slot {name}: {e}")))?;
    Ok(spec)
}

/// Parse a config from its textual form.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut raw = tokenize(text)?;
    let top = &mut raw.top;

    let solver_str: String = parse_value(top, "solver", "a solver name")?
        .ok_or_else(|| Error::Config("missing required key `solver`".into()))?;
    let solver = Solver::from_str(&solver_str)?;

    let sigma = parse_value::<f64>(top, "sigma", "a number")?;
    let epsilon = parse_value::<f64>(top, "epsilon", "a number")?;
    let sigma = match (sigma, epsilon) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give exactly one of `sigma` and `epsilon`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "give exactly one of `sigma` and `epsilon`".into(),
            ))
        }
        (Some(s), None) => s,
        (None, Some(e)) => {
            if !(e > 0.0) {
                return Err(Error::Config("epsilon must be positive".into()));
            }
            e.powf(-0.5)
        }
    };

    let t_final = parse_value::<f64>(top, "T", "a number")?
        .ok_or_else(|| Error::Config("missing required key `T`".into()))?;
    let dt = parse_value::<f64>(top, "dt", "a number")?.unwrap_or(1e-3);
    let toll = parse_value::<f64>(top, "toll", "a number")?.unwrap_or(0.002);
    let output_stride = parse_value::<usize>(top, "output_stride", "an integer")?.unwrap_or(10);
    let seed = parse_value::<u64>(top, "seed", "an unsigned integer")?.unwrap_or(0);
    let picard_max_iters =
        parse_value::<usize>(top, "picard_max_iters", "an integer")?.unwrap_or(200);
    let picard_tol = parse_value::<f64>(top, "picard_tol", "a number")?.unwrap_or(1e-8);

    let merge_rule = match parse_value::<String>(top, "merge_rule", "a merge rule")?.as_deref() {
        None | Some("momentum") => MergeRule::Momentum,
        Some("paper") => MergeRule::Paper,
        Some(other) => return Err(Error::Config(format!("unknown merge_rule `{other}`"))),
    };

    let velocity_range = match parse_list(top, "velocity_range")? {
        None => (-1.0, 1.0),
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(_) => {
            return Err(Error::Config(
                "velocity_range needs exactly two numbers".into(),
            ))
        }
    };

    let n = parse_value::<usize>(top, "N", "an integer")?;
    let m = parse_value::<usize>(top, "M", "an integer")?;
    let n_cells = parse_value::<usize>(top, "n_cells", "an integer")?;

    let layout_kind = parse_value::<String>(top, "initial_layout", "a layout name")?
        .unwrap_or_else(|| "uniform_grid".into());
    let rho_positions = parse_list(top, "rho_positions")?;
    let rho_velocities = parse_list(top, "rho_velocities")?;
    let rho_masses = parse_list(top, "rho_masses")?;
    let eta_positions = parse_list(top, "eta_positions")?;
    let eta_velocities = parse_list(top, "eta_velocities")?;
    let eta_masses = parse_list(top, "eta_masses")?;
    let x_init = parse_list(top, "x_init")?;
    let y_init = parse_list(top, "y_init")?;
    let v_init = parse_list(top, "v_init")?;
    let w_init = parse_list(top, "w_init")?;

    if let Some((line, _)) = top.values().next() {
        let key = top.keys().next().unwrap().clone();
        return Err(Error::Parse {
            line: *line,
            message: format!("unknown key `{key}`"),
        });
    }

    let layout = match layout_kind.as_str() {
        "uniform_grid" => InitialLayout::UniformGrid,
        "explicit" => {
            if let (Some(x), Some(y)) = (x_init.clone(), y_init.clone()) {
                let v = v_init.unwrap_or_else(|| vec![0.0; x.len()]);
                let w = w_init.unwrap_or_else(|| vec![0.0; y.len()]);
                InitialLayout::ExplicitGrid { x, y, v, w }
            } else if let (Some(rp), Some(ep)) = (rho_positions.clone(), eta_positions.clone()) {
                let uniform = |k: usize| vec![1.0 / k as f64; k];
                let rho = ExplicitSpecies {
                    velocities: rho_velocities.unwrap_or_else(|| vec![0.0; rp.len()]),
                    masses: rho_masses.unwrap_or_else(|| uniform(rp.len())),
                    positions: rp,
                };
                let eta = ExplicitSpecies {
                    velocities: eta_velocities.unwrap_or_else(|| vec![0.0; ep.len()]),
                    masses: eta_masses.unwrap_or_else(|| uniform(ep.len())),
                    positions: ep,
                };
                InitialLayout::ExplicitParticles { rho, eta }
            } else {
                return Err(Error::Config(
                    "explicit layout needs x_init/y_init or rho_positions/eta_positions".into(),
                ));
            }
        }
        other => return Err(Error::Config(format!("unknown initial_layout `{other}`"))),
    };

    // Counts: from N/M or n_cells, or inferred from explicit lists.
    let (n_rho, n_eta) = if solver.is_lagrangian() {
        let inferred = match &layout {
            InitialLayout::ExplicitGrid { x, .. } => Some(x.len()),
            _ => None,
        };
        let nc = n_cells
            .or(inferred)
            .ok_or_else(|| Error::Config("lagrangian solvers require `n_cells`".into()))?;
        (nc, nc)
    } else {
        let (ni, mi) = match &layout {
            InitialLayout::ExplicitParticles { rho, eta } => {
                (Some(rho.positions.len()), Some(eta.positions.len()))
            }
            InitialLayout::ExplicitGrid { x, y, .. } => (Some(x.len()), Some(y.len())),
            InitialLayout::UniformGrid => (None, None),
        };
        let n = n
            .or(ni)
            .ok_or_else(|| Error::Config("eulerian solver requires `N`".into()))?;
        let m = m
            .or(mi)
            .ok_or_else(|| Error::Config("eulerian solver requires `M`".into()))?;
        (n, m)
    };

    let mut potentials = PotentialSet::all_zero();
    for (name, map) in raw.sections.iter_mut() {
        let spec = parse_potential(name, map)?;
        match name.as_str() {
            "K_rho" => potentials.k_rho = spec,
            "K_eta" => potentials.k_eta = spec,
            "H_rho" => potentials.h_rho = spec,
            "H_eta" => potentials.h_eta = spec,
            "A_rho" => potentials.a_rho = spec,
            "A_eta" => potentials.a_eta = spec,
            _ => unreachable!("section names are validated while tokenizing"),
        }
    }

    let config = SimConfig {
        solver,
        potentials,
        n_rho,
        n_eta,
        sigma,
        dt,
        t_final,
        output_stride,
        toll,
        merge_rule,
        velocity_range,
        seed,
        layout,
        picard_max_iters,
        picard_tol,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
solver = eulerian
N = 160
M = 150
sigma = 1
T = 1

[K_rho]
family = gaussian_exp
amplitude = -1
exponent = 3
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.toll, 0.002);
        assert_eq!(c.velocity_range, (-1.0, 1.0));
        assert_eq!(c.output_stride, 10);
        assert_eq!(c.seed, 0);
        assert_eq!(c.merge_rule, MergeRule::Momentum);
        assert_eq!(c.potentials.k_rho.family, Family::GaussianExp);
        assert!(c.potentials.h_rho.is_zero());
    }

    #[test]
    fn sigma_and_epsilon_are_exclusive() {
        let text = "solver = eulerian\nN = 2\nM = 2\nsigma = 1\nepsilon = 1\nT = 1\n";
        assert!(matches!(parse_config(text), Err(Error::Config(_))));
        let neither = "solver = eulerian\nN = 2\nM = 2\nT = 1\n";
        assert!(matches!(parse_config(neither), Err(Error::Config(_))));
    }

    #[test]
    fn epsilon_sets_sigma() {
        let text = "solver = lagrangian_second\nn_cells = 4\nepsilon = 0.01\nT = 1\n";
        let c = parse_config(text).unwrap();
        assert!((c.sigma - 10.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_preserves_hash() {
        let c = parse_config(MINIMAL).unwrap();
        let text = c.canonical_text();
        let c2 = parse_config(&text).unwrap();
        assert_eq!(c, c2);
        assert_eq!(c.hash_hex(), c2.hash_hex());
    }

    #[test]
    fn hash_invariant_under_comments_and_order() {
        let reordered = "
T = 1    # horizon
M = 150
sigma = 1
# a comment line
N = 160
solver = eulerian

[K_rho]
exponent = 3
family = gaussian_exp
amplitude = -1
";
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(reordered).unwrap();
        assert_eq!(a.hash_hex(), b.hash_hex());
    }

    #[test]
    fn unknown_family_is_config_error() {
        let text = "solver = eulerian\nN = 2\nM = 2\nsigma = 1\nT = 1\n[K_rho]\nfamily = morse\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("morse"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "solver = eulerian\nN = two\nM = 2\nsigma = 1\nT = 1\n";
        match parse_config(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unknown = "solver = eulerian\nN = 2\nM = 2\nsigma = 1\nT = 1\nbogus_key = 3\n";
        match parse_config(unknown) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("bogus_key"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn lagrangian_requires_matching_grid() {
        let text = "solver = lagrangian_second\nn_cells = 8\nsigma = 10\nT = 1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.n_rho, 8);
        assert_eq!(c.n_eta, 8);
        let missing = "solver = lagrangian_second\nsigma = 10\nT = 1\n";
        assert!(parse_config(missing).is_err());
    }

    #[test]
    fn explicit_layout_round_trip() {
        let text = "
solver = eulerian
sigma = 1
T = 0.5
initial_layout = explicit
rho_positions = 0 1
eta_positions = 0.5 1.5 2.5
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.n_rho, 2);
        assert_eq!(c.n_eta, 3);
        match &c.layout {
            InitialLayout::ExplicitParticles { rho, eta } => {
                assert_eq!(rho.masses, vec![0.5, 0.5]);
                assert_eq!(eta.velocities, vec![0.0; 3]);
            }
            other => panic!("unexpected layout {other:?}"),
        }
        let c2 = parse_config(&c.canonical_text()).unwrap();
        assert_eq!(c, c2);
    }
}
