//! Atomic measures, quantile functions and 1D optimal transport.
//!
//! A probability measure on the line is represented by its sorted atoms; its
//! monotone rearrangement (quantile function) is a nondecreasing step
//! function on `(0,1)`. The map between the two is an isometry, so the
//! quadratic Wasserstein distance is the `L^2` distance of quantile
//! functions, computed here exactly on the common refinement of their
//! breakpoints.
//!
//! The module also provides the two projections the solvers are built on:
//! the weighted least-squares projection onto nondecreasing sequences
//! (pool-adjacent-violators) and the block-averaging projection onto
//! functions constant on the clusters of a given profile.

use crate::error::{Error, Result};
use serde::Serialize;

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// A probability measure as a finite sum of weighted Dirac atoms with
/// nondecreasing positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput(
                "measure needs at least one atom".into(),
            ));
        }
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if !a.position.is_finite() || !a.mass.is_finite() {
                return Err(Error::InvalidInput("atom fields must be finite".into()));
            }
            if a.mass <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has nonpositive mass"
                )));
            }
            if i > 0 && atoms[i - 1].position > a.position {
                return Err(Error::InvalidInput(
                    "atom positions must be nondecreasing".into(),
                ));
            }
            total += a.mass;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("total mass {total} is not 1")));
        }
        Ok(Self { atoms })
    }

    pub fn dirac(position: f64) -> Self {
        Self {
            atoms: vec![Atom {
                position,
                mass: 1.0,
            }],
        }
    }

    pub fn from_sorted_parts(positions: &[f64], masses: &[f64]) -> Result<Self> {
        if positions.len() != masses.len() {
            return Err(Error::InvalidInput(
                "positions and masses differ in length".into(),
            ));
        }
        Self::new(
            positions
                .iter()
                .zip(masses)
                .map(|(&position, &mass)| Atom { position, mass })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Quantile function of a measure: a nondecreasing step function on `(0,1)`
/// stored as breakpoints (cell edges, from 0 to 1) and one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoInverse {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PseudoInverse {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidInput(
                "need n+1 breakpoints for n cells".into(),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "breakpoints must run from 0 to 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "cell widths must be strictly positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "quantile values must be nondecreasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// Step function on the uniform n-cell grid.
    pub fn from_uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let breakpoints = uniform_breakpoints(n);
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    /// Value at `m` with left-closed cells: `X(m) = values[i]` for
    /// `m in [breakpoints[i], breakpoints[i+1])`.
    pub fn eval(&self, m: f64) -> f64 {
        let i = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&m).unwrap())
        {
            Ok(i) => i.min(self.values.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.values.len() - 1),
        };
        self.values[i]
    }

    /// `L^2(0,1)` distance to another quantile function, integrated exactly
    /// on the common refinement of the two breakpoint sequences.
    pub fn l2_distance(&self, other: &PseudoInverse) -> f64 {
        let mut acc = 0.0;
        let mut cursor = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.values.len() && j < other.values.len() {
            let bi = self.breakpoints[i + 1];
            let bj = other.breakpoints[j + 1];
            let next = bi.min(bj);
            let width = next - cursor;
            if width > 0.0 {
                let d = self.values[i] - other.values[j];
                acc += width * d * d;
            }
            cursor = next;
            if bi <= next {
                i += 1;
            }
            if bj <= next {
                j += 1;
            }
        }
        acc.sqrt()
    }

    /// Maximal constant runs of cell values under the given tolerance.
    pub fn clusters(&self, tol: f64) -> ClusterPartition {
        clusters(&self.values, tol)
    }
}

fn uniform_breakpoints(n: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    b[n] = 1.0;
    b
}

/// A real function on the uniform grid of `(0,1)`; no monotonicity implied.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(1/n) sum u_i v_i`, the `L^2(0,1)` inner product on the grid.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * v)
            .sum::<f64>()
            / n
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn l2_distance(&self, other: &GridFunction) -> f64 {
        let n = self.values.len() as f64;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| {
                let d = u - v;
                d * d
            })
            .sum();
        (s / n).sqrt()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Partition of the grid cells into maximal blocks on which a profile is
/// constant (up to the detection tolerance). Blocks are half-open index
/// ranges covering every cell, singletons included.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    blocks: Vec<(usize, usize)>,
    n: usize,
}

impl ClusterPartition {
    pub fn singletons(n: usize) -> Self {
        Self {
            blocks: (0..n).map(|i| (i, i + 1)).collect(),
            n,
        }
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    pub fn all_singletons(&self) -> bool {
        self.blocks.len() == self.n
    }
}

/// Maximal runs of consecutive values whose adjacent differences are at most
/// `tol` form one cluster. With `tol = 0` this detects exact ties only.
pub fn clusters(values: &[f64], tol: f64) -> ClusterPartition {
    let n = values.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if (values[i] - values[i - 1]).abs() > tol {
            blocks.push((start, i));
            start = i;
        }
    }
    if n > 0 {
        blocks.push((start, n));
    }
    ClusterPartition { blocks, n }
}

/// Monotone rearrangement of an atomic measure: breakpoints at cumulative
/// masses, values at atom positions.
pub fn pseudo_inverse(mu: &AtomicMeasure) -> PseudoInverse {
    let n = mu.atoms.len();
    let mut breakpoints = Vec::with_capacity(n + 1);
    breakpoints.push(0.0);
    let mut cum = 0.0;
    for a in &mu.atoms[..n - 1] {
        cum += a.mass;
        breakpoints.push(cum);
    }
    breakpoints.push(1.0);
    let values = mu.atoms.iter().map(|a| a.position).collect();
    PseudoInverse {
        breakpoints,
        values,
    }
}

/// Measure represented by a quantile function: distinct values become atoms
/// whose masses are the summed cell widths.
pub fn to_measure(x: &PseudoInverse) -> AtomicMeasure {
    let mut atoms: Vec<Atom> = Vec::new();
    for i in 0..x.values.len() {
        let width = x.breakpoints[i + 1] - x.breakpoints[i];
        match atoms.last_mut() {
            Some(last) if last.position == x.values[i] => last.mass += width,
            _ => atoms.push(Atom {
                position: x.values[i],
                mass: width,
            }),
        }
    }
    AtomicMeasure { atoms }
}

/// Quadratic Wasserstein distance between two measures on the line.
pub fn w2(mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
    pseudo_inverse(mu).l2_distance(&pseudo_inverse(nu))
}

/// Distance on pairs of measures: the Euclidean combination of the two
/// per-species distances.
pub fn product_w2(
    pair1: (&AtomicMeasure, &AtomicMeasure),
    pair2: (&AtomicMeasure, &AtomicMeasure),
) -> f64 {
    let d1 = w2(pair1.0, pair2.0);
    let d2 = w2(pair1.1, pair2.1);
    d1.hypot(d2)
}

/// Weighted least-squares projection onto nondecreasing sequences by
/// pool-adjacent-violators. Violating neighbours are pooled left to right
/// into blocks carrying their weighted mean; pooled cells share the exact
/// same output value.
pub fn project_cone(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "project_cone: {} values vs {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some((i, _)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "project_cone: weight {i} is not positive"
        )));
    }
    let n = values.len();
    let mut mean: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        mean.push(values[i]);
        weight.push(weights[i]);
        count.push(1);
        while mean.len() > 1 && mean[mean.len() - 2] > mean[mean.len() - 1] {
            let m2 = mean.pop().unwrap();
            let w2 = weight.pop().unwrap();
            let c2 = count.pop().unwrap();
            let k = mean.len() - 1;
            let pooled = weight[k] + w2;
            mean[k] = (weight[k] * mean[k] + w2 * m2) / pooled;
            weight[k] = pooled;
            count[k] += c2;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (m, c) in mean.iter().zip(&count) {
        out.extend(std::iter::repeat_n(*m, *c));
    }
    Ok(out)
}

/// Replace a grid function by its average on every cluster, identity on
/// singletons. Linear, idempotent, and dominated by the input in every
/// convex integral functional.
pub fn project_blocks(partition: &ClusterPartition, u: &GridFunction) -> Result<GridFunction> {
    if partition.n_cells() != u.n_cells() {
        return Err(Error::InvalidInput(format!(
            "project_blocks: partition over {} cells vs function on {}",
            partition.n_cells(),
            u.n_cells()
        )));
    }
    let mut out = u.values.clone();
    for &(a, b) in &partition.blocks {
        if b - a >= 2 {
            let avg = u.values[a..b].iter().sum::<f64>() / (b - a) as f64;
            out[a..b].fill(avg);
        }
    }
    Ok(GridFunction::new(out))
}
