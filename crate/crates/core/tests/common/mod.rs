//! Shared test oracles: independent reference implementations the solver
//! and transport paths are checked against. Everything here works directly
//! on plain atom/value lists and never calls the code paths it verifies.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sticky1d_core::rng::{stream_rng, Stream};
use sticky1d_core::transport::{Atom, AtomicMeasure};

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, Stream::Aux)
}

/// Exact 1D quadratic transport cost between two sorted atom lists by
/// greedy mass matching in order.
pub fn sorted_matching_cost(mu: &[(f64, f64)], nu: &[(f64, f64)]) -> f64 {
    let mut cost = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_a = mu[0].1;
    let mut rem_b = nu[0].1;
    loop {
        let m = rem_a.min(rem_b);
        let d = mu[i].0 - nu[j].0;
        cost += m * d * d;
        rem_a -= m;
        rem_b -= m;
        if rem_a <= 0.0 {
            i += 1;
            if i == mu.len() {
                break;
            }
            rem_a = mu[i].1;
        }
        if rem_b <= 0.0 {
            j += 1;
            if j == nu.len() {
                break;
            }
            rem_b = nu[j].1;
        }
    }
    cost
}

fn permute_costs(ys: &mut Vec<f64>, k: usize, best: &mut f64, cost_fn: &dyn Fn(&[f64]) -> f64) {
    if k == ys.len() {
        let c = cost_fn(ys);
        if c < *best {
            *best = c;
        }
        return;
    }
    for i in k..ys.len() {
        ys.swap(k, i);
        permute_costs(ys, k + 1, best, cost_fn);
        ys.swap(k, i);
    }
}

/// Minimum mean squared matching cost over all couplings of two equal-mass
/// empirical measures (full permutation enumeration; extreme points of the
/// coupling polytope are permutations).
pub fn permutation_brute_force_cost(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() <= 8, "factorial enumeration");
    let n = xs.len() as f64;
    let mut ys = ys.to_vec();
    let mut best = f64::INFINITY;
    let cost_fn = |perm: &[f64]| -> f64 {
        xs.iter()
            .zip(perm)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / n
    };
    permute_costs(&mut ys, 0, &mut best, &cost_fn);
    best
}

/// Brute-force weighted isotonic projection: enumerate every partition of
/// the indices into consecutive blocks, keep those whose weighted block
/// means are nondecreasing, and return the cheapest. The true projection is
/// one of these candidates and every candidate is feasible, so the minimum
/// is the projection.
pub fn isotonic_qp_oracle(values: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    assert!((1..=16).contains(&n));
    let mut best_cost = f64::INFINITY;
    let mut best = Vec::new();
    for mask in 0..(1u32 << (n - 1)) {
        let mut out = Vec::with_capacity(n);
        let mut means = Vec::new();
        let mut start = 0usize;
        for end in 1..=n {
            let boundary = end == n || (mask >> (end - 1)) & 1 == 1;
            if boundary {
                let wsum: f64 = weights[start..end].iter().sum();
                let mean: f64 = values[start..end]
                    .iter()
                    .zip(&weights[start..end])
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
                    / wsum;
                means.push(mean);
                for _ in start..end {
                    out.push(mean);
                }
                start = end;
            }
        }
        if means.windows(2).any(|w| w[1] < w[0]) {
            continue;
        }
        let cost: f64 = values
            .iter()
            .zip(weights)
            .zip(&out)
            .map(|((v, w), o)| w * (v - o) * (v - o))
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best = out;
        }
    }
    (best, best_cost)
}

pub fn weighted_cost(values: &[f64], weights: &[f64], candidate: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .zip(candidate)
        .map(|((v, w), c)| w * (v - c) * (v - c))
        .sum()
}

/// Random measure with up to `max_atoms` atoms, positions in [-5, 5].
pub fn random_measure(rng: &mut ChaCha8Rng, max_atoms: usize) -> AtomicMeasure {
    let n = rng.random_range(1..=max_atoms);
    let mut positions: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = positions
        .into_iter()
        .zip(raw)
        .map(|(position, w)| Atom {
            position,
            mass: w / total,
        })
        .collect();
    AtomicMeasure::new(atoms).expect("generated measure is valid")
}

/// Random measure whose masses are multiples of `1/denom`, together with
/// its expansion into `denom` unit atoms (repeats included).
pub fn random_rational_measure(
    rng: &mut ChaCha8Rng,
    max_atoms: usize,
    denom: usize,
) -> (AtomicMeasure, Vec<f64>) {
    let n = rng.random_range(1..=max_atoms.min(denom));
    // Split `denom` units over n atoms, each at least one unit.
    let mut units = vec![1usize; n];
    for _ in 0..(denom - n) {
        let k = rng.random_range(0..n);
        units[k] += 1;
    }
    let mut positions: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut expanded = Vec::with_capacity(denom);
    let atoms = positions
        .iter()
        .zip(&units)
        .map(|(&position, &u)| {
            for _ in 0..u {
                expanded.push(position);
            }
            Atom {
                position,
                mass: u as f64 / denom as f64,
            }
        })
        .collect();
    (
        AtomicMeasure::new(atoms).expect("rational measure is valid"),
        expanded,
    )
}

/// Random nondecreasing profile of length `n` with values in `[lo, hi]`.
pub fn random_monotone(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}
