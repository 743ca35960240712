//! Solvers on the quantile side: the damped second-order system resolved by
//! cone projection, its first-order large-damping limit, a trajectory-level
//! fixed-point (Picard) variant, and the projected system for Newtonian
//! self-attraction with external wells.
//!
//! All four evolve nondecreasing grid profiles `X`, `Y` on the uniform grid
//! of `(0,1)` together with velocities `V`, `W` that stay constant on the
//! clusters of their profile. Monotonicity is enforced by construction: each
//! step ends with a pool-adjacent-violators projection, so cells that meet
//! stay merged (sticky dynamics).

use crate::config::{InitialLayout, PotentialSet, SimConfig, Solver};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::parallel;
use crate::potentials::PotentialSpec;
use crate::rng::{self, Stream};
use crate::transport::{clusters, project_blocks, project_cone, GridFunction};

/// State of the grid solvers. `p`/`q` accumulate the time-integrated forces
/// (plus the initial momentum contribution) that drive the cone-projection
/// resolvent of the second-order scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub x: GridFunction,
    pub y: GridFunction,
    pub v: GridFunction,
    pub w: GridFunction,
    pub p: GridFunction,
    pub q: GridFunction,
    pub time: f64,
    pub epsilon: f64,
}

impl LagrangianState {
    pub fn new(
        x: GridFunction,
        y: GridFunction,
        v: GridFunction,
        w: GridFunction,
        epsilon: f64,
    ) -> Result<Self> {
        let n = x.n_cells();
        if n == 0 || y.n_cells() != n || v.n_cells() != n || w.n_cells() != n {
            return Err(Error::InvalidInput(
                "grid fields must share one nonempty grid".into(),
            ));
        }
        if !x.is_nondecreasing() || !y.is_nondecreasing() {
            return Err(Error::InvalidInput("X and Y must be nondecreasing".into()));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidInput("epsilon must be nonnegative".into()));
        }
        let p = GridFunction::new(
            x.values()
                .iter()
                .zip(v.values())
                .map(|(x, v)| epsilon * v + x)
                .collect(),
        );
        let q = GridFunction::new(
            y.values()
                .iter()
                .zip(w.values())
                .map(|(y, w)| epsilon * w + y)
                .collect(),
        );
        Ok(Self {
            x,
            y,
            v,
            w,
            p,
            q,
            time: 0.0,
            epsilon,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.x.n_cells()
    }

    fn check_finite(&self, dt: f64) -> Result<()> {
        if self.x.all_finite() && self.y.all_finite() && self.v.all_finite() && self.w.all_finite()
        {
            Ok(())
        } else {
            Err(Error::BlowUp {
                time: self.time,
                message: format!(
                    "non-finite grid state after step (dt = {dt}, n = {})",
                    self.n_cells()
                ),
            })
        }
    }

    /// Semi-implicit step of the rescaled second-order system: explicit
    /// update of the integrated forces, then exact resolution of the cone
    /// constraint by a single projection
    /// `X <- P_K((P + (eps/dt) X) / (1 + eps/dt))`,
    /// then velocities from the difference quotient, block-averaged so they
    /// are admissible for the new cluster structure.
    pub fn step_second_order(&mut self, specs: &PotentialSet, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(
                "second-order step requires epsilon > 0; use the first-order solver at epsilon = 0"
                    .into(),
            ));
        }
        let fs = force_fg(&self.x, &self.y, specs)?;
        for (p, f) in self.p.values_mut().iter_mut().zip(fs.f.values()) {
            *p += dt * f;
        }
        for (q, g) in self.q.values_mut().iter_mut().zip(fs.g.values()) {
            *q += dt * g;
        }
        let r = self.epsilon / dt;
        let resolve = |acc: &GridFunction, cur: &GridFunction| -> Result<Vec<f64>> {
            let target: Vec<f64> = acc
                .values()
                .iter()
                .zip(cur.values())
                .map(|(a, c)| (a + r * c) / (1.0 + r))
                .collect();
            project_cone(&target, &vec![1.0; target.len()])
        };
        let x_new = GridFunction::new(resolve(&self.p, &self.x)?);
        let y_new = GridFunction::new(resolve(&self.q, &self.y)?);
        self.v = admissible_velocity(&self.x, &x_new, dt)?;
        self.w = admissible_velocity(&self.y, &y_new, dt)?;
        self.x = x_new;
        self.y = y_new;
        self.time += dt;
        self.check_finite(dt)
    }

    /// Explicit step of the first-order limit dynamics under the
    /// monotonicity constraint: `X <- P_K(X + dt F)`.
    pub fn step_first_order(&mut self, specs: &PotentialSet, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        let fs = force_fg(&self.x, &self.y, specs)?;
        let advance = |cur: &GridFunction, f: &GridFunction| -> Result<Vec<f64>> {
            let target: Vec<f64> = cur
                .values()
                .iter()
                .zip(f.values())
                .map(|(x, f)| x + dt * f)
                .collect();
            project_cone(&target, &vec![1.0; target.len()])
        };
        let x_new = GridFunction::new(advance(&self.x, &fs.f)?);
        let y_new = GridFunction::new(advance(&self.y, &fs.g)?);
        self.v = admissible_velocity(&self.x, &x_new, dt)?;
        self.w = admissible_velocity(&self.y, &y_new, dt)?;
        self.x = x_new;
        self.y = y_new;
        self.time += dt;
        self.check_finite(dt)
    }

    /// Projected step for Newtonian self-attraction: forces are
    /// block-averaged on the current clusters, damping is integrated exactly
    /// with its integrating factor, and collisions are resolved by cone
    /// projection followed by momentum-conserving velocity averaging.
    pub fn step_newtonian(&mut self, specs: &PotentialSet, sigma: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidInput("sigma must be nonnegative".into()));
        }
        let fs = force_newtonian(&self.x, &self.y, specs)?;
        let part_x = clusters(self.x.values(), 0.0);
        let part_y = clusters(self.y.values(), 0.0);
        let f1 = project_blocks(&part_x, &fs.f)?;
        let f2 = project_blocks(&part_y, &fs.g)?;
        // Keep velocities admissible before the update; a no-op once the
        // inductive invariant holds.
        self.v = project_blocks(&part_x, &self.v)?;
        self.w = project_blocks(&part_y, &self.w)?;

        let (decay, gain) = if sigma > 0.0 {
            let a = (-sigma * dt).exp();
            (a, (1.0 - a) / sigma)
        } else {
            (1.0, dt)
        };
        for (v, f) in self.v.values_mut().iter_mut().zip(f1.values()) {
            *v = decay * *v - gain * f;
        }
        for (w, f) in self.w.values_mut().iter_mut().zip(f2.values()) {
            *w = decay * *w - gain * f;
        }
        let advance = |cur: &GridFunction, vel: &GridFunction| -> Result<Vec<f64>> {
            let target: Vec<f64> = cur
                .values()
                .iter()
                .zip(vel.values())
                .map(|(x, v)| x + dt * v)
                .collect();
            project_cone(&target, &vec![1.0; target.len()])
        };
        self.x = GridFunction::new(advance(&self.x, &self.v)?);
        self.y = GridFunction::new(advance(&self.y, &self.w)?);
        let part_x = clusters(self.x.values(), 0.0);
        let part_y = clusters(self.y.values(), 0.0);
        self.v = project_blocks(&part_x, &self.v)?;
        self.w = project_blocks(&part_y, &self.w)?;
        self.time += dt;
        self.check_finite(dt)
    }
}

/// Difference-quotient velocity projected onto the clusters of the new
/// profile, so that it is constant wherever the profile is.
fn admissible_velocity(old: &GridFunction, new: &GridFunction, dt: f64) -> Result<GridFunction> {
    let raw = GridFunction::new(
        new.values()
            .iter()
            .zip(old.values())
            .map(|(n, o)| (n - o) / dt)
            .collect(),
    );
    project_blocks(&clusters(new.values(), 0.0), &raw)
}

/// The nonlocal force pair evaluated at `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSample {
    pub f: GridFunction,
    pub g: GridFunction,
}

fn force_component(
    i: usize,
    own: &[f64],
    other: &[f64],
    self_kernel: &PotentialSpec,
    cross_kernel: &PotentialSpec,
) -> f64 {
    let n_inv = 1.0 / own.len() as f64;
    let xi = own[i];
    let mut acc = 0.0;
    if !self_kernel.is_zero() {
        let mut s = 0.0;
        for &xk in own {
            s += self_kernel.eval_derivative(xi - xk);
        }
        acc -= n_inv * s;
    }
    if !cross_kernel.is_zero() {
        let mut s = 0.0;
        for &yk in other {
            s += cross_kernel.eval_derivative(xi - yk);
        }
        acc -= n_inv * s;
    }
    acc
}

fn force_fg_with<M>(
    map: M,
    x: &GridFunction,
    y: &GridFunction,
    specs: &PotentialSet,
) -> Result<ForceSample>
where
    M: Fn(usize, &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>,
{
    if x.n_cells() != y.n_cells() {
        return Err(Error::InvalidInput(format!(
            "force evaluation needs one grid: X has {} cells, Y has {}",
            x.n_cells(),
            y.n_cells()
        )));
    }
    let (xs, ys) = (x.values(), y.values());
    let f = map(xs.len(), &|i| {
        force_component(i, xs, ys, &specs.k_rho, &specs.h_rho)
    });
    let g = map(ys.len(), &|j| {
        force_component(j, ys, xs, &specs.k_eta, &specs.h_eta)
    });
    Ok(ForceSample {
        f: GridFunction::new(f),
        g: GridFunction::new(g),
    })
}

/// Midpoint-quadrature nonlocal forces
/// `F(m_i) = -(1/n) sum_k K'_rho(X_i - X_k) - (1/n) sum_k H'_rho(X_i - Y_k)`
/// and symmetrically for `G`. Parallel over cells under the `parallel`
/// feature.
pub fn force_fg(x: &GridFunction, y: &GridFunction, specs: &PotentialSet) -> Result<ForceSample> {
    force_fg_with(|n, f| parallel::map_indexed(n, f), x, y, specs)
}

/// Single-threaded counterpart of [`force_fg`] for benchmarking both paths.
pub fn force_fg_serial(
    x: &GridFunction,
    y: &GridFunction,
    specs: &PotentialSet,
) -> Result<ForceSample> {
    force_fg_with(|n, f| parallel::map_indexed_serial(n, f), x, y, specs)
}

/// Cell midpoint `m_i = (i + 1/2)/n`.
pub fn midpoint(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// `2 m_i - 1` evaluated as `(2i + 1 - n)/n`: exactly antisymmetric across
/// the grid, so the linearized self force averages to zero on full blocks
/// up to one rounding per cell.
pub fn two_m_minus_one(i: usize, n: usize) -> f64 {
    ((2 * i + 1) as f64 - n as f64) / n as f64
}

fn force_newtonian_with<M>(
    map: M,
    x: &GridFunction,
    y: &GridFunction,
    specs: &PotentialSet,
) -> Result<ForceSample>
where
    M: Fn(usize, &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>,
{
    if x.n_cells() != y.n_cells() {
        return Err(Error::InvalidInput(
            "force evaluation needs one grid".into(),
        ));
    }
    if !specs.symmetric_cross() {
        return Err(Error::Config(
            "newtonian force operators require symmetric cross potentials (H_rho = H_eta)".into(),
        ));
    }
    let n = x.n_cells();
    let n_inv = 1.0 / n as f64;
    let h = specs.h_rho;
    let (xs, ys) = (x.values(), y.values());
    let component = |i: usize, own: &[f64], other: &[f64], external: &PotentialSpec| -> f64 {
        let mut acc = two_m_minus_one(i, n);
        if !h.is_zero() {
            let mut s = 0.0;
            for &o in other {
                s += h.eval_derivative(own[i] - o);
            }
            acc += n_inv * s;
        }
        if !external.is_zero() {
            acc += external.eval_derivative(own[i]);
        }
        acc
    };
    let f = map(n, &|i| component(i, xs, ys, &specs.a_rho));
    let g = map(n, &|j| component(j, ys, xs, &specs.a_eta));
    Ok(ForceSample {
        f: GridFunction::new(f),
        g: GridFunction::new(g),
    })
}

/// Force operators of the Newtonian projected system: the linearized
/// self term `2m - 1`, the symmetric cross interaction and the external
/// well derivative. These enter the dynamics with a minus sign.
pub fn force_newtonian(
    x: &GridFunction,
    y: &GridFunction,
    specs: &PotentialSet,
) -> Result<ForceSample> {
    force_newtonian_with(|n, f| parallel::map_indexed(n, f), x, y, specs)
}

pub fn force_newtonian_serial(
    x: &GridFunction,
    y: &GridFunction,
    specs: &PotentialSet,
) -> Result<ForceSample> {
    force_newtonian_with(|n, f| parallel::map_indexed_serial(n, f), x, y, specs)
}

/// Newtonian self-interaction energy in its linear-on-the-cone form
/// `S(X) = integral (2m - 1) X(m) dm` by midpoint quadrature. Rejects
/// non-monotone input, where the linear form is invalid.
pub fn self_energy_linear(x: &GridFunction) -> Result<f64> {
    if !x.is_nondecreasing() {
        return Err(Error::InvalidInput(
            "self_energy_linear needs a nondecreasing profile".into(),
        ));
    }
    let n = x.n_cells();
    let sum: f64 = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| two_m_minus_one(i, n) * v)
        .sum();
    Ok(sum / n as f64)
}

/// Total energy of the Newtonian projected system: kinetic terms, the two
/// linear self-interaction energies, the symmetric cross energy and the
/// external wells, all by midpoint quadrature.
pub fn energy_functional(state: &LagrangianState, specs: &PotentialSet) -> Result<f64> {
    if !specs.symmetric_cross() {
        return Err(Error::Config(
            "energy is undefined for asymmetric cross potentials".into(),
        ));
    }
    let n = state.n_cells();
    let n_inv = 1.0 / n as f64;
    let mut e = 0.5 * state.v.inner(&state.v) + 0.5 * state.w.inner(&state.w);
    e += self_energy_linear(&state.x)?;
    e += self_energy_linear(&state.y)?;
    let h = specs.h_rho;
    if !h.is_zero() {
        let mut s = 0.0;
        for &yj in state.y.values() {
            for &xi in state.x.values() {
                s += h.eval(yj - xi);
            }
        }
        e += s * n_inv * n_inv;
    }
    if !specs.a_rho.is_zero() {
        e += state
            .x
            .values()
            .iter()
            .map(|&x| specs.a_rho.eval(x))
            .sum::<f64>()
            * n_inv;
    }
    if !specs.a_eta.is_zero() {
        e += state
            .y
            .values()
            .iter()
            .map(|&y| specs.a_eta.eval(y))
            .sum::<f64>()
            * n_inv;
    }
    Ok(e)
}

/// Energy diagnostic for smooth-kernel runs: kinetic plus the kernel
/// double sums. `None` for asymmetric cross potentials, where no energy is
/// defined. On the cone this agrees with [`energy_functional`] when the
/// self kernels are Newtonian.
pub fn smooth_energy(state: &LagrangianState, specs: &PotentialSet) -> Option<f64> {
    if !specs.symmetric_cross() {
        return None;
    }
    let n = state.n_cells();
    let n_inv = 1.0 / n as f64;
    let mut e = 0.5 * state.v.inner(&state.v) + 0.5 * state.w.inner(&state.w);
    let pair = |vals: &[f64], k: &PotentialSpec| -> f64 {
        if k.is_zero() {
            return 0.0;
        }
        let mut s = 0.0;
        for &a in vals {
            for &b in vals {
                s += k.eval(a - b);
            }
        }
        0.5 * s * n_inv * n_inv
    };
    e += pair(state.x.values(), &specs.k_rho);
    e += pair(state.y.values(), &specs.k_eta);
    let h = specs.h_rho;
    if !h.is_zero() {
        let mut s = 0.0;
        for &yj in state.y.values() {
            for &xi in state.x.values() {
                s += h.eval(yj - xi);
            }
        }
        e += s * n_inv * n_inv;
    }
    if !specs.a_rho.is_zero() {
        e += state
            .x
            .values()
            .iter()
            .map(|&x| specs.a_rho.eval(x))
            .sum::<f64>()
            * n_inv;
    }
    if !specs.a_eta.is_zero() {
        e += state
            .y
            .values()
            .iter()
            .map(|&y| specs.a_eta.eval(y))
            .sum::<f64>()
            * n_inv;
    }
    Some(e)
}

/// The four per-time-step field sequences a fixed-point sweep produces.
type SweepFields = (
    Vec<GridFunction>,
    Vec<GridFunction>,
    Vec<GridFunction>,
    Vec<GridFunction>,
);

/// Converged fixed-point trajectory.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub times: Vec<f64>,
    pub x: Vec<GridFunction>,
    pub y: Vec<GridFunction>,
    /// Corrective sweeps performed after the order-zero trajectory.
    pub iterations: usize,
    pub last_delta: f64,
    /// Successive-iterate distances, one inner sequence per subinterval.
    pub deltas: Vec<Vec<f64>>,
}

/// Trajectory-level fixed-point iteration: each sweep re-solves the two
/// scalar inclusions with right-hand sides frozen at the previous iterate
/// and re-integrates the forces along it. The horizon is split into
/// subintervals short enough for the iteration to contract, sized from the
/// sampled kernel Lipschitz constants.
pub fn picard_solve(
    init: &LagrangianState,
    specs: &PotentialSet,
    dt: f64,
    horizon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<PicardResult> {
    if !(init.epsilon > 0.0) {
        return Err(Error::InvalidInput(
            "picard iteration requires epsilon > 0".into(),
        ));
    }
    if !(dt > 0.0) || !(horizon > 0.0) || !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidInput(
            "picard needs positive dt, horizon, tol, max_iters".into(),
        ));
    }
    let eps = init.epsilon;
    let n = init.n_cells();

    // Contraction constant: iterate-to-iterate growth is bounded by the
    // force Lipschitz constants and by 1/eps from the resolvent coupling.
    let spread = init
        .x
        .values()
        .iter()
        .chain(init.y.values())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let radius = 2.0 * spread + 2.0;
    let lk = specs
        .k_rho
        .lipschitz_estimate(radius)
        .max(specs.k_eta.lipschitz_estimate(radius));
    let lh = specs
        .h_rho
        .lipschitz_estimate(radius)
        .max(specs.h_eta.lipschitz_estimate(radius));
    let c_force = (8.0 * lk * lk + 4.0 * lh * lh).sqrt();
    let c = (1.0 / eps).max(c_force).max(1.0);
    let steps_per_sub = (((0.5 / c) / dt).floor() as usize).clamp(1, usize::MAX);

    let total_steps = ((horizon / dt).round() as usize).max(1);
    let r = eps / dt;
    let weights = vec![1.0; n];

    let mut times = Vec::with_capacity(total_steps + 1);
    let mut out_x = Vec::with_capacity(total_steps + 1);
    let mut out_y = Vec::with_capacity(total_steps + 1);
    times.push(init.time);
    out_x.push(init.x.clone());
    out_y.push(init.y.clone());

    let mut x0 = init.x.clone();
    let mut y0 = init.y.clone();
    let mut p0 = init.p.clone();
    let mut q0 = init.q.clone();

    let mut iterations = 0usize;
    let mut deltas_all = Vec::new();
    let mut last_delta = 0.0;
    let mut done = 0usize;

    while done < total_steps {
        let k_steps = steps_per_sub.min(total_steps - done);

        let sweep = |xt: &[GridFunction],
                     yt: &[GridFunction],
                     pt: &[GridFunction],
                     qt: &[GridFunction]|
         -> Result<SweepFields> {
            let mut xs = Vec::with_capacity(k_steps + 1);
            let mut ys = Vec::with_capacity(k_steps + 1);
            let mut ps = Vec::with_capacity(k_steps + 1);
            let mut qs = Vec::with_capacity(k_steps + 1);
            xs.push(x0.clone());
            ys.push(y0.clone());
            ps.push(p0.clone());
            qs.push(q0.clone());
            for k in 0..k_steps {
                let fs = force_fg(&xt[k], &yt[k], specs)?;
                let p_next = GridFunction::new(
                    ps[k]
                        .values()
                        .iter()
                        .zip(fs.f.values())
                        .map(|(p, f)| p + dt * f)
                        .collect(),
                );
                let q_next = GridFunction::new(
                    qs[k]
                        .values()
                        .iter()
                        .zip(fs.g.values())
                        .map(|(q, g)| q + dt * g)
                        .collect(),
                );
                // Resolvent with the force integral frozen at the previous
                // iterate.
                let resolve = |acc: &GridFunction, cur: &GridFunction| -> Result<GridFunction> {
                    let target: Vec<f64> = acc
                        .values()
                        .iter()
                        .zip(cur.values())
                        .map(|(a, c)| (a + r * c) / (1.0 + r))
                        .collect();
                    Ok(GridFunction::new(project_cone(&target, &weights)?))
                };
                let x_next = resolve(&pt[k + 1], &xs[k])?;
                let y_next = resolve(&qt[k + 1], &ys[k])?;
                xs.push(x_next);
                ys.push(y_next);
                ps.push(p_next);
                qs.push(q_next);
            }
            Ok((xs, ys, ps, qs))
        };

        // Order-zero trajectory: frozen at the subinterval's initial data.
        let mut xt = vec![x0.clone(); k_steps + 1];
        let mut yt = vec![y0.clone(); k_steps + 1];
        let mut pt = vec![p0.clone(); k_steps + 1];
        let mut qt = vec![q0.clone(); k_steps + 1];
        (xt, yt, pt, qt) = sweep(&xt, &yt, &pt, &qt)?;

        let mut prev_delta = f64::INFINITY;
        let mut converged = false;
        let mut sub_deltas = Vec::new();
        for _ in 0..max_iters {
            let (xs, ys, ps, qs) = sweep(&xt, &yt, &pt, &qt)?;
            let mut delta: f64 = 0.0;
            for k in 0..=k_steps {
                let dx = xs[k].l2_distance(&xt[k]);
                let dy = ys[k].l2_distance(&yt[k]);
                let dp = ps[k].l2_distance(&pt[k]);
                let dq = qs[k].l2_distance(&qt[k]);
                delta = delta.max((dx * dx + dy * dy + dp * dp + dq * dq).sqrt());
            }
            (xt, yt, pt, qt) = (xs, ys, ps, qs);
            iterations += 1;
            sub_deltas.push(delta);
            last_delta = delta;
            if delta <= tol {
                converged = true;
                break;
            }
            prev_delta = delta;
        }
        deltas_all.push(sub_deltas);
        if !converged {
            let last_ratio = if prev_delta.is_finite() && prev_delta > 0.0 {
                last_delta / prev_delta
            } else {
                f64::NAN
            };
            return Err(Error::NonConvergence {
                iters: iterations,
                last_ratio,
            });
        }

        for k in 1..=k_steps {
            times.push(init.time + (done + k) as f64 * dt);
            out_x.push(xt[k].clone());
            out_y.push(yt[k].clone());
        }
        x0 = xt[k_steps].clone();
        y0 = yt[k_steps].clone();
        p0 = pt[k_steps].clone();
        q0 = qt[k_steps].clone();
        done += k_steps;
    }

    Ok(PicardResult {
        times,
        x: out_x,
        y: out_y,
        iterations,
        last_delta,
        deltas: deltas_all,
    })
}

/// Grid snapshot at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub x: GridFunction,
    pub y: GridFunction,
    pub v: GridFunction,
    pub w: GridFunction,
}

#[derive(Debug, Clone)]
pub struct LagrangianOutput {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

/// Initial grid data from a config: cell midpoints of the uniform measure
/// on [0,1] with seeded velocities, or explicit monotone profiles.
pub fn initial_state(config: &SimConfig) -> Result<LagrangianState> {
    let n = config.n_rho;
    let epsilon = config.epsilon();
    match &config.layout {
        InitialLayout::UniformGrid => {
            let grid: Vec<f64> = (0..n).map(|i| midpoint(i, n)).collect();
            let (lo, hi) = config.velocity_range;
            let draw = |stream: Stream| -> Vec<f64> {
                if lo == hi {
                    vec![lo; n]
                } else {
                    rng::uniform_draws(&mut rng::stream_rng(config.seed, stream), n, lo, hi)
                }
            };
            LagrangianState::new(
                GridFunction::new(grid.clone()),
                GridFunction::new(grid),
                GridFunction::new(draw(Stream::Rho)),
                GridFunction::new(draw(Stream::Eta)),
                epsilon,
            )
        }
        InitialLayout::ExplicitGrid { x, y, v, w } => LagrangianState::new(
            GridFunction::new(x.clone()),
            GridFunction::new(y.clone()),
            GridFunction::new(v.clone()),
            GridFunction::new(w.clone()),
            epsilon,
        ),
        InitialLayout::ExplicitParticles { .. } => Err(Error::Config(
            "grid solvers take x_init/y_init profiles, not particle lists".into(),
        )),
    }
}

fn diag_record(state: &LagrangianState, specs: &PotentialSet, solver: Solver) -> DiagnosticsRecord {
    let energy = match solver {
        Solver::LagrangianNewtonian => energy_functional(state, specs).ok(),
        _ => smooth_energy(state, specs),
    };
    DiagnosticsRecord {
        time: state.time,
        kinetic: 0.5 * state.v.inner(&state.v) + 0.5 * state.w.inner(&state.w),
        total_energy: energy,
        l2_x: state.x.l2_norm(),
        l2_y: state.y.l2_norm(),
        l2_v: state.v.l2_norm(),
        l2_w: state.w.l2_norm(),
        w2_to_reference: None,
        merge_events: 0,
        clusters_rho: clusters(state.x.values(), 0.0).num_blocks(),
        clusters_eta: clusters(state.y.values(), 0.0).num_blocks(),
    }
}

fn snapshot(state: &LagrangianState) -> Snapshot {
    Snapshot {
        time: state.time,
        x: state.x.clone(),
        y: state.y.clone(),
        v: state.v.clone(),
        w: state.w.clone(),
    }
}

/// Fixed-step driver for the grid solvers selected by the config.
pub fn run(config: &SimConfig) -> Result<LagrangianOutput> {
    config.validate()?;
    let specs = &config.potentials;
    if config.solver == Solver::LagrangianNewtonian {
        for (name, k) in [("K_rho", &specs.k_rho), ("K_eta", &specs.k_eta)] {
            if k.family != crate::potentials::Family::Newtonian || k.amplitude != 1.0 {
                return Err(Error::Config(format!(
                    "lagrangian_newtonian requires {name} to be the unit newtonian kernel"
                )));
            }
        }
    }
    let mut state = initial_state(config)?;

    if config.solver == Solver::Picard {
        let result = picard_solve(
            &state,
            specs,
            config.dt,
            config.t_final,
            config.picard_max_iters,
            config.picard_tol,
        )?;
        let mut snapshots = Vec::new();
        let mut diagnostics = Vec::new();
        let total = result.times.len() - 1;
        for k in 0..=total {
            if k % config.output_stride == 0 || k == total {
                let v = if k == 0 {
                    GridFunction::constant(state.n_cells(), 0.0)
                } else {
                    GridFunction::new(
                        result.x[k]
                            .values()
                            .iter()
                            .zip(result.x[k - 1].values())
                            .map(|(a, b)| (a - b) / config.dt)
                            .collect(),
                    )
                };
                let w = if k == 0 {
                    GridFunction::constant(state.n_cells(), 0.0)
                } else {
                    GridFunction::new(
                        result.y[k]
                            .values()
                            .iter()
                            .zip(result.y[k - 1].values())
                            .map(|(a, b)| (a - b) / config.dt)
                            .collect(),
                    )
                };
                let snap_state = LagrangianState {
                    x: result.x[k].clone(),
                    y: result.y[k].clone(),
                    v,
                    w,
                    p: state.p.clone(),
                    q: state.q.clone(),
                    time: result.times[k],
                    epsilon: state.epsilon,
                };
                snapshots.push(snapshot(&snap_state));
                diagnostics.push(diag_record(&snap_state, specs, config.solver));
            }
        }
        return Ok(LagrangianOutput {
            snapshots,
            diagnostics,
        });
    }

    let n_steps = config.n_steps();
    let mut snapshots = vec![snapshot(&state)];
    let mut diagnostics = vec![diag_record(&state, specs, config.solver)];
    for step in 1..=n_steps {
        match config.solver {
            Solver::LagrangianSecond => state.step_second_order(specs, config.dt)?,
            Solver::LagrangianFirst => state.step_first_order(specs, config.dt)?,
            Solver::LagrangianNewtonian => state.step_newtonian(specs, config.sigma, config.dt)?,
            Solver::Eulerian | Solver::Picard => unreachable!("dispatched above"),
        }
        if step % config.output_stride == 0 || step == n_steps {
            snapshots.push(snapshot(&state));
            diagnostics.push(diag_record(&state, specs, config.solver));
        }
    }
    Ok(LagrangianOutput {
        snapshots,
        diagnostics,
    })
}
