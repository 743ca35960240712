//! Interaction and external potentials.
//!
//! Every potential is a closed-form radial profile about a center:
//!
//! * `gaussian_exp`: `K(x) = amplitude * exp(-scale * |x - center|^exponent)`
//! * `power`:        `K(x) = amplitude * |x - center|^exponent`
//! * `newtonian`:    `K(x) = amplitude * |x - center|`, derivative `amplitude * sign`
//! * `quadratic_well`: `A(x) = amplitude * |x - center|^2`
//! * `zero`:         identically zero
//!
//! Derivatives are analytic and odd about the center, with `sign(0) = 0` for
//! the Newtonian kink so that a particle exerts no force on itself.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    GaussianExp,
    Power,
    Newtonian,
    QuadraticWell,
    Zero,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::GaussianExp => "gaussian_exp",
            Family::Power => "power",
            Family::Newtonian => "newtonian",
            Family::QuadraticWell => "quadratic_well",
            Family::Zero => "zero",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_exp" => Ok(Family::GaussianExp),
            "power" => Ok(Family::Power),
            "newtonian" => Ok(Family::Newtonian),
            "quadratic_well" => Ok(Family::QuadraticWell),
            "zero" => Ok(Family::Zero),
            other => Err(Error::Config(format!("unknown potential family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub family: Family,
    pub amplitude: f64,
    /// Radial exponent `p` for `gaussian_exp` and `power`.
    pub exponent: f64,
    /// Positive rate `a` inside the exponential of `gaussian_exp`.
    pub scale: f64,
    pub center: f64,
}

/// Admissibility flags with grid-estimated constants.
///
/// `satisfies_a` checks evenness about the center; the `K(0) = 0` clause is
/// advisory and reported separately as `zero_at_origin` because a constant
/// shift never enters the dynamics. `witness` holds a sample point violating
/// the first failed condition.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub satisfies_a: bool,
    pub satisfies_sq: bool,
    pub satisfies_sl: bool,
    pub satisfies_at: bool,
    pub satisfies_h1: bool,
    pub satisfies_h2: bool,
    pub zero_at_origin: bool,
    pub witness: Option<f64>,
    pub sl_constant: Option<f64>,
    pub h1_lambda: Option<f64>,
    pub h2_alpha: Option<f64>,
}

fn sgn(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|r|^p` with fast paths for the small integer exponents used throughout.
fn abs_pow(r: f64, p: f64) -> f64 {
    if p == 2.0 {
        r * r
    } else if p == 3.0 {
        let a = r.abs();
        a * a * a
    } else if p == 4.0 {
        let rr = r * r;
        rr * rr
    } else if p == 1.0 {
        r.abs()
    } else if p == 0.0 {
        1.0
    } else {
        r.abs().powf(p)
    }
}

impl PotentialSpec {
    pub fn gaussian_exp(amplitude: f64, scale: f64, exponent: f64) -> Self {
        Self {
            family: Family::GaussianExp,
            amplitude,
            exponent,
            scale,
            center: 0.0,
        }
    }

    pub fn power(amplitude: f64, exponent: f64) -> Self {
        Self {
            family: Family::Power,
            amplitude,
            exponent,
            scale: 1.0,
            center: 0.0,
        }
    }

    pub fn newtonian() -> Self {
        Self {
            family: Family::Newtonian,
            amplitude: 1.0,
            exponent: 1.0,
            scale: 1.0,
            center: 0.0,
        }
    }

    pub fn quadratic_well(amplitude: f64, center: f64) -> Self {
        Self {
            family: Family::QuadraticWell,
            amplitude,
            exponent: 2.0,
            scale: 1.0,
            center,
        }
    }

    pub fn zero() -> Self {
        Self {
            family: Family::Zero,
            amplitude: 0.0,
            exponent: 0.0,
            scale: 1.0,
            center: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero) || self.amplitude == 0.0
    }

    /// Parameter sanity: finite fields, `scale > 0`, exponent at least 1 for
    /// the radial families, positive amplitude for `newtonian`.
    pub fn validate_params(&self) -> Result<()> {
        let fields = [self.amplitude, self.exponent, self.scale, self.center];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("potential parameters must be finite".into()));
        }
        if self.scale <= 0.0 {
            return Err(Error::Config("potential scale must be positive".into()));
        }
        match self.family {
            Family::GaussianExp | Family::Power => {
                if self.exponent < 1.0 {
                    return Err(Error::Config("radial exponent must be at least 1".into()));
                }
            }
            Family::Newtonian => {
                if self.amplitude <= 0.0 {
                    return Err(Error::Config("newtonian amplitude must be positive".into()));
                }
            }
            Family::QuadraticWell | Family::Zero => {}
        }
        Ok(())
    }

    /// Potential value at `x`. Non-finite inputs propagate as NaN; use
    /// [`PotentialSpec::eval_checked`] at API boundaries.
    pub fn eval(&self, x: f64) -> f64 {
        let r = x - self.center;
        match self.family {
            Family::GaussianExp => self.amplitude * (-self.scale * abs_pow(r, self.exponent)).exp(),
            Family::Power => self.amplitude * abs_pow(r, self.exponent),
            Family::Newtonian => self.amplitude * r.abs(),
            Family::QuadraticWell => self.amplitude * r * r,
            Family::Zero => 0.0,
        }
    }

    /// Analytic derivative at `x`, odd about the center; `sign(0) = 0` at
    /// the Newtonian kink.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let r = x - self.center;
        match self.family {
            Family::GaussianExp => {
                if r == 0.0 {
                    return 0.0;
                }
                let p = self.exponent;
                -self.amplitude
                    * self.scale
                    * p
                    * abs_pow(r, p - 1.0)
                    * (-self.scale * abs_pow(r, p)).exp()
                    * sgn(r)
            }
            Family::Power => {
                if r == 0.0 {
                    return 0.0;
                }
                self.amplitude * self.exponent * abs_pow(r, self.exponent - 1.0) * sgn(r)
            }
            Family::Newtonian => self.amplitude * sgn(r),
            Family::QuadraticWell => 2.0 * self.amplitude * r,
            Family::Zero => 0.0,
        }
    }

    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "potential evaluated at non-finite x = {x}"
            )));
        }
        Ok(self.eval(x))
    }

    pub fn eval_derivative_checked(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "potential derivative evaluated at non-finite x = {x}"
            )));
        }
        Ok(self.eval_derivative(x))
    }

    /// Sampled Lipschitz constant of the derivative on `[center - radius, center + radius]`.
    pub fn lipschitz_estimate(&self, radius: f64) -> f64 {
        let n = 4096;
        let mut max_slope = 0.0f64;
        let mut prev_x = self.center - radius;
        let mut prev_d = self.eval_derivative(prev_x);
        for j in 1..=n {
            let x = self.center - radius + 2.0 * radius * j as f64 / n as f64;
            let d = self.eval_derivative(x);
            let slope = ((d - prev_d) / (x - prev_x)).abs();
            max_slope = max_slope.max(slope);
            prev_x = x;
            prev_d = d;
        }
        max_slope
    }

    /// Check the admissibility conditions on a symmetric sample grid of the
    /// given radius. Failures are reported, never thrown.
    pub fn validate(&self, grid_radius: f64, n_samples: usize) -> Result<AdmissibilityReport> {
        if n_samples < 3 {
            return Err(Error::InvalidInput(
                "validate needs at least 3 samples".into(),
            ));
        }
        if !(grid_radius > 0.0) || !grid_radius.is_finite() {
            return Err(Error::InvalidInput(
                "grid radius must be positive and finite".into(),
            ));
        }
        let c = self.center;
        let m = n_samples.max(8);
        // Positive offsets, each evaluated at center +/- u: a linear grid
        // plus a geometric ladder toward zero so kink kernels report their
        // near-origin suprema.
        let mut offsets: Vec<f64> = (1..=m).map(|j| grid_radius * j as f64 / m as f64).collect();
        offsets.extend((1..=12).map(|k| grid_radius * 10f64.powi(-k)));

        const SYM_TOL: f64 = 1e-9;
        const GROWTH_MARGIN: f64 = 1.5;

        let mut satisfies_a = true;
        let mut witness_a = None;
        for &u in &offsets {
            let kp = self.eval(c + u);
            let km = self.eval(c - u);
            let scale = 1.0 + kp.abs().max(km.abs());
            if (kp - km).abs() > SYM_TOL * scale {
                satisfies_a = false;
                witness_a = Some(c + u);
                break;
            }
        }
        let zero_at_origin = self.eval(c).abs() <= 1e-12;

        // Growth tests: a condition of the form g(x) <= C * h(x) holds on the
        // grid iff the ratio g/h stops growing toward the boundary. Compare
        // the outer-half maximum of the ratio against the inner-half maximum.
        let growth_ok = |ratio: &dyn Fn(f64) -> f64| -> (bool, Option<f64>, f64) {
            let half = grid_radius / 2.0;
            let mut inner: f64 = 0.0;
            let mut outer: f64 = 0.0;
            let mut outer_arg = 0.0;
            let mut overall: f64 = 0.0;
            for &u in &offsets {
                let r = ratio(u);
                overall = overall.max(r);
                if u <= half {
                    inner = inner.max(r);
                } else if r > outer {
                    outer = r;
                    outer_arg = u;
                }
            }
            let ok = outer <= GROWTH_MARGIN * inner.max(0.0) + 1e-9;
            let witness = if ok { None } else { Some(c + outer_arg) };
            (ok, witness, overall)
        };

        let (satisfies_sq, witness_sq, _) = growth_ok(&|u| {
            let v = self.eval(c + u).max(self.eval(c - u));
            v / (1.0 + u * u)
        });
        let (satisfies_sl, witness_sl, sl_overall) = growth_ok(&|u| {
            let v = self
                .eval_derivative(c + u)
                .abs()
                .max(self.eval_derivative(c - u).abs());
            v / (1.0 + u)
        });

        let mut satisfies_at = true;
        let mut witness_at = None;
        for &u in &offsets {
            if self.eval_derivative(c + u) * u < -1e-12
                || self.eval_derivative(c - u) * (-u) < -1e-12
            {
                satisfies_at = false;
                witness_at = Some(c + u);
                break;
            }
        }

        // External-well coercivity about the origin of the axis, not the
        // potential's own center.
        let mut lambda = f64::INFINITY;
        let mut alpha = f64::INFINITY;
        let mut witness_h1 = None;
        let mut witness_h2 = None;
        let mut sampled = false;
        for &u in offsets.iter().chain(std::iter::once(&0.0)) {
            for x in [c + u, c - u] {
                if x.abs() <= 1e-9 {
                    continue;
                }
                sampled = true;
                let l = self.eval(x) / (x * x);
                if l < lambda {
                    lambda = l;
                    witness_h1 = Some(x);
                }
                let a = x * self.eval_derivative(x) / (x * x);
                if a < alpha {
                    alpha = a;
                    witness_h2 = Some(x);
                }
            }
        }
        if !sampled {
            lambda = 0.0;
            alpha = 0.0;
        }
        let satisfies_h1 = lambda > 1e-12;
        let satisfies_h2 = alpha > 1e-12;

        let witness = [
            (!satisfies_a).then_some(witness_a).flatten(),
            (!satisfies_sq).then_some(witness_sq).flatten(),
            (!satisfies_sl).then_some(witness_sl).flatten(),
            (!satisfies_at).then_some(witness_at).flatten(),
            (!satisfies_h1).then_some(witness_h1).flatten(),
            (!satisfies_h2).then_some(witness_h2).flatten(),
        ]
        .into_iter()
        .flatten()
        .next();

        Ok(AdmissibilityReport {
            satisfies_a,
            satisfies_sq,
            satisfies_sl,
            satisfies_at,
            satisfies_h1,
            satisfies_h2,
            zero_at_origin,
            witness,
            sl_constant: satisfies_sl.then_some(sl_overall),
            h1_lambda: Some(if lambda.is_finite() { lambda } else { 0.0 }),
            h2_alpha: Some(if alpha.is_finite() { alpha } else { 0.0 }),
        })
    }
}
