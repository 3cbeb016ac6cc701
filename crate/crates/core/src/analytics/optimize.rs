//! Scalar solvers for the optimal bias.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Convergence threshold on `|G(gamma) - gamma|`.
    pub tol: f64,
    /// Weight of the new iterate in `gamma <- (1 - d) gamma + d G(gamma)`.
    pub damping: f64,
    pub max_iterations: usize,
    /// Iterates are clipped to `[eps, 1 - eps]`.
    pub eps: f64,
    pub start: f64,
    /// Maximize the closed form by golden-section search when the
    /// iteration fails instead of returning an error.
    pub golden_fallback: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            damping: 0.5,
            max_iterations: 500,
            eps: 1e-6,
            start: 0.5,
            golden_fallback: true,
        }
    }
}

impl OptimizerOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping", "must lie in (0, 1]"));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(invalid("eps", "must lie in (0, 0.5)"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    FixedPoint,
    GoldenSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalGamma {
    pub gamma: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    /// `|G(gamma) - gamma|` at the returned point.
    pub residual: f64,
}

/// Damped iteration of `gamma <- G(gamma)`.
///
/// Returns the converged point and the iteration count, or the last iterate
/// as a [`Error::Convergence`].
pub fn damped_fixed_point(
    map: impl Fn(f64) -> f64,
    opts: &OptimizerOptions,
) -> Result<(f64, usize)> {
    opts.validate()?;
    let clip = |g: f64| g.clamp(opts.eps, 1.0 - opts.eps);
    let mut gamma = clip(opts.start);
    for it in 1..=opts.max_iterations {
        let target = map(gamma);
        if (target - gamma).abs() < opts.tol {
            return Ok((gamma, it));
        }
        gamma = clip((1.0 - opts.damping) * gamma + opts.damping * target);
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        last: gamma,
    })
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
