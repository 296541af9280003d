//! Normalization constants of the fractional energies.
//!
//! All constants are ratios of Gamma functions evaluated in log-space and
//! exponentiated, so they stay accurate for the whole admissible range of
//! exponents without overflow.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Exponent bundle for the fractional problems.
///
/// `s = 1/2` is admitted here only so the endpoint limits can be evaluated;
/// the solvers reject `s >= 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    /// spatial dimension, 1 or 2
    pub n: usize,
    /// fractional exponent in (0, 1/2]
    pub s: f64,
    /// extension weight exponent, a = 1 - 2s
    pub a: f64,
}

impl FracParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::InvalidParam(format!("n must be 1 or 2, got {n}")));
        }
        if !(s > 0.0 && s <= 0.5) {
            return Err(Error::InvalidParam(format!("s must lie in (0, 1/2], got {s}")));
        }
        Ok(FracParams { n, s, a: 1.0 - 2.0 * s })
    }

    /// Variant for the solver modules, which require s strictly below 1/2.
    pub fn new_subcritical(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 0.5) {
            return Err(Error::InvalidParam(format!("s must lie in (0, 1/2), got {s}")));
        }
        Self::new(n, s)
    }
}

/// Normalization of the fractional Laplacian:
/// `gamma_{n,s} = s 2^{2s} pi^{-n/2} Gamma((n+2s)/2) / Gamma(1-s)`.
pub fn gamma_ns(p: FracParams) -> f64 {
    let (n, s) = (p.n as f64, p.s);
    let ln = s.ln()
        + 2.0 * s * std::f64::consts::LN_2
        - 0.5 * n * std::f64::consts::PI.ln()
        + ln_gamma((n + 2.0 * s) / 2.0)
        - ln_gamma(1.0 - s);
    ln.exp()
}

/// Weight of the extension energy: `delta_s = 2^{2s-1} Gamma(s) / Gamma(1-s)`.
pub fn delta_s(s: f64) -> f64 {
    let ln = (2.0 * s - 1.0) * std::f64::consts::LN_2 + ln_gamma(s) - ln_gamma(1.0 - s);
    ln.exp()
}

/// Poisson kernel normalization: `sigma_{n,s} = pi^{-n/2} Gamma((n+2s)/2) / Gamma(s)`.
///
/// With this constant the kernel `P_{n,s}(., z)` integrates to one over R^n
/// for every height z > 0.
pub fn sigma_ns(p: FracParams) -> f64 {
    let (n, s) = (p.n as f64, p.s);
    let ln = -0.5 * n * std::f64::consts::PI.ln() + ln_gamma((n + 2.0 * s) / 2.0) - ln_gamma(s);
    ln.exp()
}

/// Volume of the unit ball in (possibly fractional) dimension k:
/// `omega_k = pi^{k/2} / Gamma(1 + k/2)`.
pub fn omega_k(k: f64) -> f64 {
    let ln = 0.5 * k * std::f64::consts::PI.ln() - ln_gamma(1.0 + 0.5 * k);
    ln.exp()
}
