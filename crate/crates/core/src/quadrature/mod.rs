//! Weighted improper integrals of monomial-exponential coefficient functions.
//!
//! Every integral is decided twice: symbolically from the term structure
//! (exact verdicts for `c t^p e^{qt}` families) and numerically by adaptive
//! Gauss-Kronrod over a geometric horizon schedule. The two must agree;
//! a disagreement is reported as [`QuadError::NumericSymbolicMismatch`]
//! and usually means the [`QuadConfig`] horizon or threshold is too tight.

pub mod gauss_kronrod;
mod kernels;
pub mod special;

pub use kernels::{
    ln_tail_kernel, moment_integral, moment_integral_numeric, moment_integral_symbolic,
    moment_term_closed_form, nested_criterion_integral, nested_criterion_numeric,
    nested_criterion_symbolic, nested_tail_integral, tail_kernel_integral,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerances and horizon schedule for the numeric path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Relative tolerance on converged values.
    pub quad_tol: f64,
    /// Largest finite upper limit probed (measured from the lower limit).
    pub horizon_max: f64,
    /// Partial-sum magnitude that declares numeric divergence.
    pub div_threshold: f64,
    /// Multiplicative factor between successive horizons.
    pub horizon_growth: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            horizon_max: 1e6,
            div_threshold: 1e50,
            horizon_growth: 2.0,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        let ok = self.quad_tol > 0.0
            && self.quad_tol < 1.0
            && self.horizon_max > 0.0
            && self.horizon_max.is_finite()
            && self.div_threshold > 1.0
            && self.horizon_growth > 1.0
            && self.horizon_growth.is_finite();
        if ok {
            Ok(())
        } else {
            Err(QuadError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Why an integral was judged divergent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceEvidence {
    /// Exponential rate of the dominant integrand term.
    pub dominant_rate: f64,
    /// Power of `t` in the dominant integrand term.
    pub dominant_power: f64,
    /// `(horizon, partial integral)` pairs from the numeric path.
    pub partial_sums: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum IntegralVerdict {
    Converged { value: f64, error_estimate: f64 },
    Divergent(DivergenceEvidence),
}

impl IntegralVerdict {
    pub fn is_divergent(&self) -> bool {
        matches!(self, IntegralVerdict::Divergent(_))
    }

    pub fn is_converged(&self) -> bool {
        !self.is_divergent()
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            IntegralVerdict::Converged { value, .. } => Some(*value),
            IntegralVerdict::Divergent(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            IntegralVerdict::Converged { .. } => "Converged",
            IntegralVerdict::Divergent(_) => "Divergent",
        }
    }
}

/// Verdict of the exact term-structure analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolicVerdict {
    /// Converges; carries the closed-form value when one exists.
    Converged(Option<f64>),
    Divergent {
        rate: f64,
        power: f64,
    },
}

impl SymbolicVerdict {
    pub fn is_divergent(&self) -> bool {
        matches!(self, SymbolicVerdict::Divergent { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("kernel order must be >= 1, got {0}")]
    InvalidOrder(u32),
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "tail kernel integral diverges: the moment integral of the inner coefficient is infinite"
    )]
    TailDiverges,
    #[error("numeric and symbolic paths disagree: symbolic {symbolic}, numeric {numeric}")]
    NumericSymbolicMismatch { symbolic: String, numeric: String },
    #[error("quadrature error estimate {achieved:e} exceeds requested {requested:e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },
}

/// Outcome of the numeric horizon scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericOutcome {
    pub converged: Option<(f64, f64)>,
    pub partial_sums: Vec<(f64, f64)>,
}

impl NumericOutcome {
    pub fn is_divergent(&self) -> bool {
        self.converged.is_none()
    }
}

const MAX_PANELS: usize = 2000;
const INITIAL_WIDTH: f64 = 1.0;

/// Integrates `f >= 0` over `[lower, inf)` on horizons
/// `lower + w, lower + w g, lower + w g^2, ...` until `horizon_max`.
///
/// `tail_bound(h)` must return an upper bound on `int_h^inf f`, or `None`
/// when no finite bound is known. Convergence is declared once the bound
/// drops below the relative target; divergence when the partial sum
/// crosses `div_threshold`, or when, at `horizon_max`, the last increment
/// failed to shrink by `g^{-1/2}` relative to the one before.
pub(crate) fn improper_integral<F, B>(
    f: F,
    lower: f64,
    tail_bound: B,
    cfg: &QuadConfig,
) -> NumericOutcome
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> Option<f64>,
{
    let target = 0.1 * cfg.quad_tol;
    let mut partial = 0.0_f64;
    let mut error = 0.0;
    let mut width = INITIAL_WIDTH.min(cfg.horizon_max);
    let mut prev_h = lower;
    let mut increments: Vec<f64> = Vec::new();
    let mut log = Vec::new();

    loop {
        let h = lower + width;
        let chunk = gauss_kronrod::integrate(
            &f,
            prev_h,
            h,
            0.05 * target * partial.abs(),
            0.5 * target,
            MAX_PANELS,
        );
        partial += chunk.value;
        error += chunk.abs_error;
        increments.push(chunk.value);
        log.push((h, partial));
        prev_h = h;

        if !partial.is_finite() || partial.abs() > cfg.div_threshold {
            return NumericOutcome {
                converged: None,
                partial_sums: log,
            };
        }
        if let Some(bound) = tail_bound(h) {
            if bound <= 0.5 * target * partial.abs() || bound == 0.0 {
                return NumericOutcome {
                    converged: Some((partial, error + bound)),
                    partial_sums: log,
                };
            }
        }
        if width >= cfg.horizon_max {
            break;
        }
        width = (width * cfg.horizon_growth).min(cfg.horizon_max);
    }

    let last = increments.last().copied().unwrap_or(0.0).abs();
    let before = if increments.len() >= 2 {
        increments[increments.len() - 2].abs()
    } else {
        f64::INFINITY
    };
    let decay = cfg.horizon_growth.powf(-0.5);
    let negligible = last <= target * partial.abs();
    if negligible || last <= decay * before {
        // geometric remainder estimate for the unprobed tail
        let ratio = if before > 0.0 { last / before } else { 0.0 };
        let remainder = if ratio < 1.0 {
            last * ratio / (1.0 - ratio)
        } else {
            last
        };
        NumericOutcome {
            converged: Some((partial, error + remainder)),
            partial_sums: log,
        }
    } else {
        NumericOutcome {
            converged: None,
            partial_sums: log,
        }
    }
}
