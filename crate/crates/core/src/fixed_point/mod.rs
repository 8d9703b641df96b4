//! Construction of a non-oscillating solution when the nested integral
//! `P` is finite.
//!
//! With `K1^(1 - l1 l2) = P M` and `T` large enough, the operator
//!
//! ```text
//! (S1 x1)(t) = K1 + (-1)^n1 int_t^inf (s-t)^(n1-1)/(n1-1)! f1(s, x2(s)) ds
//! x2(s)      = (-1)^n2 int_s^inf (r-s)^(n2-1)/(n2-1)! f2(r, x1(r)) dr
//! ```
//!
//! maps `{ x1 : |x1| <= 2 K1 }` into itself. Its fixed point solves the
//! system on `[T, inf)` with `x1 -> K1` and `x2 -> 0`. Here the fixed point
//! is found by Picard iteration on a grid over `[T, t_max]`, starting from
//! `x1 = K1`.

mod grid;
mod operator;

pub use grid::{derivative, first_derivative, second_derivative, sign_changes, GridSpacing};
pub use operator::S1Output;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{classify_oscillation, CriteriaError, Verdict};
use crate::quadrature::{
    nested_criterion_integral, nested_tail_integral, tail_kernel_integral, IntegralVerdict,
    QuadConfig, QuadError,
};
use crate::sim::InitialState;
use crate::system::SystemSpec;
use operator::S1Operator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointConfig {
    pub grid_points: usize,
    /// Initial truncation horizon; grown until both tail bounds are
    /// at most `fp_tol / 10`.
    pub t_max: f64,
    /// Largest horizon tried for `t_max` and for the scan for `T`.
    pub t_max_limit: f64,
    pub grid: GridSpacing,
    pub max_iter: usize,
    pub fp_tol: f64,
    pub verify_tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            t_max: 10.0,
            t_max_limit: 200.0,
            grid: GridSpacing::Geometric { stretch: 15.0 },
            max_iter: 100,
            fp_tol: 1e-9,
            verify_tol: 1e-5,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<(), FixedPointError> {
        let ok = self.grid_points >= 100
            && self.t_max > 0.0
            && self.t_max.is_finite()
            && self.t_max_limit >= self.t_max
            && self.t_max_limit.is_finite()
            && self.grid.is_valid()
            && self.max_iter >= 1
            && self.fp_tol > 0.0
            && self.verify_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FixedPointError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub ode_residual_1: f64,
    pub ode_residual_2: f64,
    pub limit_error_x1: f64,
    pub limit_error_x2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "T")]
    pub t_start: f64,
    pub t_max: f64,
    pub t: Vec<f64>,
    pub x1_grid: Vec<f64>,
    pub x2_grid: Vec<f64>,
    /// `x1^(j)` on the grid for `j = 0..=n1`, the last being `f1(t, x2)`.
    #[serde(skip)]
    pub x1_derivs: Vec<Vec<f64>>,
    #[serde(skip)]
    pub x2_derivs: Vec<Vec<f64>>,
    pub iterations: usize,
    pub final_delta: f64,
    pub delta_history: Vec<f64>,
    pub residuals: Residuals,
    /// Bounds on `|x1(t_max) - K1|` and `|x2(t_max)|` over `|x1| <= 2 K1`.
    pub tail_bound_x1: f64,
    pub tail_bound_x2: f64,
}

impl FixedPointResult {
    /// `x1, x1', ..., x2, x2', ...` at `T`, read off the grid.
    pub fn initial_state(&self) -> InitialState {
        let n1 = self.x1_derivs.len() - 1;
        let n2 = self.x2_derivs.len() - 1;
        InitialState::new(
            self.t_start,
            (0..n1).map(|j| self.x1_derivs[j][0]).collect(),
            (0..n2).map(|j| self.x2_derivs[j][0]).collect(),
        )
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        crate::export::write_grid_csv(&self.t, &self.x1_grid, &self.x2_grid, w)
    }

    pub fn sup_x1(&self) -> f64 {
        self.x1_grid.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub ode_residual_1: f64,
    pub ode_residual_2: f64,
    pub limit_error_x1: f64,
    pub limit_error_x2: f64,
    pub tail_bound_x1: f64,
    pub tail_bound_x2: f64,
    pub x1_sign_changes: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedPointError {
    #[error("invalid fixed-point configuration: {0}")]
    InvalidConfig(String),
    #[error("P = 0: the outer or inner coefficient vanishes, K1 is undefined")]
    DegenerateP,
    #[error("the nested integral P diverges")]
    DivergentP,
    #[error("no admissible T found up to {scanned_to}")]
    NoAdmissibleT { scanned_to: f64 },
    #[error("tail bounds still above tolerance at t_max = {t_max}")]
    HorizonExhausted { t_max: f64 },
    #[error("iterate left the ball: sup |S1 x1| = {sup} > 2 K1 = {bound}")]
    X1Escape { sup: f64, bound: f64 },
    #[error("no convergence after {iterations} iterations (final delta {final_delta:e})")]
    NonConvergence {
        iterations: usize,
        final_delta: f64,
        best: Box<FixedPointResult>,
    },
    #[error("construction requires verdict NonOscillatingExists with k = 1, got {0}")]
    Precondition(String),
    #[error("verification failed: {check} = {value:e} exceeds {limit:e}")]
    VerificationFailure {
        check: &'static str,
        value: f64,
        limit: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
}

/// `P`: the nested integral with outer `(a1, n1, lambda1)` and inner `(a2, n2)`.
pub fn compute_p(spec: &SystemSpec, quad: &QuadConfig) -> Result<f64, FixedPointError> {
    if spec.a1.is_zero() || spec.a2.is_zero() {
        return Err(FixedPointError::DegenerateP);
    }
    match nested_criterion_integral(&spec.a1, spec.n1, &spec.a2, spec.n2, spec.lambda1, quad)? {
        IntegralVerdict::Divergent(_) => Err(FixedPointError::DivergentP),
        IntegralVerdict::Converged { value, .. } if value > 0.0 => Ok(value),
        IntegralVerdict::Converged { .. } => Err(FixedPointError::DegenerateP),
    }
}

/// `K1 = (P M)^(1 / (1 - l1 l2))`.
pub fn k1_from_p(spec: &SystemSpec, p: f64) -> f64 {
    (p * spec.m).powf(1.0 / (1.0 - spec.lambda1 * spec.lambda2))
}

/// `G(T) = 2^(l1 l2) M K1^(l1 l2) int_T^inf (s-T)^(n1-1)/(n1-1)! a1 A2^l1 ds`.
pub fn entry_functional(
    spec: &SystemSpec,
    k1: f64,
    t_start: f64,
    quad: &QuadConfig,
) -> Result<f64, FixedPointError> {
    let ll = spec.lambda1 * spec.lambda2;
    let tail = nested_tail_integral(
        &spec.a1,
        spec.n1,
        &spec.a2,
        spec.n2,
        spec.lambda1,
        t_start,
        quad,
    )?
    .converged
    .ok_or(FixedPointError::DivergentP)?
    .0;
    Ok(2f64.powf(ll) * spec.m * k1.powf(ll) * tail)
}

/// `K1` from `P`, then the first `T` in `0, 1, 2, 4, ...` with
/// `G(T) < 0.9 K1`.
pub fn choose_k1_t(
    spec: &SystemSpec,
    p: f64,
    quad: &QuadConfig,
    cfg: &FixedPointConfig,
) -> Result<(f64, f64), FixedPointError> {
    if !(p > 0.0) {
        return Err(FixedPointError::DegenerateP);
    }
    let k1 = k1_from_p(spec, p);
    let mut t = 0.0;
    while t <= cfg.t_max_limit {
        let g = entry_functional(spec, k1, t, quad)?;
        debug!("T scan: G({t}) = {g:e}, 0.9 K1 = {:e}", 0.9 * k1);
        if g < 0.9 * k1 {
            return Ok((k1, t));
        }
        t = if t == 0.0 { 1.0 } else { 2.0 * t };
    }
    Err(FixedPointError::NoAdmissibleT {
        scanned_to: cfg.t_max_limit,
    })
}

/// Bounds on `|x1(t) - K1|` and `|x2(t)|` valid for any `|x1| <= 2 K1`.
pub fn tail_bounds(
    spec: &SystemSpec,
    k1: f64,
    t: f64,
    quad: &QuadConfig,
) -> Result<(f64, f64), FixedPointError> {
    let big = 2.0 * k1;
    let b2 = big.powf(spec.lambda2) * tail_kernel_integral(&spec.a2, spec.n2, t, quad)?;
    let n = nested_tail_integral(&spec.a1, spec.n1, &spec.a2, spec.n2, spec.lambda1, t, quad)?
        .converged
        .ok_or(FixedPointError::DivergentP)?
        .0;
    let b1 = big.powf(spec.lambda1 * spec.lambda2) * n;
    Ok((b1, b2))
}

/// Smallest horizon in the sequence `T + d, T + 1.25 d, ...` (starting from
/// `cfg.t_max`) whose tail bounds are at most `fp_tol / 10`.
pub fn select_t_max(
    spec: &SystemSpec,
    k1: f64,
    t_start: f64,
    quad: &QuadConfig,
    cfg: &FixedPointConfig,
) -> Result<(f64, f64, f64), FixedPointError> {
    let target = 0.1 * cfg.fp_tol;
    let mut t_max = cfg.t_max.max(t_start + 1.0);
    loop {
        let (b1, b2) = tail_bounds(spec, k1, t_max, quad)?;
        if b1 <= target && b2 <= target {
            return Ok((t_max, b1, b2));
        }
        let next = t_start + 1.25 * (t_max - t_start);
        if next > cfg.t_max_limit {
            return Err(FixedPointError::HorizonExhausted { t_max });
        }
        t_max = next;
    }
}

/// One application of `S1` to `x1` given on `t` (`t[0] = T`, last = `t_max`).
pub fn apply_s1(
    t: &[f64],
    x1: &[f64],
    spec: &SystemSpec,
    k1: f64,
    quad: &QuadConfig,
) -> Result<S1Output, FixedPointError> {
    let bound = 2.0 * k1;
    let sup_in = x1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if sup_in > bound {
        return Err(FixedPointError::X1Escape { sup: sup_in, bound });
    }
    let op = S1Operator::new(spec, k1, t.to_vec(), quad)?;
    let out = op.apply(x1);
    let sup = out.x1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if sup > bound {
        return Err(FixedPointError::X1Escape { sup, bound });
    }
    Ok(out)
}

/// Largest `|D^n1 x1 - f1|` and `|D^n2 x2 - f2|` over interior nodes.
pub fn grid_residuals(spec: &SystemSpec, t: &[f64], x1: &[f64], x2: &[f64]) -> (f64, f64) {
    let d1 = derivative(t, x1, spec.n1);
    let d2 = derivative(t, x2, spec.n2);
    let mut r = (0.0_f64, 0.0_f64);
    for i in 0..t.len() {
        if d1[i].is_finite() {
            r.0 = r.0.max((d1[i] - spec.f1(t[i], x2[i])).abs());
        }
        if d2[i].is_finite() {
            r.1 = r.1.max((d2[i] - spec.f2(t[i], x1[i])).abs());
        }
    }
    r
}

/// Picard iteration for given `K1` and `T`, without the criteria gate.
pub fn iterate_with(
    spec: &SystemSpec,
    k1: f64,
    t_start: f64,
    quad: &QuadConfig,
    cfg: &FixedPointConfig,
) -> Result<FixedPointResult, FixedPointError> {
    cfg.validate()?;
    let (t_max, b1, b2) = select_t_max(spec, k1, t_start, quad, cfg)?;
    let t = cfg.grid.nodes(t_start, t_max, cfg.grid_points);
    let op = S1Operator::new(spec, k1, t.clone(), quad)?;
    let bound = 2.0 * k1;

    let mut x1 = vec![k1; t.len()];
    let mut history = Vec::new();
    let mut last_out = None;
    for it in 1..=cfg.max_iter {
        let out = op.apply(&x1);
        let sup = out.x1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if sup > bound {
            return Err(FixedPointError::X1Escape { sup, bound });
        }
        let delta = out
            .x1
            .iter()
            .zip(&x1)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        history.push(delta);
        debug!("iteration {it}: delta = {delta:e}");
        x1.clone_from(&out.x1);
        last_out = Some(out);
        if delta <= cfg.fp_tol {
            break;
        }
    }
    let out = last_out.expect("max_iter >= 1");
    let final_delta = *history.last().expect("nonempty");
    if history.len() >= 3 {
        let tail = &history[history.len() - 3..];
        if tail[1] > tail[0] || tail[2] > tail[1] {
            warn!("sup-norm change not monotone over the last three iterations: {tail:?}");
        }
    }

    let (r1, r2) = grid_residuals(spec, &t, &out.x1, &out.x2);
    let n = t.len() - 1;
    let result = FixedPointResult {
        p: None,
        k1,
        t_start,
        t_max,
        residuals: Residuals {
            ode_residual_1: r1,
            ode_residual_2: r2,
            limit_error_x1: (out.x1[n] - k1).abs(),
            limit_error_x2: out.x2[n].abs(),
        },
        t,
        x1_grid: out.x1,
        x2_grid: out.x2,
        x1_derivs: out.x1_derivs,
        x2_derivs: out.x2_derivs,
        iterations: history.len(),
        final_delta,
        delta_history: history,
        tail_bound_x1: b1,
        tail_bound_x2: b2,
    };
    if final_delta > cfg.fp_tol {
        return Err(FixedPointError::NonConvergence {
            iterations: result.iterations,
            final_delta,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Full pipeline: criteria gate, `P`, `K1`, `T`, Picard iteration.
pub fn iterate_to_fixed_point(
    spec: &SystemSpec,
    quad: &QuadConfig,
    cfg: &FixedPointConfig,
) -> Result<FixedPointResult, FixedPointError> {
    cfg.validate()?;
    if spec.a1.is_zero() || spec.a2.is_zero() {
        return Err(FixedPointError::DegenerateP);
    }
    let report = classify_oscillation(spec, quad)?;
    if report.verdict != Verdict::NonOscillatingExists || report.k != Some(1) {
        return Err(FixedPointError::Precondition(format!(
            "{:?} (k = {:?})",
            report.verdict, report.k
        )));
    }
    let p = compute_p(spec, quad)?;
    let (k1, t_start) = choose_k1_t(spec, p, quad, cfg)?;
    let mut result = iterate_with(spec, k1, t_start, quad, cfg)?;
    result.p = Some(p);
    Ok(result)
}

/// Checks residuals, limits and the absence of sign changes of `x1`.
pub fn verify_solution(
    result: &FixedPointResult,
    spec: &SystemSpec,
    cfg: &FixedPointConfig,
) -> Result<VerificationReport, FixedPointError> {
    let (r1, r2) = grid_residuals(spec, &result.t, &result.x1_grid, &result.x2_grid);
    let n = result.t.len() - 1;
    let report = VerificationReport {
        ode_residual_1: r1,
        ode_residual_2: r2,
        limit_error_x1: (result.x1_grid[n] - result.k1).abs(),
        limit_error_x2: result.x2_grid[n].abs(),
        tail_bound_x1: result.tail_bound_x1,
        tail_bound_x2: result.tail_bound_x2,
        x1_sign_changes: sign_changes(&result.x1_grid),
    };
    let checks = [
        ("ode_residual_1", r1, cfg.verify_tol),
        ("ode_residual_2", r2, cfg.verify_tol),
        (
            "limit_error_x1",
            report.limit_error_x1,
            report.tail_bound_x1,
        ),
        (
            "limit_error_x2",
            report.limit_error_x2,
            report.tail_bound_x2,
        ),
        ("x1_sign_changes", report.x1_sign_changes as f64, 0.0),
    ];
    for (check, value, limit) in checks {
        if !(value <= limit) {
            return Err(FixedPointError::VerificationFailure {
                check,
                value,
                limit,
            });
        }
    }
    Ok(report)
}
