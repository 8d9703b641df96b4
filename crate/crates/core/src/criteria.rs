//! Hypothesis checks and the oscillation decision tree.
//!
//! For `k` in `{1, 2}` (tried in that order) the tree reads:
//!
//! 1. `I_k` and `I_{3-k}` both divergent: all proper solutions oscillate.
//! 2. `I_k` divergent, `I_{3-k}` finite, `J_k` divergent: all oscillate.
//! 3. As 2 but `J_k` finite, with a two-sided envelope: a non-oscillating
//!    solution exists (constructed by [`crate::fixed_point`]).
//! 4. Anything else is inconclusive.
//!
//! `I_k` is the moment integral of `(a_k, n_k)` and `J_k` the nested
//! integral with outer `(a_k, n_k, lambda_k)` and inner `(a_{3-k}, n_{3-k})`.

use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{
    moment_integral, nested_criterion_integral, IntegralVerdict, QuadConfig, QuadError,
};
use crate::system::{Envelope, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    LambdaNotPositive { index: usize, value: f64 },
    LambdaProductNotGreaterThanOne { product: f64 },
    EnvelopeConstantBelowOne { m: f64 },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::LambdaNotPositive { .. } => "LambdaNotPositive",
            Violation::LambdaProductNotGreaterThanOne { .. } => "LambdaProductNotGreaterThanOne",
            Violation::EnvelopeConstantBelowOne { .. } => "EnvelopeConstantBelowOne",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    AllOscillate,
    NonOscillatingExists,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Both moment integrals diverge.
    BothMomentsDiverge,
    /// One moment diverges, the other is finite, the nested integral diverges.
    NestedDiverges,
    /// One moment diverges, the other is finite, the nested integral is finite.
    NestedFinite,
    /// No moment integral diverges.
    NoDivergentMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub hypothesis_ok: bool,
    pub violations: Vec<Violation>,
    #[serde(rename = "I1")]
    pub i1: IntegralVerdict,
    #[serde(rename = "I2")]
    pub i2: IntegralVerdict,
    /// Present only when `I2` converges.
    #[serde(rename = "J1")]
    pub j1: Option<IntegralVerdict>,
    /// Present only when `I1` converges.
    #[serde(rename = "J2")]
    pub j2: Option<IntegralVerdict>,
    pub verdict: Verdict,
    /// Index `k` whose branch decided the verdict.
    pub k: Option<u32>,
    pub branch: Branch,
    pub witness_branch: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("criteria hypotheses violated: {0:?}")]
    HypothesisViolation(Vec<Violation>),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Lists every failed hypothesis; empty means the criteria apply.
pub fn validate_hypotheses(spec: &SystemSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, value) in [(1, spec.lambda1), (2, spec.lambda2)] {
        if !(value > 0.0) {
            out.push(Violation::LambdaNotPositive { index, value });
        }
    }
    let product = spec.lambda1 * spec.lambda2;
    if !(product > 1.0) {
        out.push(Violation::LambdaProductNotGreaterThanOne { product });
    }
    if spec.envelope == Envelope::TwoSidedExactPowerLaw && !(spec.m >= 1.0) {
        out.push(Violation::EnvelopeConstantBelowOne { m: spec.m });
    }
    out
}

struct Side<'a> {
    k: u32,
    moment: &'a IntegralVerdict,
    other_moment: &'a IntegralVerdict,
    nested: Option<&'a IntegralVerdict>,
}

/// Runs the decision tree and returns the evaluated integrals as evidence.
pub fn classify_oscillation(
    spec: &SystemSpec,
    cfg: &QuadConfig,
) -> Result<CriteriaReport, CriteriaError> {
    let violations = validate_hypotheses(spec);
    if !violations.is_empty() {
        return Err(CriteriaError::HypothesisViolation(violations));
    }

    let i1 = moment_integral(&spec.a1, spec.n1, cfg)?;
    let i2 = moment_integral(&spec.a2, spec.n2, cfg)?;
    let j1 = if i2.is_converged() {
        Some(nested_criterion_integral(
            &spec.a1,
            spec.n1,
            &spec.a2,
            spec.n2,
            spec.lambda1,
            cfg,
        )?)
    } else {
        None
    };
    let j2 = if i1.is_converged() {
        Some(nested_criterion_integral(
            &spec.a2,
            spec.n2,
            &spec.a1,
            spec.n1,
            spec.lambda2,
            cfg,
        )?)
    } else {
        None
    };

    let sides = [
        Side {
            k: 1,
            moment: &i1,
            other_moment: &i2,
            nested: j1.as_ref(),
        },
        Side {
            k: 2,
            moment: &i2,
            other_moment: &i1,
            nested: j2.as_ref(),
        },
    ];

    let mut decision = (
        Verdict::Inconclusive,
        None,
        Branch::NoDivergentMoment,
        "no moment integral diverges for k = 1 or k = 2".to_string(),
    );
    for side in &sides {
        if !side.moment.is_divergent() {
            continue;
        }
        let k = side.k;
        let other = 3 - k;
        decision = if side.other_moment.is_divergent() {
            (
                Verdict::AllOscillate,
                Some(k),
                Branch::BothMomentsDiverge,
                format!("k={k}: I{k} and I{other} both diverge -> all proper solutions oscillate"),
            )
        } else {
            match side.nested {
                Some(j) if j.is_divergent() => (
                    Verdict::AllOscillate,
                    Some(k),
                    Branch::NestedDiverges,
                    format!(
                        "k={k}: I{k} diverges, I{other} finite, J{k} diverges -> all proper solutions oscillate"
                    ),
                ),
                _ if spec.envelope == Envelope::TwoSidedExactPowerLaw => (
                    Verdict::NonOscillatingExists,
                    Some(k),
                    Branch::NestedFinite,
                    format!(
                        "k={k}: I{k} diverges, I{other} finite, J{k} finite, two-sided envelope -> a non-oscillating solution exists"
                    ),
                ),
                _ => (
                    Verdict::Inconclusive,
                    Some(k),
                    Branch::NestedFinite,
                    format!(
                        "k={k}: I{k} diverges, I{other} finite, J{k} finite, one-sided envelope -> inconclusive"
                    ),
                ),
            }
        };
        break;
    }

    let (verdict, k, branch, witness_branch) = decision;
    Ok(CriteriaReport {
        hypothesis_ok: true,
        violations: Vec::new(),
        i1,
        i2,
        j1,
        j2,
        verdict,
        k,
        branch,
        witness_branch,
    })
}
