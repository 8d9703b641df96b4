use std::cell::RefCell;

use statrs::function::gamma::ln_gamma;

use super::special::{ln_binomial, ln_power_exp_tail};
use super::{
    improper_integral, DivergenceEvidence, IntegralVerdict, NumericOutcome, QuadConfig, QuadError,
    SymbolicVerdict,
};
use crate::coef::{log_sum_exp, CoefFn, Term};

fn check_order(n: u32) -> Result<(), QuadError> {
    if n == 0 {
        Err(QuadError::InvalidOrder(n))
    } else {
        Ok(())
    }
}

/// `m * ln t` with `0^0 = 1`.
fn ln_monomial(m: f64, t: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else if t <= 0.0 {
        f64::NEG_INFINITY
    } else {
        m * t.ln()
    }
}

fn ln_fact(n: u32) -> f64 {
    ln_gamma(f64::from(n))
}

fn is_small_integer(p: f64) -> bool {
    p.fract() == 0.0 && p <= 170.0
}

/// `c Gamma(n+p) / ((n-1)! (-q)^{n+p})`, the moment integral of one term,
/// or `None` if that term diverges.
pub fn moment_term_closed_form(term: &Term, n: u32) -> Option<f64> {
    if !term.is_active() {
        return Some(0.0);
    }
    if term.q >= 0.0 {
        return None;
    }
    let nf = f64::from(n);
    let ln = term.c.ln() + ln_gamma(nf + term.p) - ln_fact(n) - (nf + term.p) * (-term.q).ln();
    Some(ln.exp())
}

/// Exact verdict for `int_0^inf t^{n-1}/(n-1)! a(t) dt`.
pub fn moment_integral_symbolic(a: &CoefFn, n: u32) -> Result<SymbolicVerdict, QuadError> {
    check_order(n)?;
    let nf = f64::from(n);
    let mut divergent: Option<(f64, f64)> = None;
    let mut total = 0.0;
    for term in a.active_terms() {
        match moment_term_closed_form(term, n) {
            Some(v) => total += v,
            None => {
                let cand = (term.q, nf - 1.0 + term.p);
                divergent = Some(match divergent {
                    Some(best) if best.0 > cand.0 || (best.0 == cand.0 && best.1 >= cand.1) => best,
                    _ => cand,
                });
            }
        }
    }
    Ok(match divergent {
        Some((rate, power)) => SymbolicVerdict::Divergent { rate, power },
        None => SymbolicVerdict::Converged(Some(total)),
    })
}

/// Numeric horizon scan of the moment integral.
pub fn moment_integral_numeric(
    a: &CoefFn,
    n: u32,
    cfg: &QuadConfig,
) -> Result<NumericOutcome, QuadError> {
    check_order(n)?;
    cfg.validate()?;
    let terms: Vec<Term> = a.active_terms().copied().collect();
    let m_shift = f64::from(n) - 1.0;
    let ln_norm = ln_fact(n);
    let integrand = |t: f64| -> f64 {
        terms
            .iter()
            .map(|term| {
                (term.c.ln() + ln_monomial(m_shift + term.p, t) + term.q * t - ln_norm).exp()
            })
            .sum()
    };
    let all_decay = terms.iter().all(|t| t.q < 0.0);
    let tail_bound = |h: f64| -> Option<f64> {
        if !all_decay {
            return None;
        }
        Some(
            terms
                .iter()
                .map(|t| (t.c.ln() - ln_norm + ln_power_exp_tail(m_shift + t.p, t.q, h)).exp())
                .sum(),
        )
    };
    Ok(improper_integral(integrand, 0.0, tail_bound, cfg))
}

fn describe_numeric(out: &NumericOutcome) -> String {
    match out.converged {
        Some((v, e)) => format!("Converged({v:e} +- {e:e})"),
        None => format!(
            "Divergent(last partial {:e})",
            out.partial_sums.last().map_or(0.0, |p| p.1)
        ),
    }
}

fn describe_symbolic(s: &SymbolicVerdict) -> String {
    match s {
        SymbolicVerdict::Converged(Some(v)) => format!("Converged({v:e})"),
        SymbolicVerdict::Converged(None) => "Converged".to_string(),
        SymbolicVerdict::Divergent { rate, power } => {
            format!("Divergent(rate {rate}, power {power})")
        }
    }
}

fn combine(
    symbolic: SymbolicVerdict,
    numeric: NumericOutcome,
    cfg: &QuadConfig,
) -> Result<IntegralVerdict, QuadError> {
    let mismatch = || QuadError::NumericSymbolicMismatch {
        symbolic: describe_symbolic(&symbolic),
        numeric: describe_numeric(&numeric),
    };
    match (symbolic, numeric.converged) {
        (SymbolicVerdict::Divergent { rate, power }, None) => {
            Ok(IntegralVerdict::Divergent(DivergenceEvidence {
                dominant_rate: rate,
                dominant_power: power,
                partial_sums: numeric.partial_sums,
            }))
        }
        (SymbolicVerdict::Converged(exact), Some((num_value, num_err))) => {
            let value = exact.unwrap_or(num_value);
            let allowed = cfg.quad_tol * value.abs().max(1.0);
            let discrepancy = exact.map_or(0.0, |v| (v - num_value).abs());
            if discrepancy > allowed {
                return Err(mismatch());
            }
            let error_estimate = num_err.max(discrepancy);
            if error_estimate > allowed {
                return Err(QuadError::ToleranceNotMet {
                    achieved: error_estimate,
                    requested: allowed,
                });
            }
            Ok(IntegralVerdict::Converged {
                value,
                error_estimate,
            })
        }
        _ => Err(mismatch()),
    }
}

/// `int_0^inf t^{n-1}/(n-1)! a(t) dt`, decided by both paths.
///
/// A converged verdict carries the closed-form value and the numeric
/// discrepancy as its error estimate.
pub fn moment_integral(a: &CoefFn, n: u32, cfg: &QuadConfig) -> Result<IntegralVerdict, QuadError> {
    let symbolic = moment_integral_symbolic(a, n)?;
    let numeric = moment_integral_numeric(a, n, cfg)?;
    combine(symbolic, numeric, cfg)
}

/// `ln J(t)` where `J(t) = int_0^inf u^{n-1}/(n-1)! (u+t)^p e^{qu} du`, `q < 0`.
fn ln_shifted_moment(term: &Term, n: u32, t: f64, cfg: &QuadConfig) -> Result<f64, QuadError> {
    let nf = f64::from(n);
    let rate = -term.q;
    let p = term.p;
    if is_small_integer(p) {
        // binomial expansion of (u+t)^p, every summand positive
        let parts = (0..=p as u32).map(|j| {
            let jf = f64::from(j);
            ln_binomial(p, j) + ln_monomial(p - jf, t) + ln_gamma(nf + jf)
                - ln_fact(n)
                - (nf + jf) * rate.ln()
        });
        return Ok(log_sum_exp(parts));
    }
    if t == 0.0 {
        return Ok(ln_gamma(nf + p) - ln_fact(n) - (nf + p) * rate.ln());
    }
    let scale = t.max(1.0);
    let ln_norm = ln_fact(n);
    let q = term.q;
    let integrand = |u: f64| -> f64 {
        (ln_monomial(nf - 1.0, u) - ln_norm + p * ((u + t) / scale).ln() + q * u).exp()
    };
    let bound = |h: f64| -> Option<f64> {
        if h <= 0.0 {
            return None;
        }
        let ln = p * (1.0 + t / h).ln() - p * scale.ln() - ln_norm
            + ln_power_exp_tail(nf - 1.0 + p, q, h);
        Some(ln.exp())
    };
    let out = improper_integral(integrand, 0.0, bound, cfg);
    match out.converged {
        Some((v, e)) if e <= cfg.quad_tol * v => Ok(p * scale.ln() + v.ln()),
        Some((v, e)) => Err(QuadError::ToleranceNotMet {
            achieved: e,
            requested: cfg.quad_tol * v,
        }),
        None => Err(QuadError::NumericSymbolicMismatch {
            symbolic: "Converged".into(),
            numeric: describe_numeric(&out),
        }),
    }
}

/// `ln A(t)` where `A(t) = int_t^inf (tau-t)^{n-1}/(n-1)! a(tau) dtau`.
///
/// Returns `-inf` for the zero function.
pub fn ln_tail_kernel(a: &CoefFn, n: u32, t: f64, cfg: &QuadConfig) -> Result<f64, QuadError> {
    check_order(n)?;
    if a.active_terms().any(|term| term.q >= 0.0) {
        return Err(QuadError::TailDiverges);
    }
    let mut parts = Vec::new();
    for term in a.active_terms() {
        parts.push(term.c.ln() + term.q * t + ln_shifted_moment(term, n, t, cfg)?);
    }
    Ok(log_sum_exp(parts))
}

/// `A(t) = int_t^inf (tau-t)^{n-1}/(n-1)! a(tau) dtau` for `t >= 0`.
///
/// Integer powers use the exact binomial/gamma expansion; fractional
/// powers fall back to adaptive quadrature in `u = tau - t` with an
/// analytic gamma bound on the remainder.
pub fn tail_kernel_integral(
    a: &CoefFn,
    n: u32,
    t: f64,
    cfg: &QuadConfig,
) -> Result<f64, QuadError> {
    assert!(t >= 0.0, "tail kernel evaluated at negative time {t}");
    Ok(ln_tail_kernel(a, n, t, cfg)?.exp())
}

/// Exact verdict for the nested criterion integral.
///
/// Uses `A(t) ~ c* t^{p*} e^{q* t} / (-q*)^{n_inner}` from the dominant
/// inner term.
pub fn nested_criterion_symbolic(
    a_outer: &CoefFn,
    n_outer: u32,
    a_inner: &CoefFn,
    n_inner: u32,
    lambda: f64,
) -> Result<SymbolicVerdict, QuadError> {
    check_order(n_outer)?;
    check_order(n_inner)?;
    if a_inner.active_terms().any(|t| t.q >= 0.0) {
        return Err(QuadError::TailDiverges);
    }
    let Some(dom) = a_inner.dominant_term() else {
        return Ok(SymbolicVerdict::Converged(Some(0.0)));
    };
    let mut worst: Option<(f64, f64)> = None;
    for term in a_outer.active_terms() {
        let rate = term.q + lambda * dom.q;
        let power = f64::from(n_outer) - 1.0 + term.p + lambda * dom.p;
        worst = Some(match worst {
            Some(best) if best.0 > rate || (best.0 == rate && best.1 >= power) => best,
            _ => (rate, power),
        });
    }
    Ok(match worst {
        None => SymbolicVerdict::Converged(Some(0.0)),
        Some((rate, power)) if rate > 0.0 || (rate == 0.0 && power >= -1.0) => {
            SymbolicVerdict::Divergent { rate, power }
        }
        Some(_) => SymbolicVerdict::Converged(None),
    })
}

/// Numeric scan of
/// `int_lower^inf (s-lower)^{n_outer-1}/(n_outer-1)! a_outer(s) A(s)^lambda ds`
/// with `A` the tail kernel of `(a_inner, n_inner)`.
pub fn nested_tail_integral(
    a_outer: &CoefFn,
    n_outer: u32,
    a_inner: &CoefFn,
    n_inner: u32,
    lambda: f64,
    lower: f64,
    cfg: &QuadConfig,
) -> Result<NumericOutcome, QuadError> {
    check_order(n_outer)?;
    check_order(n_inner)?;
    cfg.validate()?;
    assert!(lambda > 0.0 && lower >= 0.0);
    if a_inner.active_terms().any(|t| t.q >= 0.0) {
        return Err(QuadError::TailDiverges);
    }
    if a_outer.is_zero() || a_inner.is_zero() {
        return Ok(NumericOutcome {
            converged: Some((0.0, 0.0)),
            partial_sums: vec![(lower, 0.0)],
        });
    }

    let failure: RefCell<Option<QuadError>> = RefCell::new(None);
    let ln_norm = ln_fact(n_outer);
    let shift = f64::from(n_outer) - 1.0;
    let integrand = |s: f64| -> f64 {
        let ln_a = match ln_tail_kernel(a_inner, n_inner, s, cfg) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        (ln_monomial(shift, s - lower) - ln_norm + a_outer.ln_eval(s) + lambda * ln_a).exp()
    };

    let inner: Vec<Term> = a_inner.active_terms().copied().collect();
    let outer: Vec<Term> = a_outer.active_terms().copied().collect();
    let ni = f64::from(n_inner);
    let ln_mult = (lambda - 1.0).max(0.0) * (inner.len() as f64).ln();
    let tail_bound = |h: f64| -> Option<f64> {
        if h <= 0.0 {
            return None;
        }
        // A(s) <= sum_j c_j s^{p_j} e^{q_j s} / (-q_j - p_j/h)^{n_inner} for s >= h
        let mut total = 0.0;
        for tj in &inner {
            let slack = -tj.q - tj.p / h;
            if slack <= 0.0 {
                return None;
            }
            let ln_bj = tj.c.ln() - ni * slack.ln();
            for to in &outer {
                let rate = to.q + lambda * tj.q;
                if rate >= 0.0 {
                    return None;
                }
                let m = shift + to.p + lambda * tj.p;
                total += (ln_mult + to.c.ln() - ln_norm
                    + lambda * ln_bj
                    + ln_power_exp_tail(m, rate, h))
                .exp();
            }
        }
        Some(total)
    };

    let out = improper_integral(integrand, lower, tail_bound, cfg);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Numeric path of the nested criterion integral (lower limit 0).
pub fn nested_criterion_numeric(
    a_outer: &CoefFn,
    n_outer: u32,
    a_inner: &CoefFn,
    n_inner: u32,
    lambda: f64,
    cfg: &QuadConfig,
) -> Result<NumericOutcome, QuadError> {
    nested_tail_integral(a_outer, n_outer, a_inner, n_inner, lambda, 0.0, cfg)
}

/// `int_0^inf t^{n_o-1}/(n_o-1)! a_o(t) [A(t)]^lambda dt` with `A` the tail
/// kernel of `(a_inner, n_inner)`. The symbolic path fixes the verdict;
/// the converged value comes from the numeric path.
pub fn nested_criterion_integral(
    a_outer: &CoefFn,
    n_outer: u32,
    a_inner: &CoefFn,
    n_inner: u32,
    lambda: f64,
    cfg: &QuadConfig,
) -> Result<IntegralVerdict, QuadError> {
    let symbolic = nested_criterion_symbolic(a_outer, n_outer, a_inner, n_inner, lambda)?;
    let numeric = nested_criterion_numeric(a_outer, n_outer, a_inner, n_inner, lambda, cfg)?;
    combine(symbolic, numeric, cfg)
}
