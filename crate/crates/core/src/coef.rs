//! Nonnegative coefficient functions built from monomial-exponential terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One term `c * t^p * exp(q * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub c: f64,
    pub p: f64,
    pub q: f64,
}

impl Term {
    pub fn new(c: f64, p: f64, q: f64) -> Self {
        Self { c, p, q }
    }

    /// Natural log of the term at `t`, `-inf` when it vanishes.
    pub fn ln_eval(&self, t: f64) -> f64 {
        if self.c == 0.0 {
            return f64::NEG_INFINITY;
        }
        let power = if self.p == 0.0 {
            0.0
        } else if t == 0.0 {
            return f64::NEG_INFINITY;
        } else {
            self.p * t.ln()
        };
        self.c.ln() + power + self.q * t
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }

    /// A term with `c == 0` contributes nothing and is ignored by every verdict.
    pub fn is_active(&self) -> bool {
        self.c > 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefError {
    #[error("term {index}: coefficient c = {value} must be finite and >= 0")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("term {index}: power p = {value} must be finite and >= 0")]
    NegativePower { index: usize, value: f64 },
    #[error("term {index}: rate q = {value} must be finite")]
    NonFiniteRate { index: usize, value: f64 },
}

/// `a(t) = sum_k c_k t^{p_k} e^{q_k t}` with every `c_k >= 0` and `p_k >= 0`,
/// so `a` is nonnegative and locally integrable on `[0, inf)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct CoefFn {
    terms: Vec<Term>,
}

impl TryFrom<Vec<Term>> for CoefFn {
    type Error = CoefError;

    fn try_from(terms: Vec<Term>) -> Result<Self, Self::Error> {
        Self::new(terms)
    }
}

impl From<CoefFn> for Vec<Term> {
    fn from(a: CoefFn) -> Self {
        a.terms
    }
}

impl CoefFn {
    pub fn new(terms: Vec<Term>) -> Result<Self, CoefError> {
        for (index, t) in terms.iter().enumerate() {
            if !(t.c.is_finite() && t.c >= 0.0) {
                return Err(CoefError::NegativeCoefficient { index, value: t.c });
            }
            if !(t.p.is_finite() && t.p >= 0.0) {
                return Err(CoefError::NegativePower { index, value: t.p });
            }
            if !t.q.is_finite() {
                return Err(CoefError::NonFiniteRate { index, value: t.q });
            }
        }
        Ok(Self { terms })
    }

    /// The identically zero function.
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// Convenience constructor from `(c, p, q)` triples.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self, CoefError> {
        Self::new(
            triples
                .iter()
                .map(|&(c, p, q)| Term::new(c, p, q))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn active_terms(&self) -> impl Iterator<Item = &Term> + '_ {
        self.terms.iter().filter(|t| t.is_active())
    }

    pub fn is_zero(&self) -> bool {
        self.active_terms().next().is_none()
    }

    /// Pointwise value; `0^0` is taken as 1.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.active_terms().map(|term| term.eval(t)).sum()
    }

    /// `ln a(t)` computed without overflow, `-inf` where `a(t) = 0`.
    pub fn ln_eval(&self, t: f64) -> f64 {
        log_sum_exp(self.active_terms().map(|term| term.ln_eval(t)))
    }

    /// Multiplies every coefficient by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0 && factor.is_finite());
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(t.c * factor, t.p, t.q))
                .collect(),
        }
    }

    /// The term that dominates as `t -> inf`: largest rate, then largest power.
    pub fn dominant_term(&self) -> Option<Term> {
        self.active_terms().copied().reduce(|best, t| {
            if t.q > best.q || (t.q == best.q && t.p > best.p) {
                t
            } else {
                best
            }
        })
    }
}

/// `ln(sum exp(x_i))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
