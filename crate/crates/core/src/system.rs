//! The coupled system `x1^(n1) = f1(t, x2)`, `x2^(n2) = f2(t, x1)` with
//! power-law nonlinearities
//! `f1 = a1(t) |x2|^l1 sgn x2` and `f2 = -a2(t) |x1|^l2 sgn x1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coef::CoefFn;

/// Which envelope inequality the nonlinearities are asserted to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Envelope {
    /// Only the lower bound `(-1)^{i-1} f_i sgn x >= a_i |x|^l_i`.
    OneSidedLower,
    /// Lower and upper bound with constant `M`; the induced power laws meet it with `M = 1`.
    TwoSidedExactPowerLaw,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("order n{index} must be >= 1")]
    ZeroOrder { index: usize },
    #[error("exponent lambda{index} = {value} must be finite")]
    NonFiniteExponent { index: usize, value: f64 },
    #[error("envelope constant M = {0} must be finite")]
    NonFiniteM(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n1: u32,
    pub n2: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a1: CoefFn,
    pub a2: CoefFn,
    pub envelope: Envelope,
    #[serde(rename = "M")]
    pub m: f64,
}

/// `|x|^lambda sgn x`, zero at the origin.
pub fn signed_power(x: f64, lambda: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(lambda)
    }
}

impl SystemSpec {
    /// Builds a spec after structural checks. Criteria hypotheses such as
    /// `lambda1 * lambda2 > 1` are not enforced here; see
    /// [`crate::criteria::validate_hypotheses`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n1: u32,
        n2: u32,
        lambda1: f64,
        lambda2: f64,
        a1: CoefFn,
        a2: CoefFn,
        envelope: Envelope,
        m: f64,
    ) -> Result<Self, SpecError> {
        let spec = Self {
            n1,
            n2,
            lambda1,
            lambda2,
            a1,
            a2,
            envelope,
            m,
        };
        spec.check_structure()?;
        Ok(spec)
    }

    pub fn check_structure(&self) -> Result<(), SpecError> {
        if self.n1 == 0 {
            return Err(SpecError::ZeroOrder { index: 1 });
        }
        if self.n2 == 0 {
            return Err(SpecError::ZeroOrder { index: 2 });
        }
        if !self.lambda1.is_finite() {
            return Err(SpecError::NonFiniteExponent {
                index: 1,
                value: self.lambda1,
            });
        }
        if !self.lambda2.is_finite() {
            return Err(SpecError::NonFiniteExponent {
                index: 2,
                value: self.lambda2,
            });
        }
        if !self.m.is_finite() {
            return Err(SpecError::NonFiniteM(self.m));
        }
        Ok(())
    }

    /// `f1(t, x2) = a1(t) |x2|^lambda1 sgn x2`.
    pub fn f1(&self, t: f64, x2: f64) -> f64 {
        if x2 == 0.0 {
            return 0.0;
        }
        self.a1.eval(t) * signed_power(x2, self.lambda1)
    }

    /// `f2(t, x1) = -a2(t) |x1|^lambda2 sgn x1`.
    pub fn f2(&self, t: f64, x1: f64) -> f64 {
        if x1 == 0.0 {
            return 0.0;
        }
        -self.a2.eval(t) * signed_power(x1, self.lambda2)
    }

    pub fn dimension(&self) -> usize {
        (self.n1 + self.n2) as usize
    }

    /// Exchanges the roles of the two components. The sign pattern stays
    /// attached to the second equation, so the swapped system is again of
    /// the form handled here.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            a1: self.a2.clone(),
            a2: self.a1.clone(),
            envelope: self.envelope,
            m: self.m,
        }
    }

    /// Both coefficient functions multiplied by positive constants.
    pub fn scaled(&self, s1: f64, s2: f64) -> Self {
        Self {
            a1: self.a1.scaled(s1),
            a2: self.a2.scaled(s2),
            ..self.clone()
        }
    }

    /// `x1'' = t^2 |x2|^2 sgn x2`, `x2'' = -t^4 |x1|^3 sgn x1`.
    pub fn example_case_1() -> Self {
        Self::example_with(&[(1.0, 2.0, 0.0)], &[(1.0, 4.0, 0.0)])
    }

    /// Same exponents with `a1 = t^2 e^{2t}`, `a2 = e^{-t}`.
    pub fn example_case_2() -> Self {
        Self::example_with(&[(1.0, 2.0, 2.0)], &[(1.0, 0.0, -1.0)])
    }

    /// `a1 = t`, `a2 = e^{-3t}`: both nested quantities finite, so a
    /// non-oscillating solution exists.
    pub fn nonoscillating_example() -> Self {
        Self::example_with(&[(1.0, 1.0, 0.0)], &[(1.0, 0.0, -3.0)])
    }

    fn example_with(a1: &[(f64, f64, f64)], a2: &[(f64, f64, f64)]) -> Self {
        Self {
            n1: 2,
            n2: 2,
            lambda1: 2.0,
            lambda2: 3.0,
            a1: CoefFn::from_triples(a1).expect("valid coefficients"),
            a2: CoefFn::from_triples(a2).expect("valid coefficients"),
            envelope: Envelope::TwoSidedExactPowerLaw,
            m: 1.0,
        }
    }

    /// `x1' = x2`, `x2' = -x1`.
    pub fn harmonic_pair() -> Self {
        Self {
            n1: 1,
            n2: 1,
            lambda1: 1.0,
            lambda2: 1.0,
            a1: CoefFn::from_triples(&[(1.0, 0.0, 0.0)]).expect("valid"),
            a2: CoefFn::from_triples(&[(1.0, 0.0, 0.0)]).expect("valid"),
            envelope: Envelope::TwoSidedExactPowerLaw,
            m: 1.0,
        }
    }
}
