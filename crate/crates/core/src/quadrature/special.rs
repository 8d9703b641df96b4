//! Gamma-function helpers for closed forms and analytic tail bounds.

use statrs::function::gamma::{checked_gamma_ur, ln_gamma};

pub fn ln_factorial(k: u32) -> f64 {
    ln_gamma(f64::from(k) + 1.0)
}

pub fn ln_binomial(n: f64, k: u32) -> f64 {
    let k = f64::from(k);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `ln Gamma(a, x)` for `a > 0`, `x >= 0`.
pub fn ln_upper_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return ln_gamma(a);
    }
    match checked_gamma_ur(a, x) {
        Ok(q) if q > 0.0 => q.ln() + ln_gamma(a),
        // underflow of the regularized value; the tail is below any useful scale
        _ => f64::NEG_INFINITY,
    }
}

/// `ln int_h^inf s^m e^{q s} ds` for `q < 0`, `m > -1`, `h >= 0`.
pub fn ln_power_exp_tail(m: f64, q: f64, h: f64) -> f64 {
    debug_assert!(q < 0.0 && m > -1.0);
    let rate = -q;
    ln_upper_gamma(m + 1.0, rate * h) - (m + 1.0) * rate.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_range_tail_is_gamma() {
        // int_0^inf s^2 e^{-s} ds = 2
        assert!((ln_power_exp_tail(2.0, -1.0, 0.0).exp() - 2.0).abs() < 1e-13);
        // int_0^inf s e^{-3s} ds = 1/9
        assert!((ln_power_exp_tail(1.0, -3.0, 0.0).exp() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn partial_tail_matches_elementary_form() {
        // int_h^inf s e^{-s} ds = (h + 1) e^{-h}
        for &h in &[0.5, 2.0, 10.0, 40.0] {
            let got = ln_power_exp_tail(1.0, -1.0, h).exp();
            let want = (h + 1.0) * (-h as f64).exp();
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "h={h} got={got} want={want}"
            );
        }
    }

    #[test]
    fn binomials() {
        assert!((ln_binomial(5.0, 2).exp() - 10.0).abs() < 1e-11);
        assert!((ln_factorial(4).exp() - 24.0).abs() < 1e-11);
    }
}
