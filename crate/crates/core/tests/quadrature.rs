use oscrit::criteria::{classify_oscillation, Verdict};
use oscrit::quadrature::{
    moment_integral, moment_integral_numeric, moment_integral_symbolic, nested_criterion_integral,
    tail_kernel_integral, QuadConfig,
};
use oscrit::{CoefFn, SystemSpec};
use proptest::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

/// `c Gamma(n+p) / ((n-1)! (-q)^{n+p})`.
fn gamma_oracle(c: f64, p: f64, q: f64, n: u32) -> f64 {
    let a = f64::from(n) + p;
    let fact = gamma(f64::from(n));
    (c.ln() + ln_gamma(a) - fact.ln() - a * (-q).ln()).exp()
}

fn term(c: f64, p: f64, q: f64) -> CoefFn {
    CoefFn::from_triples(&[(c, p, q)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn single_term_moment_matches_gamma(
        c in 0.1f64..10.0,
        p in 0.0f64..4.0,
        q in -3.0f64..-0.2,
        n in 1u32..5,
    ) {
        let a = term(c, p, q);
        let quad = QuadConfig::default();
        let want = gamma_oracle(c, p, q, n);
        let got = moment_integral(&a, n, &quad).unwrap().value().unwrap();
        prop_assert!(((got - want) / want).abs() <= 1e-8, "{got} vs {want}");
        let (numeric, _) = moment_integral_numeric(&a, n, &quad).unwrap().converged.unwrap();
        prop_assert!(((numeric - want) / want).abs() <= 1e-8, "numeric {numeric} vs {want}");
    }

    #[test]
    fn tail_kernel_decreases(
        p in 0.0f64..3.0,
        q in -2.0f64..-0.3,
        n in 1u32..4,
        t in 0.0f64..10.0,
        dt in 0.1f64..5.0,
    ) {
        let a = term(1.0, p, q);
        let quad = QuadConfig::default();
        let near = tail_kernel_integral(&a, n, t, &quad).unwrap();
        let far = tail_kernel_integral(&a, n, t + dt, &quad).unwrap();
        prop_assert!(far < near);
        prop_assert!(far > 0.0);
    }

    #[test]
    fn tail_kernel_at_zero_is_moment(
        p in 0.0f64..3.0,
        q in -2.0f64..-0.3,
        n in 1u32..4,
    ) {
        let a = term(2.0, p, q);
        let quad = QuadConfig::default();
        let a0 = tail_kernel_integral(&a, n, 0.0, &quad).unwrap();
        let want = gamma_oracle(2.0, p, q, n);
        prop_assert!(((a0 - want) / want).abs() <= 1e-8);
    }

    #[test]
    fn verdict_invariant_under_positive_scaling(
        s1 in 0.01f64..100.0,
        s2 in 0.01f64..100.0,
        case in 0usize..3,
    ) {
        let spec = [
            SystemSpec::example_case_1(),
            SystemSpec::example_case_2(),
            SystemSpec::nonoscillating_example(),
        ][case].clone();
        let quad = QuadConfig::default();
        let base = classify_oscillation(&spec, &quad).unwrap();
        let scaled = classify_oscillation(&spec.scaled(s1, s2), &quad).unwrap();
        prop_assert_eq!(base.verdict, scaled.verdict);
        prop_assert_eq!(base.branch, scaled.branch);
    }
}

#[test]
fn symbolic_and_numeric_verdicts_agree_on_grid() {
    let quad = QuadConfig::default();
    for n in 1..=3 {
        for &p in &[0.0, 0.5, 1.0, 2.0, 3.5] {
            for &q in &[-2.0, -0.5, -0.05, 0.0, 0.05, 1.0] {
                let a = term(1.0, p, q);
                let diverges = q >= 0.0;
                let sym = moment_integral_symbolic(&a, n).unwrap();
                let num = moment_integral_numeric(&a, n, &quad).unwrap();
                assert_eq!(sym.is_divergent(), diverges, "symbolic n={n} p={p} q={q}");
                assert_eq!(num.is_divergent(), diverges, "numeric n={n} p={p} q={q}");
                let full = moment_integral(&a, n, &quad).unwrap();
                assert_eq!(full.is_divergent(), diverges);
            }
        }
    }
}

#[test]
fn nested_verdicts_follow_dominant_rate() {
    // outer t^p e^{qo t}, inner e^{qi t}: A(s) ~ e^{qi s}, so the nested
    // integrand decays like s^{n-1+p} e^{(qo + lambda qi) s}
    let quad = QuadConfig::default();
    for &(qo, qi, lambda) in &[
        (2.0, -1.0, 3.0),
        (2.0, -1.0, 2.0),
        (3.0, -1.0, 3.0),
        (0.0, -0.5, 1.5),
        (1.0, -0.25, 2.0),
    ] {
        let rate: f64 = qo + lambda * qi;
        let outer = term(1.0, 1.0, qo);
        let inner = term(1.0, 0.0, qi);
        let v = nested_criterion_integral(&outer, 2, &inner, 2, lambda, &quad).unwrap();
        assert_eq!(
            v.is_divergent(),
            rate >= 0.0,
            "qo={qo} qi={qi} lambda={lambda}"
        );
    }
}

#[test]
fn swapping_components_preserves_verdict() {
    let quad = QuadConfig::default();
    for spec in [
        SystemSpec::example_case_1(),
        SystemSpec::example_case_2(),
        SystemSpec::nonoscillating_example(),
    ] {
        let a = classify_oscillation(&spec, &quad).unwrap();
        let b = classify_oscillation(&spec.swapped(), &quad).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.k.is_some(), b.k.is_some());
    }
}

#[test]
fn example_verdicts() {
    let quad = QuadConfig::default();
    let v = |s: SystemSpec| classify_oscillation(&s, &quad).unwrap().verdict;
    assert_eq!(v(SystemSpec::example_case_1()), Verdict::AllOscillate);
    assert_eq!(v(SystemSpec::example_case_2()), Verdict::AllOscillate);
    assert_eq!(
        v(SystemSpec::nonoscillating_example()),
        Verdict::NonOscillatingExists
    );
}
