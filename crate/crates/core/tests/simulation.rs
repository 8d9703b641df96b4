use std::f64::consts::{FRAC_PI_2, PI};

use oscrit::sim::{
    integrate, ode_residuals, residual_tolerance, Classification, InitialState, SimConfig, Status,
};
use oscrit::{CoefFn, SystemSpec};

fn harmonic(t_end: f64) -> oscrit::sim::Trajectory {
    let cfg = SimConfig {
        t_end,
        ..SimConfig::default()
    };
    let init = InitialState::new(0.0, vec![1.0], vec![0.0]);
    integrate(&SystemSpec::harmonic_pair(), &init, &cfg).unwrap()
}

#[test]
fn harmonic_zeros_sit_on_quarter_periods() {
    let traj = harmonic(20.0);
    assert_eq!(traj.status, Status::Completed);
    // x1 = cos t, x2 = -sin t
    assert_eq!(traj.zeros1.len(), 6);
    for (k, z) in traj.zeros1.iter().enumerate() {
        let want = FRAC_PI_2 + k as f64 * PI;
        assert!((z - want).abs() <= 1e-8, "x1 zero {z} vs {want}");
    }
    for z in &traj.zeros2 {
        let k = (z / PI).round();
        assert!(k >= 1.0);
        assert!((z - k * PI).abs() <= 1e-8, "x2 zero {z}");
    }
    assert_eq!(traj.zeros2.len(), 6);
    assert_eq!(traj.classification, Classification::Oscillating);
}

#[test]
fn zeros_are_bracketed_by_sign_changes() {
    let traj = harmonic(12.0);
    for (i, zeros) in [(0usize, &traj.zeros1), (1, &traj.zeros2)] {
        for &z in zeros {
            let before = traj.component(i, z - 1e-3).unwrap();
            let after = traj.component(i, z + 1e-3).unwrap();
            assert!(before * after < 0.0, "component {i} at {z}");
        }
    }
}

#[test]
fn dense_output_tracks_exact_solution() {
    let traj = harmonic(10.0);
    for k in 0..200 {
        let t = 10.0 * k as f64 / 199.0;
        let x1 = traj.component(0, t).unwrap();
        let x2 = traj.component(1, t).unwrap();
        assert!((x1 - t.cos()).abs() < 1e-8);
        assert!((x2 + t.sin()).abs() < 1e-8);
    }
}

#[test]
fn tighter_tolerance_shrinks_error() {
    let spec = SystemSpec::harmonic_pair();
    let init = InitialState::new(0.0, vec![1.0], vec![0.0]);
    let err = |rtol: f64| {
        let cfg = SimConfig {
            t_end: 10.0,
            rtol,
            atol: rtol * 1e-2,
            ..SimConfig::default()
        };
        let traj = integrate(&spec, &init, &cfg).unwrap();
        (traj.component(0, 10.0).unwrap() - 10f64.cos()).abs()
    };
    let coarse = err(1e-6);
    let fine = err(1e-10);
    assert!(fine < coarse / 100.0, "{fine} vs {coarse}");
}

#[test]
fn example_one_zero_counts_match_tight_reference() {
    let spec = SystemSpec::example_case_1();
    let init = InitialState::new(0.0, vec![1.0, 0.0], vec![1.0, 0.0]);
    let run = integrate(&spec, &init, &SimConfig::default()).unwrap();
    let reference = integrate(
        &spec,
        &init,
        &SimConfig {
            rtol: 1e-12,
            atol: 1e-14,
            ..SimConfig::default()
        },
    )
    .unwrap();
    let Status::BlowUp(t_run) = run.status else {
        panic!("expected blow-up, got {:?}", run.status);
    };
    let Status::BlowUp(t_ref) = reference.status else {
        panic!("expected blow-up, got {:?}", reference.status);
    };
    assert!((t_run - 2.41304).abs() < 1e-4);
    assert!((t_run - t_ref).abs() < 1e-6);
    // zeros accumulate at the blow-up time; compare those well before it
    let early = |z: &[f64]| z.iter().filter(|&&t| t < 2.4).count();
    assert_eq!(early(&run.zeros1), early(&reference.zeros1));
    assert_eq!(early(&run.zeros2), early(&reference.zeros2));
    for (a, b) in run.zeros1.iter().zip(&reference.zeros1).take(2) {
        assert!((a - b).abs() < 1e-7);
    }
    assert_eq!(run.classification, Classification::Indeterminate);
}

#[test]
fn residuals_pass_on_regression_trajectories() {
    let cfg = SimConfig::default();
    let tol = residual_tolerance(&cfg);
    let cases = [
        (
            SystemSpec::harmonic_pair(),
            InitialState::new(0.0, vec![1.0], vec![0.0]),
        ),
        (
            SystemSpec::example_case_1(),
            InitialState::new(0.0, vec![1.0, 0.0], vec![1.0, 0.0]),
        ),
        (
            SystemSpec::example_case_2(),
            InitialState::new(0.0, vec![1.0, 0.0], vec![1.0, 0.0]),
        ),
        (
            SystemSpec::nonoscillating_example(),
            InitialState::new(0.0, vec![0.5, -0.2], vec![0.1, 0.3]),
        ),
    ];
    for (spec, init) in cases {
        let traj = integrate(&spec, &init, &cfg).unwrap();
        let (r1, r2) = ode_residuals(&spec, &traj, 200).unwrap();
        assert!(r1 <= tol && r2 <= tol, "{r1} {r2} > {tol}");
    }
}

#[test]
fn zero_right_hand_side_gives_polynomials() {
    let spec = SystemSpec {
        a1: CoefFn::zero(),
        a2: CoefFn::zero(),
        ..SystemSpec::example_case_1()
    };
    let init = InitialState::new(0.0, vec![1.0, 2.0], vec![-3.0, 1.0]);
    let traj = integrate(&spec, &init, &SimConfig::default()).unwrap();
    assert_eq!(traj.zeros1.len(), 0);
    assert_eq!(traj.zeros2.len(), 1);
    assert!((traj.zeros2[0] - 3.0).abs() < 1e-9);
    assert_eq!(traj.classification, Classification::NonOscillating);
}

#[test]
fn all_zero_state_is_improper() {
    let init = InitialState::new(0.0, vec![0.0, 0.0], vec![0.0, 0.0]);
    assert!(init.is_trivial());
    let traj = integrate(&SystemSpec::example_case_1(), &init, &SimConfig::default()).unwrap();
    assert_eq!(traj.classification, Classification::Improper);
}

#[test]
fn runs_are_deterministic() {
    let spec = SystemSpec::example_case_2();
    let init = InitialState::new(0.5, vec![0.3, -0.1], vec![0.7, 0.2]);
    let a = integrate(&spec, &init, &SimConfig::default()).unwrap();
    let b = integrate(&spec, &init, &SimConfig::default()).unwrap();
    assert_eq!(a.zeros1, b.zeros1);
    assert_eq!(a.zeros2, b.zeros2);
    assert_eq!(a.status, b.status);
    assert_eq!(a.samples.len(), b.samples.len());
}
