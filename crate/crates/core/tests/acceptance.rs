//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use oscrit::cli::reproduce_example;
use oscrit::export::write_trajectory_csv;
use oscrit::fixed_point::{
    iterate_to_fixed_point, sign_changes, verify_solution, FixedPointConfig,
};
use oscrit::quadrature::{
    moment_integral, moment_integral_numeric, moment_integral_symbolic, QuadConfig,
};
use oscrit::sim::{
    integrate, ode_residuals, residual_tolerance, Classification, InitialState, SimConfig,
};
use oscrit::{CoefFn, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn example_one() -> Check {
    let out = reproduce_example(1, None);
    let r = &out.report;
    let c = &r["criteria"];
    ensure(
        c["verdict"] == "AllOscillate",
        format!("verdict {}", c["verdict"]),
    )?;
    ensure(c["I1"]["kind"] == "Divergent", "I1 not divergent")?;
    ensure(c["I2"]["kind"] == "Divergent", "I2 not divergent")?;
    Ok(format!(
        "verdict AllOscillate, I1 and I2 Divergent, simulation {}",
        r["simulation"]["classification"]
    ))
}

fn example_two() -> Check {
    let out = reproduce_example(2, None);
    let r = &out.report;
    let c = &r["criteria"];
    ensure(
        c["verdict"] == "AllOscillate",
        format!("verdict {}", c["verdict"]),
    )?;
    ensure(
        c["branch"] == "NestedDiverges",
        format!("branch {}", c["branch"]),
    )?;
    ensure(
        c["J1"]["kind"] == "Divergent",
        "nested integral not divergent",
    )?;
    let inner = r["inner_value"].as_f64().ok_or("no inner value")?;
    ensure((inner - 2.0).abs() <= 1e-6, format!("inner value {inner}"))?;
    Ok(format!(
        "nested branch, J1 Divergent, inner value {inner:.12}"
    ))
}

fn quadrature_oracles() -> Check {
    let quad = QuadConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let c: f64 = rng.random_range(0.1..10.0);
        let p = rng.random_range(0.0..4.0);
        let q: f64 = -rng.random_range(0.2..3.0);
        let n: u32 = rng.random_range(1..=4);
        let a = f64::from(n) + p;
        let want = (c.ln() + ln_gamma(a) - ln_gamma(f64::from(n)) - a * (-q).ln()).exp();
        let coef = CoefFn::from_triples(&[(c, p, q)]).unwrap();
        let got = moment_integral(&coef, n, &quad)
            .map_err(|e| e.to_string())?
            .value()
            .ok_or("divergent verdict for decaying term")?;
        let (numeric, _) = moment_integral_numeric(&coef, n, &quad)
            .map_err(|e| e.to_string())?
            .converged
            .ok_or("numeric path diverged")?;
        worst = worst
            .max(((got - want) / want).abs())
            .max(((numeric - want) / want).abs());
    }
    ensure(worst <= 1e-8, format!("worst relative error {worst:e}"))?;
    let mut cells = 0;
    for n in 1..=3 {
        for p in [0.0, 0.5, 1.0, 2.0, 3.5] {
            for q in [-2.0, -0.5, -0.05, 0.0, 0.05, 1.0] {
                let coef = CoefFn::from_triples(&[(1.0, p, q)]).unwrap();
                let sym = moment_integral_symbolic(&coef, n).map_err(|e| e.to_string())?;
                let num = moment_integral_numeric(&coef, n, &quad).map_err(|e| e.to_string())?;
                ensure(
                    sym.is_divergent() == num.is_divergent() && sym.is_divergent() == (q >= 0.0),
                    format!("verdicts disagree at n={n} p={p} q={q}"),
                )?;
                cells += 1;
            }
        }
    }
    Ok(format!(
        "200 gamma oracles, worst rel err {worst:.1e}; {cells} grid cells agree"
    ))
}

fn necessity_construction() -> Check {
    let spec = SystemSpec::nonoscillating_example();
    let cfg = FixedPointConfig::default();
    let r =
        iterate_to_fixed_point(&spec, &QuadConfig::default(), &cfg).map_err(|e| e.to_string())?;
    let p = r.p.ok_or("no P")?;
    ensure((p * 8748.0 - 1.0).abs() <= 1e-8, format!("P = {p}"))?;
    let k1 = 8748f64.powf(0.2);
    ensure((r.k1 - k1).abs() <= 1e-12, format!("K1 = {}", r.k1))?;
    ensure(
        r.final_delta <= 1e-8,
        format!("final_delta {:e}", r.final_delta),
    )?;
    ensure(r.t.len() >= 4000, format!("{} grid points", r.t.len()))?;
    let (r1, r2) = (r.residuals.ode_residual_1, r.residuals.ode_residual_2);
    ensure(r1 <= 1e-5 && r2 <= 1e-5, format!("residuals {r1:e} {r2:e}"))?;
    ensure(sign_changes(&r.x1_grid) == 0, "x1 changes sign")?;
    let limit = (r.x1_grid.last().unwrap() - r.k1).abs();
    ensure(
        limit <= r.tail_bound_x1,
        format!("|x1(t_max) - K1| = {limit:e} > {:e}", r.tail_bound_x1),
    )?;
    verify_solution(&r, &spec, &cfg).map_err(|e| e.to_string())?;
    Ok(format!(
        "P*8748-1 = {:.1e}, {} iterations, final_delta {:.1e}, residuals {r1:.1e}/{r2:.1e}",
        p * 8748.0 - 1.0,
        r.iterations,
        r.final_delta
    ))
}

fn cross_validation() -> Check {
    let spec = SystemSpec::nonoscillating_example();
    let r = iterate_to_fixed_point(&spec, &QuadConfig::default(), &FixedPointConfig::default())
        .map_err(|e| e.to_string())?;
    let long = SimConfig {
        t_end: 20.0,
        ..SimConfig::default()
    };
    let traj = integrate(&spec, &r.initial_state(), &long).map_err(|e| e.to_string())?;
    ensure(
        traj.classification == Classification::NonOscillating,
        format!("constructed data classified {:?}", traj.classification),
    )?;

    let example = SystemSpec::example_case_1();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut indeterminate = 0;
    let states = 24;
    for _ in 0..states {
        let mut draw = || {
            (0..2)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        };
        let init = InitialState::new(0.0, draw(), draw());
        let traj = integrate(&example, &init, &SimConfig::default()).map_err(|e| e.to_string())?;
        match traj.classification {
            Classification::NonOscillating | Classification::WeaklyOscillating => {
                return Err(format!("{:?} from {init:?}", traj.classification));
            }
            Classification::Indeterminate => indeterminate += 1,
            _ => {}
        }
    }
    Ok(format!(
        "constructed data NonOscillating; {states} random states, none non/weakly oscillating ({indeterminate} Indeterminate)"
    ))
}

fn simulator_correctness() -> Check {
    let cfg = SimConfig {
        t_end: 20.0,
        ..SimConfig::default()
    };
    let init = InitialState::new(0.0, vec![1.0], vec![0.0]);
    let harmonic =
        integrate(&SystemSpec::harmonic_pair(), &init, &cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for &z in harmonic.zeros1.iter().chain(&harmonic.zeros2) {
        let k = (z / FRAC_PI_2).round();
        worst = worst.max((z - k * FRAC_PI_2).abs());
    }
    ensure(
        harmonic.zeros1.len() + harmonic.zeros2.len() == 12,
        "wrong zero count",
    )?;
    ensure(worst <= 1e-8, format!("zero error {worst:e}"))?;

    let default = SimConfig::default();
    let tol = residual_tolerance(&default);
    let regression = [
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
    let mut worst_res = 0.0_f64;
    let mut csv_ok = true;
    for (spec, init) in &regression {
        let traj = integrate(spec, init, &default).map_err(|e| e.to_string())?;
        let (r1, r2) = ode_residuals(spec, &traj, 200).ok_or("no residuals")?;
        worst_res = worst_res.max(r1).max(r2);

        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).map_err(|e| e.to_string())?;
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<Vec<f64>> = rdr
            .records()
            .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        csv_ok &= rows.len() == traj.samples.len()
            && rows
                .iter()
                .zip(&traj.samples)
                .all(|(row, s)| row[0] == s.t && row[1..] == s.state[..]);
    }
    ensure(
        worst_res <= tol,
        format!("residual {worst_res:e} > {tol:e}"),
    )?;
    ensure(csv_ok, "CSV round trip lost data")?;
    Ok(format!(
        "harmonic zero error {worst:.1e}; worst residual {worst_res:.1e} <= {tol:.1e}; CSV exact"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 6] = [
        ("1 example case 1", example_one, Duration::from_secs(5)),
        ("2 example case 2", example_two, Duration::from_secs(5)),
        (
            "3 quadrature oracles",
            quadrature_oracles,
            Duration::from_secs(30),
        ),
        (
            "4 necessity construction",
            necessity_construction,
            Duration::from_secs(60),
        ),
        ("5 cross-validation", cross_validation, Duration::MAX),
        (
            "6 simulator correctness",
            simulator_correctness,
            Duration::MAX,
        ),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; runtime {elapsed:?} over {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
