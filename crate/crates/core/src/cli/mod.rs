//! The `oscrit` command-line front end.
//!
//! Reports go to standard output as one JSON document; a short
//! human-readable summary goes to standard error. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | example reproduction mismatch |
//! | 2 | configuration error |
//! | 3 | hypothesis or gate failure |
//! | 4 | nonconvergence |

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::criteria::{classify_oscillation, Branch, CriteriaError, Verdict};
use crate::export::write_trajectory_csv;
use crate::fixed_point::{iterate_to_fixed_point, verify_solution, FixedPointError};
use crate::quadrature::{moment_integral, QuadConfig, QuadError};
use crate::sim::{
    integrate, ode_residuals, residual_tolerance, Classification, InitialState, SimConfig,
};
use crate::system::SystemSpec;
use crate::CoefFn;
use config::RunConfig;
use report::{render, to_value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GATE: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "oscrit",
    version,
    about = "Oscillation criteria for coupled nonlinear ODE systems"
)]
pub struct Cli {
    /// JSON run configuration; omitted sections take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// CSV output path (overrides `output.csv`).
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Print the default configuration and exit.
    #[arg(long)]
    pub dump_defaults: bool,
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the integral criteria and print the verdict.
    CheckCriteria,
    /// Integrate from the configured initial state and classify.
    Simulate,
    /// Build a non-oscillating solution by fixed-point iteration.
    ConstructNonosc,
    /// Run a built-in example end to end and compare with the expected verdict.
    ReproduceExample {
        /// Example case (1 or 2).
        case: u32,
    },
}

/// Report, exit code and summary lines of one command.
pub struct Outcome {
    pub code: i32,
    pub report: Value,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    fn new(code: i32, report: Value) -> Self {
        Self {
            code,
            report,
            summary: Vec::new(),
        }
    }

    fn line(mut self, key: &str, value: impl ToString) -> Self {
        self.summary.push((key.to_string(), value.to_string()));
        self
    }
}

fn error_outcome(command: &str, code: i32, kind: &str, message: String) -> Outcome {
    Outcome::new(
        code,
        json!({"command": command, "error": {"kind": kind, "message": message}}),
    )
    .line("error", format!("{kind}: {message}"))
}

fn quad_error_code(_e: &QuadError) -> i32 {
    EXIT_CONFIG
}

pub fn check_criteria(cfg: &RunConfig) -> Outcome {
    const CMD: &str = "check-criteria";
    match classify_oscillation(&cfg.system, &cfg.quad) {
        Ok(r) => Outcome::new(EXIT_OK, json!({"command": CMD, "criteria": to_value(&r)}))
            .line("verdict", format!("{:?}", r.verdict))
            .line("branch", &r.witness_branch)
            .line("I1", r.i1.label())
            .line("I2", r.i2.label()),
        Err(CriteriaError::HypothesisViolation(v)) => {
            let names: Vec<&str> = v.iter().map(|x| x.name()).collect();
            Outcome::new(
                EXIT_GATE,
                json!({"command": CMD, "hypothesis_ok": false, "violations": to_value(&v)}),
            )
            .line("hypothesis", format!("violated: {}", names.join(", ")))
        }
        Err(CriteriaError::Quadrature(e)) => {
            error_outcome(CMD, quad_error_code(&e), "Quadrature", e.to_string())
        }
    }
}

fn write_csv_file<F>(path: &Path, f: F) -> std::io::Result<()>
where
    F: FnOnce(BufWriter<File>) -> std::io::Result<()>,
{
    f(BufWriter::new(File::create(path)?))
}

pub fn simulate(cfg: &RunConfig, csv: Option<&Path>) -> Outcome {
    const CMD: &str = "simulate";
    let sim_cfg = cfg.sim.sim_config();
    let init = cfg.sim.initial_state();
    let traj = match integrate(&cfg.system, &init, &sim_cfg) {
        Ok(t) => t,
        Err(e) => return error_outcome(CMD, EXIT_CONFIG, "Simulation", e.to_string()),
    };
    if let Some(path) = csv {
        if let Err(e) = write_csv_file(path, |w| write_trajectory_csv(&traj, w)) {
            return error_outcome(CMD, EXIT_CONFIG, "Csv", e.to_string());
        }
    }
    let (w1, w2) = traj.window_zero_counts(&sim_cfg);
    let tol = residual_tolerance(&sim_cfg);
    let residuals = ode_residuals(&cfg.system, &traj, 100);
    let residual_report = residuals.map(
        |(r1, r2)| json!({"x1": r1, "x2": r2, "tolerance": tol, "passed": r1 <= tol && r2 <= tol}),
    );
    let report = json!({
        "command": CMD,
        "status": to_value(&traj.status),
        "classification": to_value(&traj.classification),
        "t0": traj.t0(),
        "t_end": traj.t_end(),
        "accepted_steps": traj.samples.len() - 1,
        "zeros1": traj.zeros1,
        "zeros2": traj.zeros2,
        "zero_counts": {"x1": traj.zeros1.len(), "x2": traj.zeros2.len()},
        "window_start": traj.window_start(&sim_cfg),
        "window_zero_counts": {"x1": w1, "x2": w2},
        "residuals": residual_report,
        "csv": csv.map(|p| p.display().to_string()),
    });
    Outcome::new(EXIT_OK, report)
        .line("status", format!("{:?}", traj.status))
        .line("classification", format!("{:?}", traj.classification))
        .line(
            "zeros (x1, x2)",
            format!("{}, {}", traj.zeros1.len(), traj.zeros2.len()),
        )
        .line("window zeros (x1, x2)", format!("{w1}, {w2}"))
}

fn fixed_point_error_code(e: &FixedPointError) -> i32 {
    match e {
        FixedPointError::InvalidConfig(_) | FixedPointError::Quadrature(_) => EXIT_CONFIG,
        FixedPointError::Criteria(CriteriaError::Quadrature(_)) => EXIT_CONFIG,
        FixedPointError::Criteria(CriteriaError::HypothesisViolation(_))
        | FixedPointError::Precondition(_)
        | FixedPointError::DegenerateP
        | FixedPointError::DivergentP => EXIT_GATE,
        FixedPointError::NoAdmissibleT { .. }
        | FixedPointError::HorizonExhausted { .. }
        | FixedPointError::X1Escape { .. }
        | FixedPointError::NonConvergence { .. }
        | FixedPointError::VerificationFailure { .. } => EXIT_NONCONVERGENCE,
    }
}

fn fixed_point_error_kind(e: &FixedPointError) -> &'static str {
    match e {
        FixedPointError::InvalidConfig(_) => "InvalidConfig",
        FixedPointError::DegenerateP => "DegenerateP",
        FixedPointError::DivergentP => "DivergentP",
        FixedPointError::NoAdmissibleT { .. } => "NoAdmissibleT",
        FixedPointError::HorizonExhausted { .. } => "HorizonExhausted",
        FixedPointError::X1Escape { .. } => "X1Escape",
        FixedPointError::NonConvergence { .. } => "NonConvergence",
        FixedPointError::Precondition(_) => "Precondition",
        FixedPointError::VerificationFailure { .. } => "VerificationFailure",
        FixedPointError::Quadrature(_) => "Quadrature",
        FixedPointError::Criteria(_) => "Criteria",
    }
}

pub fn construct_nonosc(cfg: &RunConfig, csv: Option<&Path>) -> Outcome {
    const CMD: &str = "construct-nonosc";
    let result = match iterate_to_fixed_point(&cfg.system, &cfg.quad, &cfg.fixed_point) {
        Ok(r) => r,
        Err(e) => {
            let code = fixed_point_error_code(&e);
            let mut out = error_outcome(CMD, code, fixed_point_error_kind(&e), e.to_string());
            if let FixedPointError::NonConvergence { best, .. } = &e {
                out.report["best"] = json!({
                    "K1": best.k1,
                    "T": best.t_start,
                    "iterations": best.iterations,
                    "final_delta": best.final_delta,
                    "delta_history": best.delta_history,
                });
            }
            if matches!(e, FixedPointError::DegenerateP) {
                out.report["P"] = json!(0.0);
            }
            return out;
        }
    };
    if let Some(path) = csv {
        if let Err(e) = write_csv_file(path, |w| result.write_csv(w)) {
            return error_outcome(CMD, EXIT_CONFIG, "Csv", e.to_string());
        }
    }
    let verification = verify_solution(&result, &cfg.system, &cfg.fixed_point);
    let (code, verification_report) = match &verification {
        Ok(v) => (EXIT_OK, json!({"passed": true, "report": to_value(v)})),
        Err(e) => (
            EXIT_NONCONVERGENCE,
            json!({"passed": false, "error": e.to_string()}),
        ),
    };
    let init = result.initial_state();
    let report = json!({
        "command": CMD,
        "P": result.p,
        "K1": result.k1,
        "T": result.t_start,
        "t_max": result.t_max,
        "grid_points": result.t.len(),
        "iterations": result.iterations,
        "final_delta": result.final_delta,
        "delta_history": result.delta_history,
        "residuals": to_value(&result.residuals),
        "tail_bound_x1": result.tail_bound_x1,
        "tail_bound_x2": result.tail_bound_x2,
        "sup_x1": result.sup_x1(),
        "initial_state": to_value(&init),
        "verification": verification_report,
        "csv": csv.map(|p| p.display().to_string()),
    });
    Outcome::new(code, report)
        .line("P", format!("{:.10e}", result.p.unwrap_or(f64::NAN)))
        .line("K1", format!("{:.10}", result.k1))
        .line("T", result.t_start)
        .line("iterations", result.iterations)
        .line("final_delta", format!("{:.3e}", result.final_delta))
        .line(
            "verification",
            if verification.is_ok() {
                "passed"
            } else {
                "FAILED"
            },
        )
}

/// Built-in spec, expected branch and corroborating initial state.
pub fn example_config(case: u32) -> Option<(SystemSpec, Branch)> {
    match case {
        1 => Some((SystemSpec::example_case_1(), Branch::BothMomentsDiverge)),
        2 => Some((SystemSpec::example_case_2(), Branch::NestedDiverges)),
        _ => None,
    }
}

pub fn reproduce_example(case: u32, csv: Option<&Path>) -> Outcome {
    const CMD: &str = "reproduce-example";
    let Some((spec, branch)) = example_config(case) else {
        return error_outcome(
            CMD,
            EXIT_CONFIG,
            "InvalidCase",
            format!("unknown example case {case}; expected 1 or 2"),
        );
    };
    let quad = QuadConfig::default();
    let criteria = match classify_oscillation(&spec, &quad) {
        Ok(r) => r,
        Err(e) => return error_outcome(CMD, EXIT_MISMATCH, "Criteria", e.to_string()),
    };
    let mut checks = vec![
        ("verdict", criteria.verdict == Verdict::AllOscillate),
        ("branch", criteria.branch == branch),
    ];
    let mut report = json!({"command": CMD, "case": case});
    match case {
        1 => {
            checks.push(("I1_divergent", criteria.i1.is_divergent()));
            checks.push(("I2_divergent", criteria.i2.is_divergent()));
        }
        _ => {
            // the inner value in the t^{n-1} kernel convention, times (n-1)! = 2
            let e = CoefFn::from_triples(&[(1.0, 0.0, -1.0)]).expect("valid");
            let inner = moment_integral(&e, 3, &quad)
                .ok()
                .and_then(|v| v.value())
                .map(|v| 2.0 * v);
            checks.push((
                "inner_value",
                inner.is_some_and(|v| (v - 2.0).abs() <= 1e-6),
            ));
            checks.push((
                "J1_divergent",
                criteria.j1.as_ref().is_some_and(|j| j.is_divergent()),
            ));
            report["inner_value"] = json!(inner);
        }
    }

    let sim_cfg = SimConfig::default();
    let init = InitialState::new(0.0, vec![1.0, 0.0], vec![1.0, 0.0]);
    let sim = match integrate(&spec, &init, &sim_cfg) {
        Ok(t) => t,
        Err(e) => return error_outcome(CMD, EXIT_MISMATCH, "Simulation", e.to_string()),
    };
    if let Some(path) = csv {
        if let Err(e) = write_csv_file(path, |w| write_trajectory_csv(&sim, w)) {
            return error_outcome(CMD, EXIT_CONFIG, "Csv", e.to_string());
        }
    }
    let contradicts = matches!(
        sim.classification,
        Classification::NonOscillating | Classification::WeaklyOscillating
    );
    checks.push(("simulation_consistent", !contradicts));

    let reproduced = checks.iter().all(|(_, ok)| *ok);
    report["expected_verdict"] = json!("AllOscillate");
    report["expected_branch"] = to_value(&branch);
    report["criteria"] = to_value(&criteria);
    report["checks"] = checks
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect::<serde_json::Map<_, _>>()
        .into();
    report["simulation"] = json!({
        "initial_state": to_value(&init),
        "t_end": sim_cfg.t_end,
        "status": to_value(&sim.status),
        "classification": to_value(&sim.classification),
        "zeros1": sim.zeros1,
        "zeros2": sim.zeros2,
    });
    report["reproduced"] = json!(reproduced);
    let code = if reproduced { EXIT_OK } else { EXIT_MISMATCH };
    let mut out = Outcome::new(code, report)
        .line("case", case)
        .line("verdict", format!("{:?}", criteria.verdict))
        .line("branch", &criteria.witness_branch)
        .line(
            "simulation",
            format!("{:?} / {:?}", sim.status, sim.classification),
        )
        .line("reproduced", reproduced);
    for (k, ok) in &checks {
        out = out.line(k, if *ok { "ok" } else { "FAILED" });
    }
    out
}

fn print_summary(out: &Outcome) {
    let width = out.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &out.summary {
        eprintln!("{k:<width$}  {v}");
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);

    if cli.dump_defaults {
        println!("{}", RunConfig::default().to_json());
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return EXIT_CONFIG;
    };

    let outcome = match &command {
        Command::ReproduceExample { case } => reproduce_example(*case, cli.csv.as_deref()),
        _ => {
            let cfg = match &cli.config {
                Some(p) => RunConfig::load(p),
                None => Ok(RunConfig::default()),
            };
            match cfg {
                Err(e) => error_outcome("config", EXIT_CONFIG, "Config", e.to_string()),
                Ok(cfg) => {
                    let csv = cli.csv.clone().or_else(|| cfg.output.csv.clone());
                    match command {
                        Command::CheckCriteria => check_criteria(&cfg),
                        Command::Simulate => simulate(&cfg, csv.as_deref()),
                        Command::ConstructNonosc => construct_nonosc(&cfg, csv.as_deref()),
                        Command::ReproduceExample { .. } => unreachable!("handled above"),
                    }
                }
            }
        }
    };
    print!("{}", render(&outcome.report));
    print_summary(&outcome);
    outcome.code
}
