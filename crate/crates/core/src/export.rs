//! CSV output for trajectories and fixed-point grids.
//!
//! Numbers are written with 17 significant digits in Rust's
//! locale-independent scientific notation, rows end in `\n`.

use std::io::{self, Write};

use crate::sim::Trajectory;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names `t,x1,x1_d1,...,x2,x2_d1,...`.
pub fn trajectory_header(n1: usize, n2: usize) -> Vec<String> {
    let block = |name: &'static str, n: usize| {
        (0..n).map(move |j| {
            if j == 0 {
                name.to_string()
            } else {
                format!("{name}_d{j}")
            }
        })
    };
    std::iter::once("t".to_string())
        .chain(block("x1", n1))
        .chain(block("x2", n2))
        .collect()
}

/// One row per accepted step.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", trajectory_header(traj.n1, traj.n2).join(","))?;
    for s in &traj.samples {
        let mut row = vec![fmt(s.t)];
        row.extend(s.state.iter().map(|&v| fmt(v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `t,x1,x2`.
pub fn write_grid_csv<W: Write>(t: &[f64], x1: &[f64], x2: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "t,x1,x2")?;
    for ((a, b), c) in t.iter().zip(x1).zip(x2) {
        writeln!(w, "{},{},{}", fmt(*a), fmt(*b), fmt(*c))?;
    }
    Ok(())
}
