//! Oscillation criteria for coupled higher-order nonlinear ODE systems
//! `x1^(n1) = f1(t, x2)`, `x2^(n2) = f2(t, x1)`.
//!
//! * [`quadrature`] evaluates the weighted improper integrals the criteria
//!   are built from, symbolically and numerically.
//! * [`criteria`] checks hypotheses and returns an oscillation verdict.
//! * [`sim`] integrates the system and classifies trajectories by their zeros.
//! * [`fixed_point`] constructs a bounded non-oscillating solution when the
//!   nested integral is finite.
//! * [`cli`] is the command-line front end.

pub mod cli;
pub mod coef;
pub mod criteria;
pub mod export;
pub mod fixed_point;
pub mod quadrature;
pub mod sim;
pub mod system;

pub use coef::{CoefFn, Term};
pub use system::{Envelope, SystemSpec};
