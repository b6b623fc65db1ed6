//! Bayesian optimization of drawn conductive-trace circuits.
//!
//! A [`circuit::Pattern`] of five lines/circles is turned into a resistor
//! network and solved for the voltage across a load; [`cocabo`] searches the
//! mixed categorical/continuous pattern space with EXP3 bandits and a
//! Gaussian-process UCB acquisition; [`harness`] wires both into reproducible
//! experiments with CSV/JSON output and a brute-force oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod circuit;
pub mod cocabo;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod harness;
mod linalg;

pub use circuit::{load_voltage, simulate, Pattern, ShapeKind};
pub use cocabo::{run, OptimizerConfig, RunTrace, TrialRecord};
pub use error::{Error, Result};
pub use experiment::{ExperimentKind, ExperimentSpec};
