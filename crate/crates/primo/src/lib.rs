//! Prior-informed multi-objective hyperparameter optimization.
//!
//! The optimizer combines a multi-fidelity successive-halving initial design
//! with an epsilon-greedy, prior-weighted, randomly scalarized Bayesian
//! optimization loop. The crate also ships the baseline algorithms, synthetic
//! multi-fidelity benchmarks with known optima, a tabular benchmark loader,
//! and the experiment harness (seeded grids, trial logs, hypervolume traces,
//! relative-rank reports) used to evaluate everything at desk scale.

pub mod acquisition;
pub mod bench;
pub mod error;
pub mod gp;
pub mod harness;
pub mod moasha;
pub mod optimize;
pub mod pareto;
pub mod prior;
pub mod scalarize;
pub mod seed;
pub mod space;
mod stats;

pub use error::{PrimoError, Result};
