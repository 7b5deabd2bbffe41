//! Configuration, run orchestration and output.

mod config;
mod run;
mod sim;

pub use config::{output_root, parse_token, tokenize, RunManifest, Setting, KEYS};
pub use run::{
    benchmark_suite, bowl_convergence, bowl_error, convergence_suite, fitted_rate, run, write_snapshot,
    ConvergenceEntry, ConvergenceStudy, RunOutcome, RunStatus, CONVERGENCE_LEVELS,
};
pub use sim::{SimConfig, Simulation, StepReport};
