//! Experiment harness behind the `xtrace` binary.
//!
//! Each experiment turns an [`ExperimentConfig`] into a [`ResultsTable`],
//! which [`output`] writes as CSV plus a JSON sidecar, or as a single JSON
//! document.

pub mod experiment;
pub mod output;

pub use experiment::{
    run_bounds, run_experiment, run_graph, run_synth, run_tfim, ExperimentConfig, ExperimentKind,
    GraphFunction, ResultRow, ResultsTable,
};
pub use output::{write_results, OutputFormat};
