//! Instance generators and the experiment runner.

pub mod experiment;
pub mod generate;

pub use experiment::{run_experiment, summarize, Algorithm, ExperimentOutput, ExperimentRow, ExperimentSpec};
pub use generate::{desk_suite_instance, desk_suite_spec, generate, GeneratedInstance, GeneratorSpec};
