//! Configuration and stage orchestration for the `breather` binary.

// the negated comparisons in config validation reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pipeline;

pub use config::{parse_config, ConfigError, SolverConfig};
pub use pipeline::{run_pipeline, Pipeline, Stage, StageError};
