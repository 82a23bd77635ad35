//! Model files, run orchestration and reports for the `lsbd` command.

pub mod report;
pub mod runner;
pub mod spec;

pub use report::{emit, Format, OracleMode, RunReport};
pub use runner::{run, run_grid, RunConfig};
pub use spec::{load_model, LoadedModel, ModelSpecFile};
