pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Params, Subcommand};
pub use output::{emit_csv, parse_csv, to_csv_string, ResultTable};
pub use run::{file_stem, run, Output, VERSION};
