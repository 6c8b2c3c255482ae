//! Config-driven experiment runner for `goar-core`: parses experiment files,
//! runs them, and writes CSV reports, a JSON manifest and SVG charts.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{parse_config, parse_config_str, Experiment, ExperimentConfig};
pub use error::CliError;
pub use run::{resolve_output_dir, run_experiment, RunOutputs};
pub use svg::{emit_svg_plot, render_svg, Plot, Series};
