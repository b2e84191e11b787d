//! Sweep driver: configuration parsing, figure presets, and CSV/SVG output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod table;

pub use config::{parse_config, Axis, ConfigError, ConfigErrors, Mode, RunConfig};
pub use output::{config_hash, run_to_dir};
pub use presets::{preset, Job, Preset};
pub use run::{run_figure, RunError};
pub use table::{parse_csv, render_svg, write_csv, Cell, ResultRow, Table};
