//! Presets, the optimization pipeline and experiment helpers.

pub mod fixture;
mod optimize;
mod scatter;
mod settings;
mod shift;

pub use optimize::{optimize, optimize_bracketed, BracketedExpression, Optimized};
pub use scatter::{scatter_experiment, write_csv, Distribution, ScatterRow, ScatterSpec};
pub use settings::{HornerSource, Level, OptimizerSettings, Overrides};
pub use shift::{parse_groups, shift_search, ShiftRule, Shifted};
