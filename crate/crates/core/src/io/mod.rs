//! Configuration documents, figure presets and record emission.

pub mod config;
pub mod output;
pub mod presets;

pub use config::{parse_config, OutputFormat, RunConfig};
pub use output::{emit_records, OutputRecord};
pub use presets::{run_preset, PresetOverrides, PresetRun};
