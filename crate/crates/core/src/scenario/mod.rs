//! Scenario files, experiment orchestration and table emission.

mod bundled;
pub mod commands;
pub mod config;
pub mod table;

pub use bundled::{bundled_text, NAMES as BUNDLED};
pub use commands::{cmd_density, cmd_invert, cmd_pattern, cmd_protocol, cmd_weak_grid, find_peaks, indexed_peaks, parse_contrasts};
pub use config::{load_scenario, parse_profile, parse_scenario, ProbeSetup, Scenario, ScenarioConfig};
pub use table::{render_tables, write_tables, Cell, EmittedTable, OutputFormat};
