//! File formats and the command implementations behind the `tfqkd` binary.
//!
//! Commands read UTF-8 `[section]` / `key = value` files and write either
//! the same dialect (records, reports) or CSV with a header row and LF line
//! endings. Relative output paths are resolved against `TFQKD_OUT_DIR` when
//! it is set.

mod commands;
mod fixtures;
mod format;

pub use commands::{
    cmd_keyrate, cmd_phase_demo, cmd_scan, cmd_simulate, cmd_stabilize, keyrate_document, output_path, scan,
    simulation_config, LoopKind, Outcome, ScanRow, SimMethod, SimulationFile, OUT_DIR_ENV,
};
pub use fixtures::{fixture, fixture_entries, fixture_entry, fixture_names, fixture_text, FixtureEntry, Reference};
pub use format::{digest, sci, Document, RecordFile, Value};
