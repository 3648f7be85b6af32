//! Record fixtures of the published runs, compiled into the library.

use std::sync::OnceLock;

use serde::Deserialize;

use super::format::{parse_toml, RecordFile};
use crate::error::{Error, Result};
use crate::model::Mode;

const MANIFEST: &str = include_str!("../../fixtures/manifest.toml");

const FILES: [(&str, &str); 13] = [
    ("202.rec", include_str!("../../fixtures/202.rec")),
    ("297.rec", include_str!("../../fixtures/297.rec")),
    ("398.rec", include_str!("../../fixtures/398.rec")),
    ("499.rec", include_str!("../../fixtures/499.rec")),
    ("600.rec", include_str!("../../fixtures/600.rec")),
    ("701.rec", include_str!("../../fixtures/701.rec")),
    ("800.rec", include_str!("../../fixtures/800.rec")),
    ("901.rec", include_str!("../../fixtures/901.rec")),
    ("952.rec", include_str!("../../fixtures/952.rec")),
    ("1002.rec", include_str!("../../fixtures/1002.rec")),
    ("202s.rec", include_str!("../../fixtures/202s.rec")),
    ("297s.rec", include_str!("../../fixtures/297s.rec")),
    ("398s.rec", include_str!("../../fixtures/398s.rec")),
];

/// Figures published alongside each run.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub r_per_pulse: f64,
    pub r_bps: f64,
    pub n1_before: u64,
    pub n1_after: u64,
    pub e1ph_before: f64,
    pub e1ph_after: f64,
    pub e_before: f64,
    pub e_after: f64,
    pub qber_x11: f64,
    pub n_t_after: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub name: String,
    pub file: String,
    pub total_km: u32,
    /// `long` or `short` source settings.
    pub parameters: String,
    /// Analysis mode the published rate was computed in.
    pub mode: Mode,
    pub reference: Reference,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    fixture: Vec<FixtureEntry>,
}

fn manifest() -> &'static [FixtureEntry] {
    static CELL: OnceLock<Vec<FixtureEntry>> = OnceLock::new();
    CELL.get_or_init(|| {
        parse_toml::<Manifest>(MANIFEST, "manifest.toml")
            .expect("bundled manifest parses")
            .fixture
    })
}

/// All manifest entries, in manifest order.
pub fn fixture_entries() -> &'static [FixtureEntry] {
    manifest()
}

pub fn fixture_names() -> impl Iterator<Item = &'static str> {
    manifest().iter().map(|e| e.name.as_str())
}

pub fn fixture_entry(name: &str) -> Result<&'static FixtureEntry> {
    manifest()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParams(format!("no fixture named `{name}`")))
}

/// Raw text of a fixture record file.
pub fn fixture_text(name: &str) -> Result<&'static str> {
    let entry = fixture_entry(name)?;
    FILES
        .iter()
        .find(|(f, _)| *f == entry.file)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::InvalidParams(format!("fixture file `{}` not bundled", entry.file)))
}

/// Parsed record file of a fixture.
pub fn fixture(name: &str) -> Result<RecordFile> {
    RecordFile::parse(fixture_text(name)?, name)
}
