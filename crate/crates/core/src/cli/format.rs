//! Record files and the `key = value` report dialect.
//!
//! Files are UTF-8 text with `[section]` headers and one `key = value`
//! pair per line (a TOML subset). Floats are written in shortest
//! round-trip scientific notation, so a written file parses back to the
//! same values and re-serializes byte for byte.

use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::keyrate::KeyRateInputs;
use crate::model::{ExperimentRecord, Mode, ObservedAopp, SecurityParams, SourceParams};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

/// Shortest round-trip scientific notation (`9.53e-12`, `1e1`).
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// Ordered sections of key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    sections: Vec<(String, Vec<(String, Value)>)>,
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Vec<(String, Value)> {
        self.sections.push((name.to_string(), Vec::new()));
        &mut self.sections.last_mut().unwrap().1
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let text = match v {
                    Value::Int(n) => n.to_string(),
                    Value::Float(x) => sci(*x),
                    Value::Bool(b) => b.to_string(),
                    Value::Str(s) => format!("{s:?}"),
                };
                let _ = writeln!(out, "{k} = {text}");
            }
        }
        out
    }
}

pub(crate) fn push(entries: &mut Vec<(String, Value)>, key: &str, v: impl Into<Value>) {
    entries.push((key.to_string(), v.into()));
}

/// Hex SHA-256 of the bytes a command read.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses a TOML-subset document into `T`, reporting unknown keys and type
/// errors with their line and column.
pub(crate) fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| {
                let before = &text[..s.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let col = s.start - before.rfind('\n').map_or(0, |p| p + 1) + 1;
                format!("{origin}:{line}:{col}: ")
            })
            .unwrap_or_else(|| format!("{origin}: "));
        Error::Parse(format!("{loc}{}", e.message()))
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordSection {
    n_total: u64,
    ds_deg: f64,
    eff_freq_hz: f64,
    sent_00: u64,
    sent_01: u64,
    sent_02: u64,
    sent_10: u64,
    sent_11: u64,
    sent_12: u64,
    sent_20: u64,
    sent_21: u64,
    sent_22: u64,
    detected_00: u64,
    detected_01: u64,
    detected_02: u64,
    detected_10: u64,
    detected_11: u64,
    detected_12: u64,
    detected_20: u64,
    detected_21: u64,
    detected_22: u64,
    detected_11_ds: u64,
    correct_11_ds: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AoppSection {
    n_t_after: u64,
    e_t_after: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    total_atten_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecordFile {
    record: RecordSection,
    aopp: Option<AoppSection>,
    source: Option<SourceParams>,
    security: Option<SecurityParams>,
    channel: Option<ChannelSection>,
}

/// Contents of a record file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub record: ExperimentRecord,
    pub source: Option<SourceParams>,
    pub security: Option<SecurityParams>,
    /// Total channel loss, used for the repeaterless-bound comparison.
    pub total_atten_db: Option<f64>,
}

impl RecordFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let raw: RawRecordFile = parse_toml(text, origin)?;
        let r = raw.record;
        let record = ExperimentRecord {
            n_total: r.n_total,
            sent: [
                [r.sent_00, r.sent_01, r.sent_02],
                [r.sent_10, r.sent_11, r.sent_12],
                [r.sent_20, r.sent_21, r.sent_22],
            ],
            detected: [
                [r.detected_00, r.detected_01, r.detected_02],
                [r.detected_10, r.detected_11, r.detected_12],
                [r.detected_20, r.detected_21, r.detected_22],
            ],
            ds_deg: r.ds_deg,
            detected_11_ds: r.detected_11_ds,
            correct_11_ds: r.correct_11_ds,
            eff_freq_hz: r.eff_freq_hz,
            observed_aopp: raw.aopp.map(|a| ObservedAopp {
                n_t_after: a.n_t_after,
                e_t_after: a.e_t_after,
            }),
        };
        record
            .validate()
            .map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
        if let Some(s) = &raw.source {
            s.validate().map_err(|e| Error::Parse(format!("{origin}: [source] {e}")))?;
        }
        if let Some(s) = &raw.security {
            s.validate().map_err(|e| Error::Parse(format!("{origin}: [security] {e}")))?;
        }
        Ok(RecordFile {
            record,
            source: raw.source,
            security: raw.security,
            total_atten_db: raw.channel.map(|c| c.total_atten_db),
        })
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::new();
        let r = &self.record;
        let s = doc.section("record");
        push(s, "n_total", r.n_total);
        push(s, "ds_deg", r.ds_deg);
        push(s, "eff_freq_hz", r.eff_freq_hz);
        for (name, m) in [("sent", &r.sent), ("detected", &r.detected)] {
            for (a, row) in m.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    push(s, &format!("{name}_{a}{b}"), *v);
                }
            }
        }
        push(s, "detected_11_ds", r.detected_11_ds);
        push(s, "correct_11_ds", r.correct_11_ds);
        if let Some(obs) = &r.observed_aopp {
            let s = doc.section("aopp");
            push(s, "n_t_after", obs.n_t_after);
            push(s, "e_t_after", obs.e_t_after);
        }
        if let Some(src) = &self.source {
            let s = doc.section("source");
            push(s, "mu_x", src.mu_x);
            push(s, "mu_y", src.mu_y);
            push(s, "p_v", src.p_v);
            push(s, "p_x", src.p_x);
            push(s, "p_y", src.p_y);
        }
        if let Some(sec) = &self.security {
            let s = doc.section("security");
            push(s, "f", sec.f);
            push(s, "eps", sec.eps);
            push(s, "eps_cor", sec.eps_cor);
            push(s, "eps_pa", sec.eps_pa);
            push(s, "eps_hat", sec.eps_hat);
        }
        if let Some(db) = self.total_atten_db {
            push(doc.section("channel"), "total_atten_db", db);
        }
        doc
    }

    pub fn render(&self) -> String {
        self.to_document().render()
    }

    /// Key-rate inputs; missing blocks default to the long-distance
    /// source settings and the standard security parameters.
    pub fn inputs(&self, mode: Mode) -> KeyRateInputs {
        KeyRateInputs {
            record: self.record.clone(),
            src: self.source.unwrap_or(SourceParams::LONG_DISTANCE),
            sec: self.security.unwrap_or_default(),
            mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::fixtures::{fixture_names, fixture_text};

    #[test]
    fn scientific_notation() {
        assert_eq!(sci(9.53e-12), "9.53e-12");
        assert_eq!(sci(10.0), "1e1");
        assert_eq!(sci(0.1 + 0.2), "3.0000000000000004e-1");
    }

    #[test]
    fn fixtures_round_trip_byte_identical() {
        for name in fixture_names() {
            let text = fixture_text(name).unwrap();
            let parsed = RecordFile::parse(text, name).unwrap();
            assert_eq!(parsed.render(), text, "{name}");
        }
    }

    #[test]
    fn unknown_key_is_located() {
        let text = fixture_text("1002").unwrap().replace("ds_deg", "dss_deg");
        let err = RecordFile::parse(&text, "x.rec").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.rec:") && msg.contains("dss_deg"), "{msg}");
        let text = format!("{}\n[extra]\nk = 1\n", fixture_text("1002").unwrap());
        assert!(matches!(RecordFile::parse(&text, "x.rec"), Err(Error::Parse(_))));
    }

    #[test]
    fn invalid_record_is_a_parse_error() {
        let text = fixture_text("1002")
            .unwrap()
            .replace("correct_11_ds = 557", "correct_11_ds = 999");
        assert!(matches!(RecordFile::parse(&text, "x.rec"), Err(Error::Parse(_))));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
