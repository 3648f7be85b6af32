use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::format::{digest, parse_toml, push, sci, Document, RecordFile};
use crate::error::{Error, Result};
use crate::keyrate::{key_rate, key_rate_vs_plob, KeyRateInputs, KeyRateReport};
use crate::model::{
    db_to_transmittance, plob_bound, LinkBudget, Mode, SecurityParams, SourceParams, FIBER_DB_PER_KM,
};
use crate::phasecomp::{run_phase_demo, PhaseDemoConfig, PhaseDemoResult};
use crate::simulate::{run_analytic, run_monte_carlo, SimConfig};
use crate::stabilize::{
    run_delay_loop, run_intensity_loop, run_polarization_loop, DelayLoopConfig, IntensityLoopConfig,
    PolarizationConfig, PolarizationState,
};

/// Directory that relative output paths are resolved against.
pub const OUT_DIR_ENV: &str = "TFQKD_OUT_DIR";

/// Result of a command: process exit code and a short summary for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome { exit_code: 0, summary }
    }

    /// Exit code 2 for unreadable input, 1 for any other failure.
    pub fn from_error(e: &Error) -> Self {
        let exit_code = if matches!(e, Error::Parse(_)) { 2 } else { 1 };
        Outcome {
            exit_code,
            summary: format!("error: {e}"),
        }
    }
}

pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_output(path: &Path, text: &str) -> Result<PathBuf> {
    let path = output_path(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Full key-rate report with every intermediate quantity.
pub fn keyrate_document(
    report: &KeyRateReport,
    inputs: &KeyRateInputs,
    input_name: &str,
    input_digest: &str,
    total_atten_db: Option<f64>,
) -> Result<Document> {
    let mut doc = Document::new();
    let s = doc.section("input");
    push(s, "file", input_name);
    push(s, "sha256", input_digest);
    push(s, "mode", inputs.mode.to_string());

    let s = doc.section("counting_rates");
    for a in 0..3 {
        for b in 0..3 {
            push(s, &format!("s_{a}{b}"), report.rates.get(a, b));
        }
    }

    if let Some(d) = &report.decoy {
        let s = doc.section("decoy");
        push(s, "s01_lb", d.s01_lb);
        push(s, "s10_lb", d.s10_lb);
        push(s, "s1_lb", d.s1_lb);
        push(s, "n01_lb", d.n01_lb);
        push(s, "n10_lb", d.n10_lb);
        push(s, "n1_lb", d.n1_lb());
        push(s, "t_x", d.t_x);
        push(s, "n_x", d.n_x);
        push(s, "m_x", d.m_x);
        push(s, "e1ph_ub", d.e1ph_ub);
        push(s, "floored", d.floored);
        push(s, "clamped", d.clamped);
    }

    if let Some(t) = &report.tally {
        let s = doc.section("aopp");
        push(s, "n_t", t.n_t);
        push(s, "n_t0", t.n_t0);
        push(s, "n_t1", t.n_t1);
        push(s, "e_before", t.e_before());
        push(s, "n_g", t.n_g);
        push(s, "n_odd", t.n_odd);
        push(s, "n_t_after", t.n_t_after);
        push(s, "e_t_after", t.e_t_after);
        push(s, "observed_after", t.observed_after);
        if let Some(a) = &report.aopp {
            push(s, "n1_after", a.n1_after);
            push(s, "e1ph_after", a.e1ph_after);
            if let Some(c) = &a.chain {
                push(s, "u", c.u);
                push(s, "n1", c.n1);
                push(s, "n1r", c.n1r);
                push(s, "n01p", c.n01p);
                push(s, "n10p", c.n10p);
                push(s, "n_min", c.n_min);
                push(s, "r", c.r);
                push(s, "e_tau", c.e_tau);
                push(s, "ms_bar", c.ms_bar);
            }
        }
    }

    let s = doc.section("key");
    push(s, "gamma_prime", report.gamma_prime);
    push(s, "r_per_pulse", report.r_per_pulse);
    push(s, "r_bps", report.r_bps);
    push(s, "eff_freq_hz", report.eff_freq_hz);
    push(s, "positive", report.is_positive());
    push(
        s,
        "status",
        match report.status {
            crate::keyrate::KeyStatus::Positive => "positive",
            crate::keyrate::KeyStatus::NonPositive => "non_positive",
            crate::keyrate::KeyStatus::NoKey => "no_key",
        },
    );
    if let Some(reason) = &report.reason {
        push(s, "reason", reason.as_str());
    }

    if let Some(db) = total_atten_db {
        let p = key_rate_vs_plob(report, db)?;
        let s = doc.section("plob");
        push(s, "total_atten_db", db);
        push(s, "plob_bits", p.plob_bits);
        push(s, "exceeds_plob", p.exceeds);
    }
    Ok(doc)
}

/// `keyrate RECORD --mode M --out REPORT`.
///
/// A record that cannot certify a key still produces a report, flagged by
/// its `status`, and exit code 0.
pub fn cmd_keyrate(record_path: &Path, mode: Mode, out: Option<&Path>) -> Outcome {
    let run = || -> Result<Outcome> {
        let text = read_input(record_path)?;
        let name = record_path.display().to_string();
        let file = RecordFile::parse(&text, &name)?;
        let inputs = file.inputs(mode);
        let report = key_rate(&inputs)?;
        let doc = keyrate_document(&report, &inputs, &name, &digest(text.as_bytes()), file.total_atten_db)?;
        let rendered = doc.render();
        let mut summary = format!(
            "R = {} per pulse, {} bps ({:?})",
            sci(report.r_per_pulse),
            sci(report.r_bps),
            report.status
        );
        match out {
            Some(p) => {
                let written = write_output(p, &rendered)?;
                let _ = write!(summary, "\nreport written to {}", written.display());
            }
            None => summary = format!("{rendered}\n{summary}"),
        }
        Ok(Outcome::ok(summary))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    Analytic,
    MonteCarlo,
}

/// `[link]` block: an optional characterized distance plus overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSection {
    /// One of the characterized fiber distances.
    preset_km: Option<u32>,
    /// Symmetric link of this length at the average fiber loss.
    total_km: Option<f64>,
    db_per_km: Option<f64>,
    length_ac_km: Option<f64>,
    length_bc_km: Option<f64>,
    atten_ac_db: Option<f64>,
    atten_bc_db: Option<f64>,
    det_eff_1: Option<f64>,
    det_eff_2: Option<f64>,
    dark_rate_1: Option<f64>,
    dark_rate_2: Option<f64>,
    window_eff: Option<f64>,
    eff_freq_hz: Option<f64>,
    misalign: Option<f64>,
    dark_gate_s: Option<f64>,
}

impl LinkSection {
    /// Detector template with overrides applied, before any fiber choice.
    fn template(&self) -> LinkBudget {
        let mut l = LinkBudget::paper_detectors();
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut l.det_eff_1, self.det_eff_1);
        set(&mut l.det_eff_2, self.det_eff_2);
        set(&mut l.dark_rate_1, self.dark_rate_1);
        set(&mut l.dark_rate_2, self.dark_rate_2);
        set(&mut l.window_eff, self.window_eff);
        set(&mut l.eff_freq_hz, self.eff_freq_hz);
        set(&mut l.misalign, self.misalign);
        if self.dark_gate_s.is_some() {
            l.dark_gate_s = self.dark_gate_s;
        }
        l
    }

    fn at_distance(&self, template: &LinkBudget, km: f64) -> LinkBudget {
        let exact = km.fract() == 0.0 && km >= 0.0 && km <= u32::MAX as f64;
        match exact.then(|| LinkBudget::paper(km as u32)).flatten() {
            Some(p) => LinkBudget {
                length_ac_km: p.length_ac_km,
                length_bc_km: p.length_bc_km,
                atten_ac_db: p.atten_ac_db,
                atten_bc_db: p.atten_bc_db,
                ..*template
            },
            None => LinkBudget::symmetric(km, self.db_per_km.unwrap_or(FIBER_DB_PER_KM), template),
        }
    }

    fn resolve(&self) -> Result<LinkBudget> {
        let template = self.template();
        let mut l = match (self.preset_km, self.total_km) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParams("[link] sets both preset_km and total_km".into()))
            }
            (Some(km), None) => {
                if LinkBudget::paper(km).is_none() {
                    return Err(Error::InvalidParams(format!(
                        "[link] preset_km = {km} is not a characterized distance"
                    )));
                }
                self.at_distance(&template, km as f64)
            }
            (None, Some(km)) => LinkBudget::symmetric(km, self.db_per_km.unwrap_or(FIBER_DB_PER_KM), &template),
            (None, None) => template,
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut l.length_ac_km, self.length_ac_km);
        set(&mut l.length_bc_km, self.length_bc_km);
        set(&mut l.atten_ac_db, self.atten_ac_db);
        set(&mut l.atten_bc_db, self.atten_bc_db);
        l.validate()?;
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    n_total: u64,
    seed: Option<u64>,
    phase_noise_sigma_deg: Option<f64>,
    ds_deg: Option<f64>,
    /// Monte-Carlo windows per batch.
    batch: Option<u64>,
    /// Analysis mode used by `scan`.
    mode: Option<Mode>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulationFile {
    source: Option<SourceParams>,
    #[serde(default)]
    link: LinkSection,
    sim: SimSection,
    security: Option<SecurityParams>,
}

/// Parsed simulation config (`[source]`, `[link]`, `[sim]`, `[security]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFile {
    pub sim: SimConfig,
    pub security: SecurityParams,
    pub batch: Option<u64>,
    pub mode: Mode,
    /// Detector template and loss model reused by scans.
    link_section: LinkSection,
}

pub fn simulation_config(text: &str, origin: &str) -> Result<SimulationFile> {
    let raw: RawSimulationFile = parse_toml(text, origin)?;
    let at = |e: Error| Error::Parse(format!("{origin}: {e}"));
    let src = raw.source.unwrap_or(SourceParams::LONG_DISTANCE);
    src.validate().map_err(at)?;
    let link = raw.link.resolve().map_err(at)?;
    let base = SimConfig::new(src, link, raw.sim.n_total);
    let sim = SimConfig {
        seed: raw.sim.seed.unwrap_or(base.seed),
        phase_noise_sigma_deg: raw.sim.phase_noise_sigma_deg.unwrap_or(base.phase_noise_sigma_deg),
        ds_deg: raw.sim.ds_deg.unwrap_or(base.ds_deg),
        ..base
    };
    sim.validate().map_err(at)?;
    let security = raw.security.unwrap_or_default();
    security.validate().map_err(at)?;
    Ok(SimulationFile {
        sim,
        security,
        batch: raw.sim.batch,
        mode: raw.sim.mode.unwrap_or(Mode::Finite),
        link_section: raw.link,
    })
}

fn simulated_record_file(cfg: &SimulationFile, method: SimMethod) -> Result<RecordFile> {
    let record = match method {
        SimMethod::Analytic => run_analytic(&cfg.sim)?,
        SimMethod::MonteCarlo => {
            let batch = cfg.batch.unwrap_or(1 << 20).min(cfg.sim.n_total);
            run_monte_carlo(&cfg.sim, batch)?
        }
    };
    Ok(RecordFile {
        record,
        source: Some(cfg.sim.src),
        security: Some(cfg.security),
        total_atten_db: Some(cfg.sim.link.total_atten_db()),
    })
}

/// `simulate CONFIG [--seed S] [--mc|--analytic] --out RECORD`.
pub fn cmd_simulate(config_path: &Path, seed: Option<u64>, method: SimMethod, out: Option<&Path>) -> Outcome {
    let run = || -> Result<Outcome> {
        let text = read_input(config_path)?;
        let mut cfg = simulation_config(&text, &config_path.display().to_string())?;
        if let Some(s) = seed {
            cfg.sim.seed = s;
        }
        let file = simulated_record_file(&cfg, method)?;
        let rendered = file.render();
        Ok(Outcome::ok(match out {
            Some(p) => format!("record written to {}", write_output(p, &rendered)?.display()),
            None => rendered,
        }))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub distance_km: f64,
    pub loss_db: f64,
    pub r_per_pulse: f64,
    pub r_bps: f64,
    pub plob_bits: f64,
}

/// Key rate against distance on analytic expected records. Characterized
/// distances use their measured fiber losses; other distances a symmetric
/// link at the average loss. Rows come back sorted by distance.
pub fn scan(distances: &[f64], cfg: &SimulationFile) -> Result<Vec<ScanRow>> {
    if distances.is_empty() {
        return Err(Error::InvalidParams("no distances given".into()));
    }
    let section = cfg.link_section;
    let template = section.template();
    let mut rows = distances
        .par_iter()
        .map(|&km| {
            if !(km >= 0.0 && km.is_finite()) {
                return Err(Error::Domain {
                    what: "distance_km",
                    value: km,
                    expected: ">= 0",
                });
            }
            let link = section.at_distance(&template, km);
            let sim = SimConfig { link, ..cfg.sim };
            let record = run_analytic(&sim)?;
            let report = key_rate(&KeyRateInputs {
                record,
                src: sim.src,
                sec: cfg.security,
                mode: cfg.mode,
            })?;
            Ok(ScanRow {
                distance_km: km,
                loss_db: link.total_atten_db(),
                r_per_pulse: report.r_per_pulse,
                r_bps: report.r_bps,
                plob_bits: plob_bound(db_to_transmittance(link.total_atten_db()))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km));
    Ok(rows)
}

fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("distance_km,loss_db,r_per_pulse,r_bps,plob_bits\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sci(r.distance_km),
            sci(r.loss_db),
            sci(r.r_per_pulse),
            sci(r.r_bps),
            sci(r.plob_bits)
        );
    }
    out
}

/// `scan --distances D,... [--config C] --out CSV`. Without a config the
/// long-distance source settings, default detectors and `N = 1e14` in
/// finite mode are used.
pub fn cmd_scan(distances: &[f64], config_path: Option<&Path>, out: Option<&Path>) -> Outcome {
    let run = || -> Result<Outcome> {
        let cfg = match config_path {
            Some(p) => simulation_config(&read_input(p)?, &p.display().to_string())?,
            None => simulation_config(DEFAULT_SCAN_CONFIG, "<default scan config>")?,
        };
        let csv = scan_csv(&scan(distances, &cfg)?);
        Ok(Outcome::ok(match out {
            Some(p) => format!("{} rows written to {}", distances.len(), write_output(p, &csv)?.display()),
            None => csv,
        }))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

const DEFAULT_SCAN_CONFIG: &str = "[sim]\nn_total = 100000000000000\nmode = \"finite\"\n";

fn phase_csv(r: &PhaseDemoResult, stride: usize) -> String {
    let t = &r.trace;
    let mut out = String::from(
        "t_s,phi_r_deg,phi_s_deg,phi_s_true_deg,offset_deg,free_drift_deg,simple_residual_deg,fine_residual_deg\n",
    );
    for k in (0..t.t.len()).step_by(stride.max(1)) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sci(t.t[k]),
            sci(t.phi_r[k]),
            sci(t.phi_s[k]),
            sci(t.phi_s_true[k]),
            sci(t.offset[k]),
            sci(t.free_drift[k]),
            sci(t.simple_residual[k]),
            sci(t.fine_residual[k])
        );
    }
    out
}

fn phase_summary(r: &PhaseDemoResult) -> String {
    let mut doc = Document::new();
    let s = doc.section("phase_residuals");
    push(s, "free_std_deg", r.free.std_deg);
    push(s, "simple_std_deg", r.simple.std_deg);
    push(s, "simple_rms_deg", r.simple.rms_deg);
    push(s, "fine_std_deg", r.fine.std_deg);
    push(s, "fine_rms_deg", r.fine.rms_deg);
    push(s, "reduction_factor", r.reduction_factor);
    push(s, "windows", r.trace.t.len() as u64);
    doc.render()
}

/// `phase-demo [--drift-config C] --out CSV`: trace CSV (every `stride`-th
/// window) plus summary statistics.
pub fn cmd_phase_demo(config_path: Option<&Path>, out: Option<&Path>, stride: usize) -> Outcome {
    let run = || -> Result<Outcome> {
        let cfg: PhaseDemoConfig = match config_path {
            Some(p) => parse_toml(&read_input(p)?, &p.display().to_string())?,
            None => PhaseDemoConfig::default(),
        };
        let result = run_phase_demo(&cfg)?;
        let mut summary = phase_summary(&result);
        if let Some(p) = out {
            let written = write_output(p, &phase_csv(&result, stride))?;
            let _ = write!(summary, "\ntrace written to {}", written.display());
        }
        Ok(Outcome::ok(summary))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    Delay,
    Polarization,
    Intensity,
}

/// `stabilize delay|polarization|intensity [--config C] --out CSV`:
/// per-step trace of time, measurement and control.
pub fn cmd_stabilize(kind: LoopKind, config_path: Option<&Path>, out: Option<&Path>) -> Outcome {
    let run = || -> Result<Outcome> {
        let text = config_path.map(read_input).transpose()?;
        let origin = config_path.map(|p| p.display().to_string()).unwrap_or_default();
        let (csv, summary) = match kind {
            LoopKind::Delay => {
                let cfg: DelayLoopConfig = match &text {
                    Some(t) => parse_toml(t, &origin)?,
                    None => DelayLoopConfig::default(),
                };
                let tr = run_delay_loop(&cfg)?;
                let mut csv = String::from("t_s,delay_ps,measured_ps,control_ps\n");
                for k in 0..tr.t_s.len() {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{}",
                        sci(tr.t_s[k]),
                        sci(tr.delay_ps[k]),
                        sci(tr.measured_ps[k]),
                        sci(tr.control_ps[k])
                    );
                }
                (csv, format!("delay residual std = {} ps", sci(tr.residual_std_ps)))
            }
            LoopKind::Polarization => {
                let cfg: PolarizationConfig = match &text {
                    Some(t) => parse_toml(t, &origin)?,
                    None => PolarizationConfig::default(),
                };
                let tr = run_polarization_loop(&cfg, PolarizationState::default())?;
                let mut csv = String::from("t_s,rate_l1_hz,rate_l2_hz,mode,adj_1,adj_2,adj_3,adj_4\n");
                for k in 0..tr.t_s.len() {
                    let a = tr.adjustment[k];
                    let mode = match tr.mode[k] {
                        crate::stabilize::PolarizationMode::AdjustL1 => "adjust-l1",
                        crate::stabilize::PolarizationMode::MinimizeL2 => "minimize-l2",
                        crate::stabilize::PolarizationMode::Idle => "idle",
                    };
                    let _ = writeln!(
                        csv,
                        "{},{},{},{mode},{},{},{},{}",
                        sci(tr.t_s[k]),
                        sci(tr.rate_l1_hz[k]),
                        sci(tr.rate_l2_hz[k]),
                        sci(a[0]),
                        sci(a[1]),
                        sci(a[2]),
                        sci(a[3])
                    );
                }
                (
                    csv,
                    format!("l1 in band {:.4}, l2 under cap {:.4}", tr.l1_in_band, tr.l2_under_cap),
                )
            }
            LoopKind::Intensity => {
                let cfg: IntensityLoopConfig = match &text {
                    Some(t) => parse_toml(t, &origin)?,
                    None => IntensityLoopConfig::default(),
                };
                let tr = run_intensity_loop(&cfg)?;
                let mut csv = String::from("t_s,ratio_true,ratio_meas,correction_v\n");
                for k in 0..tr.t_s.len() {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{}",
                        sci(tr.t_s[k]),
                        sci(tr.ratio_true[k]),
                        sci(tr.ratio_meas[k]),
                        sci(tr.correction_v[k])
                    );
                }
                (csv, format!("relative ratio error = {}", sci(tr.relative_error)))
            }
        };
        Ok(Outcome::ok(match out {
            Some(p) => format!("{summary}\ntrace written to {}", write_output(p, &csv)?.display()),
            None => csv,
        }))
    };
    run().unwrap_or_else(|e| Outcome::from_error(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_csv_shape() {
        let cfg = simulation_config(DEFAULT_SCAN_CONFIG, "x").unwrap();
        let rows = scan(&[952.0, 202.0], &cfg).unwrap();
        assert_eq!(rows[0].distance_km, 202.0);
        let csv = scan_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("distance_km,loss_db,r_per_pulse,r_bps,plob_bits\n"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn link_section_variants() {
        let cfg = simulation_config("[link]\npreset_km = 1002\n[sim]\nn_total = 1000\n", "x").unwrap();
        assert_eq!(cfg.sim.link.atten_ac_db, 78.3);
        let cfg = simulation_config("[link]\ntotal_km = 100.0\ndb_per_km = 0.2\n[sim]\nn_total = 1000\n", "x").unwrap();
        assert!((cfg.sim.link.total_atten_db() - 20.0).abs() < 1e-12);
        assert!(matches!(
            simulation_config("[link]\npreset_km = 5\n[sim]\nn_total = 1000\n", "x"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            simulation_config("[sim]\nn_total = 1000\nbogus = 1\n", "x"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn parse_errors_exit_two() {
        assert_eq!(Outcome::from_error(&Error::Parse("x".into())).exit_code, 2);
        assert_eq!(Outcome::from_error(&Error::Io("x".into())).exit_code, 1);
    }
}
