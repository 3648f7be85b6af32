//! Synthetic end-to-end run: drifting fiber phase, strong-reference window
//! counts, weak-reference detections, and the three compensation traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    estimate_offset, estimate_window_phase, reduction_factor, residual_stats, unwrap, wrap_signed,
    DimDetection, ReferenceWindow, ResidualStats, SETTINGS_DEG,
};
use crate::error::{Error, Result};

/// Reference-band phase `initial + rate t + A sin(2 pi f t) + walk(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftModel {
    pub initial_deg: f64,
    pub rate_deg_per_s: f64,
    pub osc_amplitude_deg: f64,
    pub osc_freq_hz: f64,
    /// Random-walk diffusion, degrees per square-root second.
    pub walk_deg_per_sqrt_s: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel {
            initial_deg: 0.0,
            rate_deg_per_s: 1800.0,
            osc_amplitude_deg: 120.0,
            osc_freq_hz: 30.0,
            walk_deg_per_sqrt_s: 60.0,
        }
    }
}

impl DriftModel {
    pub const NONE: DriftModel = DriftModel {
        initial_deg: 0.0,
        rate_deg_per_s: 0.0,
        osc_amplitude_deg: 0.0,
        osc_freq_hz: 0.0,
        walk_deg_per_sqrt_s: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseDemoConfig {
    pub duration_s: f64,
    pub window_us: f64,
    pub segment_ms: f64,
    /// Strong-reference wavelength (nm).
    pub lambda1_nm: f64,
    /// Signal and weak-reference wavelength (nm).
    pub lambda2_nm: f64,
    /// Strong-reference detections per second, per detector.
    pub ref_rate_hz: f64,
    /// Weak-reference detections per second, per detector.
    pub dim_rate_hz: f64,
    /// Extra Gaussian phase jitter on weak-reference detections.
    pub dim_phase_noise_deg: f64,
    /// True inter-wavelength offset.
    pub offset_deg: f64,
    /// Expected counts are rounded instead of sampled; weak-reference
    /// detections are placed deterministically.
    pub noiseless: bool,
    pub seed: u64,
    pub drift: DriftModel,
}

impl Default for PhaseDemoConfig {
    fn default() -> Self {
        PhaseDemoConfig {
            duration_s: 5.0,
            window_us: 40.0,
            segment_ms: 500.0,
            lambda1_nm: 1548.51,
            lambda2_nm: 1550.12,
            ref_rate_hz: 1e6,
            dim_rate_hz: 1e3,
            dim_phase_noise_deg: 0.0,
            offset_deg: 37.0,
            noiseless: false,
            seed: 0,
            drift: DriftModel::default(),
        }
    }
}

impl PhaseDemoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("duration_s", self.duration_s),
            ("window_us", self.window_us),
            ("segment_ms", self.segment_ms),
            ("lambda1_nm", self.lambda1_nm),
            ("lambda2_nm", self.lambda2_nm),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain { what, value: v, expected: "> 0" });
            }
        }
        let non_negative = [
            ("ref_rate_hz", self.ref_rate_hz),
            ("dim_rate_hz", self.dim_rate_hz),
            ("dim_phase_noise_deg", self.dim_phase_noise_deg),
            ("walk_deg_per_sqrt_s", self.drift.walk_deg_per_sqrt_s),
        ];
        for (what, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain { what, value: v, expected: ">= 0" });
            }
        }
        if self.segment_ms * 1e3 < self.window_us {
            return Err(Error::InvalidParams("segment shorter than one window".into()));
        }
        Ok(())
    }

    fn windows(&self) -> usize {
        (self.duration_s * 1e6 / self.window_us).floor() as usize
    }

    fn windows_per_segment(&self) -> usize {
        ((self.segment_ms * 1e3 / self.window_us).round() as usize).max(1)
    }
}

/// Time-indexed phases of one run, sampled at window centers (degrees).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseTrace {
    pub t: Vec<f64>,
    /// Unwrapped strong-reference estimate.
    pub phi_r: Vec<f64>,
    /// Signal-phase estimate with per-segment offsets.
    pub phi_s: Vec<f64>,
    /// Offset applied to each sample.
    pub offset: Vec<f64>,
    pub phi_s_true: Vec<f64>,
    /// Signal phase relative to its start with no compensation.
    pub free_drift: Vec<f64>,
    pub simple_residual: Vec<f64>,
    pub fine_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDemoResult {
    pub trace: PhaseTrace,
    pub free: ResidualStats,
    pub simple: ResidualStats,
    pub fine: ResidualStats,
    pub reduction_factor: f64,
    pub segment_offsets: Vec<f64>,
}

fn drift_path(cfg: &PhaseDemoConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = cfg.windows();
    let dt = cfg.window_us * 1e-6;
    let d = &cfg.drift;
    let walk = Normal::new(0.0, d.walk_deg_per_sqrt_s * dt.sqrt())
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut acc = 0.0;
    Ok((0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            if d.walk_deg_per_sqrt_s > 0.0 {
                acc += walk.sample(rng);
            }
            d.initial_deg
                + d.rate_deg_per_s * t
                + d.osc_amplitude_deg * (std::f64::consts::TAU * d.osc_freq_hz * t).sin()
                + acc
        })
        .collect())
}

fn p_first(total_deg: f64) -> f64 {
    (total_deg.to_radians() / 2.0).cos().powi(2)
}

fn count(mean: f64, noiseless: bool, rng: &mut ChaCha8Rng) -> u64 {
    if noiseless {
        mean.round() as u64
    } else if mean > 0.0 {
        Poisson::new(mean).map_or(0, |p| p.sample(rng) as u64)
    } else {
        0
    }
}

fn reference_windows(cfg: &PhaseDemoConfig, phi_r: &[f64], rng: &mut ChaCha8Rng) -> Vec<ReferenceWindow> {
    // Each setting holds a quarter of the window; a detector averages half
    // the light, so the per-detector rate is recovered over the window.
    let per_setting = 2.0 * cfg.ref_rate_hz * cfg.window_us * 1e-6 / 4.0;
    phi_r
        .iter()
        .map(|&phi| {
            let mut d1 = [0; 4];
            let mut d2 = [0; 4];
            for i in 0..4 {
                let p = p_first(SETTINGS_DEG[i] + phi);
                d1[i] = count(per_setting * p, cfg.noiseless, rng);
                d2[i] = count(per_setting * (1.0 - p), cfg.noiseless, rng);
            }
            ReferenceWindow::from_detectors(d1, d2)
        })
        .collect()
}

/// Weak-reference detections: (window index, setting, detector).
fn dim_events(cfg: &PhaseDemoConfig, phi_s_true: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<(usize, f64, u8)>> {
    let n = phi_s_true.len();
    let mean = 2.0 * cfg.dim_rate_hz * n as f64 * cfg.window_us * 1e-6;
    let noise = Normal::new(0.0, cfg.dim_phase_noise_deg).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut out = Vec::new();
    if cfg.noiseless {
        let golden = 0.618_033_988_749_894_9;
        let m = mean.round() as usize;
        for j in 0..m {
            let w = j * n / m.max(1);
            let dtheta = SETTINGS_DEG[j % 4];
            let u = (j as f64 * golden).fract();
            let det = if u < p_first(dtheta + phi_s_true[w]) { 1 } else { 2 };
            out.push((w, dtheta, det));
        }
        return Ok(out);
    }
    let m = count(mean, false, rng) as usize;
    for _ in 0..m {
        let w = rng.random_range(0..n);
        let dtheta = SETTINGS_DEG[rng.random_range(0..4)];
        let jitter = if cfg.dim_phase_noise_deg > 0.0 { noise.sample(rng) } else { 0.0 };
        let det = if rng.random::<f64>() < p_first(dtheta + phi_s_true[w] + jitter) { 1 } else { 2 };
        out.push((w, dtheta, det));
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

/// Offset of every segment, fitting detections against `scaled`.
fn segment_offsets(events: &[(usize, f64, u8)], scaled: &[f64], per_segment: usize) -> Result<Vec<f64>> {
    let segments = scaled.len().div_ceil(per_segment);
    (0..segments)
        .map(|s| {
            let dets: Vec<DimDetection> = events
                .iter()
                .filter(|e| e.0 / per_segment == s)
                .map(|&(w, dtheta, detector)| DimDetection {
                    dtheta_deg: dtheta,
                    scaled_phase_deg: scaled[w],
                    detector,
                })
                .collect();
            estimate_offset(&dets)
        })
        .collect()
}

/// Runs the whole chain: drift, window counts, window estimates, unwrap,
/// wavelength scaling and per-segment offset fitting.
///
/// The simple trace applies `phi_s = phi_r + offset` with the offset of the
/// first segment held throughout; the fine trace applies
/// `phi_s = phi_r * lambda2 / lambda1 + offset` refreshed every segment.
pub fn run_phase_demo(cfg: &PhaseDemoConfig) -> Result<PhaseDemoResult> {
    cfg.validate()?;
    let n = cfg.windows();
    if n < 2 {
        return Err(Error::InsufficientData("run shorter than two windows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ratio = cfg.lambda2_nm / cfg.lambda1_nm;
    let phi_r_true = drift_path(cfg, &mut rng)?;
    let phi_s_true: Vec<f64> = phi_r_true.iter().map(|p| p * ratio + cfg.offset_deg).collect();

    let windows = reference_windows(cfg, &phi_r_true, &mut rng);
    let wrapped: Vec<f64> = windows
        .par_iter()
        .map(estimate_window_phase)
        .collect::<Result<_>>()?;
    let phi_r = unwrap(&wrapped);

    let events = dim_events(cfg, &phi_s_true, &mut rng)?;
    let per_segment = cfg.windows_per_segment();
    let scaled: Vec<f64> = phi_r.iter().map(|p| p * ratio).collect();
    let fine_offsets = segment_offsets(&events, &scaled, per_segment)?;
    let first: Vec<DimDetection> = events
        .iter()
        .take_while(|e| e.0 < per_segment)
        .map(|&(w, dtheta, detector)| DimDetection {
            dtheta_deg: dtheta,
            scaled_phase_deg: phi_r[w],
            detector,
        })
        .collect();
    let simple_offset = estimate_offset(&first)?;

    let mut trace = PhaseTrace::default();
    for k in 0..n {
        let off = fine_offsets[k / per_segment];
        let phi_s = scaled[k] + off;
        trace.t.push((k as f64 + 0.5) * cfg.window_us * 1e-6);
        trace.phi_r.push(phi_r[k]);
        trace.phi_s.push(phi_s);
        trace.offset.push(off);
        trace.phi_s_true.push(phi_s_true[k]);
        trace.free_drift.push(phi_s_true[k] - phi_s_true[0]);
        trace.simple_residual.push(wrap_signed(phi_r[k] + simple_offset - phi_s_true[k]));
        trace.fine_residual.push(wrap_signed(phi_s - phi_s_true[k]));
    }
    let zeros = vec![0.0; n];
    let free_wrapped: Vec<f64> = trace.free_drift.iter().map(|d| wrap_signed(*d)).collect();
    let free = residual_stats(&free_wrapped, &zeros)?;
    let simple = residual_stats(&trace.simple_residual, &zeros)?;
    let fine = residual_stats(&trace.phi_s, &trace.phi_s_true)?;
    let factor = reduction_factor(&trace.free_drift, fine.std_deg);
    Ok(PhaseDemoResult {
        trace,
        free,
        simple,
        fine,
        reduction_factor: factor,
        segment_offsets: fine_offsets,
    })
}
