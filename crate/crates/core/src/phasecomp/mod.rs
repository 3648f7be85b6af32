//! Dual-band phase estimation by post-processing.
//!
//! A bright reference at wavelength `lambda1` is interfered with four
//! modulated phase differences `{0, 90, 180, 270}` degrees; detector 1
//! clicks with probability `cos^2((dtheta + phi) / 2)` where `phi` is the
//! channel phase. The channel phase of each 40 us window is the grid
//! argmin of
//!
//! ```text
//! Err(d) = sum_i p_i (1 - cos^2((dtheta_i + d) / 2))^2,   p_i = 2 N_i / sum N
//! ```
//!
//! Window estimates are unwrapped, scaled to the signal wavelength and
//! shifted by an inter-wavelength offset fitted on weak same-wavelength
//! reference detections.

mod demo;

use serde::Serialize;

pub use demo::{run_phase_demo, DriftModel, PhaseDemoConfig, PhaseDemoResult};

use crate::error::{Error, Result};

/// Modulated phase differences (degrees) of the four reference settings.
/// The set `{0, 90, -90, 180}` is the same modulo 360.
pub const SETTINGS_DEG: [f64; 4] = [0.0, 90.0, 180.0, 270.0];

/// `sin^4(x / 2)` on integer degrees: the per-detection error term
/// `(1 - cos^2(x/2))^2`.
fn error_term_table() -> &'static [f64; 360] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; 360]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 360];
        for (d, v) in t.iter_mut().enumerate() {
            let c = (d as f64).to_radians() / 2.0;
            *v = (1.0 - c.cos().powi(2)).powi(2);
        }
        t
    })
}

/// Detection counts of one statistic window, per modulated setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceWindow {
    pub counts: [u64; 4],
}

impl ReferenceWindow {
    /// Combines both detectors: the second detector sees the complementary
    /// fringe, i.e. behaves like detector 1 shifted by 180 degrees.
    pub fn from_detectors(det1: [u64; 4], det2: [u64; 4]) -> Self {
        let mut counts = det1;
        for i in 0..4 {
            counts[i] += det2[(i + 2) % 4];
        }
        ReferenceWindow { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `Err(d)` for every integer degree `d`.
pub fn window_error_profile(w: &ReferenceWindow) -> Result<[f64; 360]> {
    let total = w.total();
    if total == 0 {
        return Err(Error::EmptyWindow);
    }
    let table = error_term_table();
    let p = w.counts.map(|n| 2.0 * n as f64 / total as f64);
    let mut out = [0.0; 360];
    for (d, v) in out.iter_mut().enumerate() {
        *v = (0..4).map(|i| p[i] * table[(90 * i + d) % 360]).sum();
    }
    Ok(out)
}

fn argmin(profile: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in profile.iter().enumerate() {
        if v < profile[best] {
            best = i;
        }
    }
    best
}

/// Channel phase of one window in integer degrees, `[0, 360)`. Ties go to
/// the smallest angle.
pub fn estimate_window_phase(w: &ReferenceWindow) -> Result<f64> {
    Ok(argmin(&window_error_profile(w)?) as f64)
}

/// Makes a wrapped series continuous by choosing each step modulo 360 with
/// magnitude below 180 degrees.
pub fn unwrap(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let Some(&first) = series.first() else {
        return out;
    };
    out.push(first);
    let mut prev_raw = first;
    let mut prev = first;
    for &x in &series[1..] {
        let step = wrap_signed(x - prev_raw);
        prev += step;
        prev_raw = x;
        out.push(prev);
    }
    out
}

/// Maps an angle to `[-180, 180)`.
pub fn wrap_signed(deg: f64) -> f64 {
    (deg + 180.0).rem_euclid(360.0) - 180.0
}

/// `phi_s = phi_r * lambda2 / lambda1 + offset`, elementwise.
pub fn scale_to_signal(phi_r: &[f64], lambda1: f64, lambda2: f64, offset: f64) -> Result<Vec<f64>> {
    for (what, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v > 0.0) {
            return Err(Error::Domain {
                what,
                value: v,
                expected: "> 0",
            });
        }
    }
    let k = lambda2 / lambda1;
    Ok(phi_r.iter().map(|p| p * k + offset).collect())
}

/// One weak-reference detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimDetection {
    /// Modulated phase difference (degrees).
    pub dtheta_deg: f64,
    /// Channel phase scaled to the signal wavelength (degrees).
    pub scaled_phase_deg: f64,
    /// 1 or 2.
    pub detector: u8,
}

/// Fits the inter-wavelength offset of one refresh segment.
///
/// Detections are binned by total phase `dtheta + scaled` (plus 180 for
/// detector 2) at 1 degree; the offset is the grid argmin of
/// `sum_b n_b (1 - cos^2((psi_b + d) / 2))^2`.
pub fn estimate_offset(detections: &[DimDetection]) -> Result<f64> {
    if detections.is_empty() {
        return Err(Error::InsufficientData("no dim-reference detections in segment".into()));
    }
    let mut bins = [0u64; 360];
    for d in detections {
        let flip = if d.detector == 2 { 180.0 } else { 0.0 };
        let psi = (d.dtheta_deg + d.scaled_phase_deg + flip).rem_euclid(360.0);
        bins[(psi.round() as usize) % 360] += 1;
    }
    let table = error_term_table();
    let occupied: Vec<(usize, f64)> = bins
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(b, &n)| (b, n as f64))
        .collect();
    let profile: Vec<f64> = (0..360)
        .map(|d| occupied.iter().map(|&(b, n)| n * table[(b + d) % 360]).sum())
        .collect();
    Ok(argmin(&profile) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    /// Standard deviation of the shortest-arc differences (degrees).
    pub std_deg: f64,
    pub rms_deg: f64,
    pub mean_deg: f64,
}

/// Circular-aware spread of `estimate - truth`.
pub fn residual_stats(estimate: &[f64], truth: &[f64]) -> Result<ResidualStats> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimate.len(),
            right: truth.len(),
        });
    }
    if estimate.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let diffs: Vec<f64> = estimate.iter().zip(truth).map(|(e, t)| wrap_signed(e - t)).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let ms = diffs.iter().map(|d| d * d).sum::<f64>() / n;
    Ok(ResidualStats {
        std_deg: var.sqrt(),
        rms_deg: ms.sqrt(),
        mean_deg: mean,
    })
}

/// Spread of the uncompensated drift (plain standard deviation of the
/// unwrapped series) over the spread of the residual.
pub fn reduction_factor(free_drift: &[f64], residual_std: f64) -> f64 {
    let n = free_drift.len() as f64;
    let mean = free_drift.iter().sum::<f64>() / n;
    let std = (free_drift.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    std / residual_std
}
