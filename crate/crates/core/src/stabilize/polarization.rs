//! Two-wavelength polarization control with a four-paddle controller.
//!
//! Stokes vectors live on the unit sphere; the monitor port of the
//! polarization beam splitter passes the fraction `(1 - s_z) / 2`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Rodrigues rotation about unit axis `n` by `angle` radians.
fn rotation(n: Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = n;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn apply(m: &Mat3, v: Vec3) -> Vec3 {
    [0, 1, 2].map(|i| (0..3).map(|k| m[i][k] * v[k]).sum())
}

/// Paddle axes of the polarization controller: alternating 0 and 45 degree
/// linear retarders.
const PADDLE_AXES: [Vec3; 4] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

/// Fiber plant: a common drifting rotation for both wavelengths plus a
/// differential rotation of the second wavelength about a wandering axis.
///
/// Drift is smooth: the rotation rates are Ornstein-Uhlenbeck processes
/// with correlation time `drift_corr_s`, so over hours the state wanders
/// like a random walk while staying nearly constant over a few updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizationPlant {
    /// Monitor rate at full leakage.
    pub max_rate_l1_hz: f64,
    pub max_rate_l2_hz: f64,
    pub dark_l2_hz: f64,
    /// RMS common rotation rate per axis (degrees per second).
    pub drift_deg_per_s: f64,
    pub drift_corr_s: f64,
    /// Differential rotation angle between the wavelengths (degrees).
    pub differential_deg: f64,
    /// RMS rate of the differential axis azimuth (degrees per second).
    pub axis_drift_deg_per_s: f64,
}

impl Default for PolarizationPlant {
    fn default() -> Self {
        PolarizationPlant {
            max_rate_l1_hz: 8e6,
            max_rate_l2_hz: 3e5,
            dark_l2_hz: 20.0,
            drift_deg_per_s: 0.005,
            drift_corr_s: 1800.0,
            differential_deg: 16.0,
            axis_drift_deg_per_s: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizationMode {
    AdjustL1,
    MinimizeL2,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Probe {
    Baseline,
    Plus,
    Minus,
}

/// Margin inside the first-wavelength band kept while minimizing the second.
const GUARD: f64 = 1.1;

/// Controller memory and settings. Rates in Hz, steps in paddle radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub mode: PolarizationMode,
    pub l1_low_hz: f64,
    pub l1_high_hz: f64,
    pub l1_target_hz: f64,
    /// Relative distance to `l1_target_hz` that ends the first step.
    pub l1_tolerance: f64,
    pub l2_target_hz: f64,
    pub l2_cap_hz: f64,
    pub max_step: f64,
    /// Probe cap while minimizing the second wavelength; small enough that
    /// a probe cannot carry the first wavelength across a band edge.
    pub l2_max_step: f64,
    pub min_step: f64,
    /// Counting time behind each rate, used to tell real improvements of
    /// the second wavelength from Poisson noise.
    pub integration_s: f64,
    paddle: usize,
    probe: Probe,
    step: f64,
    baseline: f64,
    /// Paddles probed in a row without an accepted move.
    misses: u32,
    /// Scale on second-wavelength probes; halves when a probe reaches the
    /// first wavelength's edge margin, recovers on clean progress.
    reach: f64,
}

impl Default for PolarizationState {
    fn default() -> Self {
        PolarizationState {
            mode: PolarizationMode::AdjustL1,
            l1_low_hz: 75e3,
            l1_high_hz: 300e3,
            l1_target_hz: 100e3,
            l1_tolerance: 0.1,
            l2_target_hz: 100.0,
            l2_cap_hz: 150.0,
            max_step: 3f64.to_radians(),
            l2_max_step: 1.5f64.to_radians(),
            min_step: 0.3f64.to_radians(),
            integration_s: 1.0,
            paddle: 0,
            probe: Probe::Baseline,
            step: 0.0,
            baseline: 0.0,
            misses: 0,
            reach: 1.0,
        }
    }
}

impl PolarizationState {
    fn l1_in_band(&self, r1: f64) -> bool {
        (self.l1_low_hz..=self.l1_high_hz).contains(&r1)
    }

    fn cost(&self, r1: f64, r2: f64) -> f64 {
        match self.mode {
            PolarizationMode::AdjustL1 => (r1.max(1.0) / self.l1_target_hz).ln().abs(),
            // Getting the first wavelength back inside a margin from the
            // band edges outranks any change of the second, so the search
            // goes around the edge rather than through it.
            _ => r2 + 1e12 * self.edge_violation(r1),
        }
    }

    /// Log-distance of `r1` into the margin at either band edge.
    fn edge_violation(&self, r1: f64) -> f64 {
        (self.l1_low_hz * GUARD / r1.max(1.0)).ln().max(0.0) + (r1 * GUARD / self.l1_high_hz).ln().max(0.0)
    }

    /// Whether `c` beats the baseline by more than the noise of comparing
    /// two count-rate measurements.
    ///
    /// After two full paddle cycles without progress far from the target,
    /// a move up to 10% worse is taken once to leave a flat stretch; the
    /// second-wavelength rate is maximal along the first wavelength's
    /// level set opposite its optimum, and only a sideways move escapes.
    fn improves(&self, c: f64) -> bool {
        if self.mode == PolarizationMode::AdjustL1 {
            return c < self.baseline;
        }
        let far = self.baseline >= 20.0 * self.l2_target_hz && self.baseline < 1e12 * 1e-6;
        if far && self.misses >= 8 {
            return c < self.baseline * 1.1;
        }
        let margin = (2.0 * self.baseline.clamp(1.0, 1e9) / self.integration_s.max(1e-9)).sqrt();
        c < self.baseline - margin
    }

    /// Probe amplitude, smaller near the target.
    fn step_size(&self, r1: f64, r2: f64) -> f64 {
        let (closeness, cap) = match self.mode {
            PolarizationMode::AdjustL1 => ((r1.max(1.0) / self.l1_target_hz).ln().abs() / 4f64.ln(), self.max_step),
            _ => ((r2.max(0.0) / (5.0 * self.l2_target_hz)).sqrt(), self.l2_max_step),
        };
        if self.mode != PolarizationMode::MinimizeL2 {
            return (cap * closeness.min(1.0)).max(self.min_step);
        }
        let step = (cap * closeness.min(1.0) * self.reach).max(self.min_step);
        if closeness >= 1.0 {
            // Far from the target a flat stretch is a stall, not the optimum:
            // widen the probe every full paddle cycle without progress.
            (step * 2f64.powi((self.misses / 4).min(8) as i32)).min(self.max_step)
        } else {
            step
        }
    }
}

/// One controller update from the rates measured after the previous
/// adjustment. Returns the paddle adjustments to apply next.
///
/// Step one drives the first wavelength toward its target; step two
/// minimizes the second wavelength while the first stays in band. The
/// controller idles once the second wavelength is at its target and wakes
/// when either rate leaves its range. Each paddle is probed by `+step`,
/// then `-step`, keeping moves that lower the cost; a paddle with no
/// improvement is restored and its point re-measured before the next.
pub fn polarization_step(state: PolarizationState, rate_l1: f64, rate_l2: f64) -> (PolarizationState, [f64; 4]) {
    use PolarizationMode::*;
    let mut s = state;
    let (r1, r2) = (rate_l1.max(0.0), rate_l2.max(0.0));
    let in_band = s.l1_in_band(r1);
    let next_mode = match s.mode {
        AdjustL1 if ((r1 - s.l1_target_hz) / s.l1_target_hz).abs() <= s.l1_tolerance => {
            if r2 <= s.l2_target_hz { Idle } else { MinimizeL2 }
        }
        AdjustL1 => AdjustL1,
        MinimizeL2 if !in_band => AdjustL1,
        MinimizeL2 if r2 <= s.l2_target_hz => Idle,
        MinimizeL2 => MinimizeL2,
        Idle if !in_band => AdjustL1,
        Idle if r2 > s.l2_cap_hz => MinimizeL2,
        Idle => Idle,
    };
    let mut adj = [0.0; 4];
    if s.mode == MinimizeL2 && (next_mode == AdjustL1 || s.edge_violation(r1) > 0.0) {
        s.reach = (s.reach / 2.0).max(1.0 / 16.0);
    }
    if next_mode != s.mode {
        s.mode = next_mode;
        s.probe = Probe::Baseline;
        s.misses = 0;
    }
    if s.mode == Idle {
        return (s, adj);
    }
    let c = s.cost(r1, r2);
    match s.probe {
        Probe::Baseline => {
            s.baseline = c;
            s.step = s.step_size(r1, r2);
            adj[s.paddle] = s.step;
            s.probe = Probe::Plus;
        }
        Probe::Plus if s.improves(c) => {
            s.baseline = c;
            s.misses = 0;
            s.reach = (s.reach * 1.2).min(1.0);
            adj[s.paddle] = s.step;
        }
        Probe::Plus => {
            adj[s.paddle] = -2.0 * s.step;
            s.probe = Probe::Minus;
        }
        Probe::Minus if s.improves(c) => {
            s.baseline = c;
            s.misses = 0;
            s.reach = (s.reach * 1.2).min(1.0);
            adj[s.paddle] = -s.step;
        }
        Probe::Minus => {
            // Undo and re-measure there before the next paddle; a stale
            // baseline under drift would reject every later probe.
            adj[s.paddle] = s.step;
            s.paddle = (s.paddle + 1) % 4;
            s.probe = Probe::Baseline;
            s.misses += 1;
        }
    }
    (s, adj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizationConfig {
    pub duration_s: f64,
    /// Measurement integration and update period.
    pub step_s: f64,
    pub plant: PolarizationPlant,
    pub feedback: bool,
    pub seed: u64,
}

impl Default for PolarizationConfig {
    fn default() -> Self {
        PolarizationConfig {
            duration_s: 9.0 * 3600.0,
            step_s: 1.0,
            plant: PolarizationPlant::default(),
            feedback: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PolarizationTrace {
    pub t_s: Vec<f64>,
    pub rate_l1_hz: Vec<f64>,
    pub rate_l2_hz: Vec<f64>,
    pub mode: Vec<PolarizationMode>,
    pub adjustment: Vec<[f64; 4]>,
    /// Fraction of steps with the first wavelength in band.
    pub l1_in_band: f64,
    /// Fraction of steps with the second wavelength at or below its cap.
    pub l2_under_cap: f64,
}

/// Simulates the plant with measured (Poisson) monitor rates.
pub fn run_polarization_loop(cfg: &PolarizationConfig, controller: PolarizationState) -> Result<PolarizationTrace> {
    if !(cfg.step_s > 0.0 && cfg.duration_s >= cfg.step_s) {
        return Err(Error::InvalidParams("need 0 < step_s <= duration_s".into()));
    }
    let p = &cfg.plant;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    if !(p.drift_corr_s > 0.0) {
        return Err(Error::InvalidParams("drift_corr_s must be > 0".into()));
    }
    // Exact OU update over one step.
    let keep = (-cfg.step_s / p.drift_corr_s).exp();
    let fresh = (1.0 - keep * keep).sqrt();

    // Arbitrary initial fiber state: uniform random rotation, random axis
    // azimuth. The controller starts from paddles at zero.
    let mut paddles = [0.0; 4];
    let mut common = {
        let g = [0, 1, 2].map(|_| unit.sample(&mut rng));
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        // Haar angle density is (1 - cos a) / pi on [0, pi]; rejection sample.
        let angle = loop {
            let a = rng.random_range(0.0..PI);
            if rng.random::<f64>() * 2.0 <= 1.0 - a.cos() {
                break a;
            }
        };
        rotation(g.map(|x| x / n), angle)
    };
    let mut azimuth: f64 = rng.random_range(0.0..TAU);
    let mut omega: Vec3 = [0, 1, 2].map(|_| p.drift_deg_per_s * unit.sample(&mut rng));
    let mut azimuth_rate = p.axis_drift_deg_per_s * unit.sample(&mut rng);
    let input: Vec3 = [0.0, 0.0, 1.0];
    let paddle_matrix = |v: &[f64; 4]| {
        v.iter()
            .zip(PADDLE_AXES)
            .fold(IDENTITY, |acc, (a, axis)| mul(&rotation(axis, *a), &acc))
    };

    let count = |rate: f64, rng: &mut ChaCha8Rng| -> f64 {
        let m = rate * cfg.step_s;
        if m > 0.0 {
            Poisson::new(m).map_or(0.0, |d| d.sample(rng)) / cfg.step_s
        } else {
            0.0
        }
    };

    let steps = (cfg.duration_s / cfg.step_s).floor() as usize;
    let mut trace = PolarizationTrace::default();
    let mut state = controller;
    let (mut in_band, mut under_cap) = (0usize, 0usize);
    for k in 0..steps {
        for w in omega.iter_mut() {
            *w = keep * *w + fresh * p.drift_deg_per_s * unit.sample(&mut rng);
        }
        let speed = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
        if speed > 0.0 {
            common = mul(&rotation(omega.map(|x| x / speed), (speed * cfg.step_s).to_radians()), &common);
        }
        azimuth_rate = keep * azimuth_rate + fresh * p.axis_drift_deg_per_s * unit.sample(&mut rng);
        azimuth += (azimuth_rate * cfg.step_s).to_radians();
        let diff_axis = [azimuth.cos(), azimuth.sin(), 0.0];

        let s1 = apply(&common, apply(&paddle_matrix(&paddles), input));
        let s2 = apply(&rotation(diff_axis, p.differential_deg.to_radians()), s1);
        let r1 = count(p.max_rate_l1_hz * (1.0 - s1[2]) / 2.0, &mut rng);
        let r2 = count(p.max_rate_l2_hz * (1.0 - s2[2]) / 2.0 + p.dark_l2_hz, &mut rng);

        let adj = if cfg.feedback {
            let (next, adj) = polarization_step(state, r1, r2);
            state = next;
            adj
        } else {
            [0.0; 4]
        };
        for (v, a) in paddles.iter_mut().zip(adj) {
            *v += a;
        }
        in_band += state.l1_in_band(r1) as usize;
        under_cap += (r2 <= state.l2_cap_hz) as usize;
        trace.t_s.push(k as f64 * cfg.step_s);
        trace.rate_l1_hz.push(r1);
        trace.rate_l2_hz.push(r2);
        trace.mode.push(state.mode);
        trace.adjustment.push(adj);
    }
    trace.l1_in_band = in_band as f64 / steps as f64;
    trace.l2_under_cap = under_cap as f64 / steps as f64;
    Ok(trace)
}
