use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::edge::{rising_edge_arrival, PulseHistogram};
use super::{mean_std, pid_step, LoopState, PidGains};
use crate::error::{Error, Result};

/// Trapezoidal reference pulse as seen in an accumulated histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseShape {
    pub bin_width_ps: f64,
    /// 0 to 100% rise time.
    pub rise_ps: f64,
    /// Flat top duration.
    pub width_ps: f64,
    /// Counts per bin at the top, per accumulation.
    pub peak_counts: f64,
    pub background: f64,
    /// Histogram span before the nominal edge.
    pub lead_ps: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape {
            bin_width_ps: 10.0,
            rise_ps: 1000.0,
            width_ps: 240_000.0,
            peak_counts: 1000.0,
            background: 5.0,
            lead_ps: 5_000.0,
        }
    }
}

impl PulseShape {
    fn level(&self, t: f64, t_start: f64) -> f64 {
        let x = t - t_start;
        let top = if x <= 0.0 {
            0.0
        } else if x < self.rise_ps {
            x / self.rise_ps
        } else if x < self.rise_ps + self.width_ps {
            1.0
        } else {
            0.0
        };
        self.background + self.peak_counts * top
    }

    fn bins(&self) -> usize {
        ((self.lead_ps + self.rise_ps + self.width_ps) / self.bin_width_ps).ceil() as usize
    }

    /// Expected (rounded) histogram of a pulse whose rise begins at
    /// `t_start`; bin 0 begins `lead_ps` before zero delay.
    pub fn expected(&self, t_start: f64) -> PulseHistogram {
        let start_ps = -self.lead_ps;
        let counts = (0..self.bins())
            .map(|i| {
                let t = start_ps + (i as f64 + 0.5) * self.bin_width_ps;
                self.level(t, t_start).round() as u64
            })
            .collect();
        PulseHistogram {
            start_ps,
            bin_width_ps: self.bin_width_ps,
            counts,
        }
    }

    /// Poisson-sampled histogram of a pulse starting at `t_start`; bin 0
    /// begins `lead_ps` before zero delay.
    pub fn sample(&self, t_start: f64, rng: &mut ChaCha8Rng) -> PulseHistogram {
        let start_ps = -self.lead_ps;
        let counts = (0..self.bins())
            .map(|i| {
                let m = self.level(start_ps + (i as f64 + 0.5) * self.bin_width_ps, t_start);
                if m > 0.0 {
                    Poisson::new(m).map_or(0, |p| p.sample(rng) as u64)
                } else {
                    0
                }
            })
            .collect();
        PulseHistogram {
            start_ps,
            bin_width_ps: self.bin_width_ps,
            counts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayLoopConfig {
    pub duration_s: f64,
    /// Histogram accumulation and feedback period.
    pub step_s: f64,
    /// Free drift of the relative delay.
    pub ramp_ps_per_s: f64,
    pub gains: PidGains,
    /// Clock-correction range (ps).
    pub limit_ps: f64,
    pub pulse: PulseShape,
    pub seed: u64,
}

impl Default for DelayLoopConfig {
    fn default() -> Self {
        DelayLoopConfig {
            duration_s: 7.0 * 3600.0,
            step_s: 30.0,
            ramp_ps_per_s: 2000.0 / (7.0 * 3600.0),
            gains: PidGains {
                kp: 0.1,
                ki: 0.3 / 30.0,
                kd: 0.0,
            },
            limit_ps: 10_000.0,
            pulse: PulseShape::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DelayTrace {
    pub t_s: Vec<f64>,
    /// Delay the pulses actually arrive with (ps).
    pub delay_ps: Vec<f64>,
    pub measured_ps: Vec<f64>,
    pub control_ps: Vec<f64>,
    pub residual_std_ps: f64,
}

/// Relative delay `ramp * t + control`, measured each step from a sampled
/// rising-edge histogram and fed to a PID clock correction.
pub fn run_delay_loop(cfg: &DelayLoopConfig) -> Result<DelayTrace> {
    if !(cfg.step_s > 0.0 && cfg.duration_s >= cfg.step_s) {
        return Err(Error::InvalidParams("need 0 < step_s <= duration_s".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = LoopState::new(cfg.gains, -cfg.limit_ps, cfg.limit_ps);
    let nominal = cfg.pulse.rise_ps * 0.35;
    let steps = (cfg.duration_s / cfg.step_s).floor() as usize;
    let mut trace = DelayTrace::default();
    let mut control = 0.0;
    for k in 0..steps {
        let t = (k + 1) as f64 * cfg.step_s;
        let delay = cfg.ramp_ps_per_s * t + control;
        let h = cfg.pulse.sample(delay, &mut rng);
        let measured = rising_edge_arrival(&h)? - nominal;
        let (next, u) = pid_step(state, 0.0, measured, cfg.step_s);
        state = next;
        control = u;
        trace.t_s.push(t);
        trace.delay_ps.push(delay);
        trace.measured_ps.push(measured);
        trace.control_ps.push(u);
    }
    trace.residual_std_ps = mean_std(&trace.delay_ps).1;
    Ok(trace)
}
