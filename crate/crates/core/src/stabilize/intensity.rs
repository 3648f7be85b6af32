use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{mean_std, pid_step, LoopState, PidGains};
use crate::error::{Error, Result};

/// Intensity modulator `T(V) = cos^2(pi (V - b) / (2 V_pi))` whose bias `b`
/// drifts; the monitored ratio is `T(V) / T_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulatorPlant {
    pub v_pi: f64,
    /// Transmission of the state the ratio is taken against.
    pub t_ref: f64,
    pub bias_drift_v_per_s: f64,
    pub bias_walk_v_per_sqrt_s: f64,
    /// Relative noise of one ratio measurement.
    pub measurement_noise: f64,
}

impl Default for ModulatorPlant {
    fn default() -> Self {
        ModulatorPlant {
            v_pi: 4.0,
            t_ref: 1.0,
            bias_drift_v_per_s: 2e-5,
            bias_walk_v_per_sqrt_s: 2e-4,
            measurement_noise: 1e-3,
        }
    }
}

impl ModulatorPlant {
    pub fn ratio(&self, v: f64, bias: f64) -> f64 {
        (PI * (v - bias) / (2.0 * self.v_pi)).cos().powi(2) / self.t_ref
    }

    /// Operating voltage on the falling slope giving `ratio` at zero bias.
    pub fn operating_point(&self, ratio: f64) -> Result<f64> {
        let t = ratio * self.t_ref;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain {
                what: "ratio * t_ref",
                value: t,
                expected: "(0, 1)",
            });
        }
        Ok(2.0 * self.v_pi / PI * t.sqrt().acos())
    }
}

/// PID on `ln(ratio_meas / ratio_target)`. Returns the bias correction in
/// volts relative to the operating point; a positive correction moves down
/// the falling slope and lowers the transmission.
pub fn intensity_ratio_step(state: LoopState, ratio_meas: f64, ratio_target: f64, dt: f64) -> (LoopState, f64) {
    let (next, control) = pid_step(state, 0.0, (ratio_meas / ratio_target).ln(), dt);
    (next, -control)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensityLoopConfig {
    pub duration_s: f64,
    pub step_s: f64,
    pub ratio_target: f64,
    pub gains: PidGains,
    pub limit_v: f64,
    pub plant: ModulatorPlant,
    /// Leading part of the run excluded from the steady-state error.
    pub settle_s: f64,
    pub seed: u64,
}

impl Default for IntensityLoopConfig {
    fn default() -> Self {
        IntensityLoopConfig {
            duration_s: 17.0 * 3600.0,
            step_s: 10.0,
            ratio_target: 0.25,
            gains: PidGains {
                kp: 0.3,
                ki: 0.02,
                kd: 0.0,
            },
            limit_v: 4.0,
            plant: ModulatorPlant::default(),
            settle_s: 600.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntensityTrace {
    pub t_s: Vec<f64>,
    pub ratio_true: Vec<f64>,
    pub ratio_meas: Vec<f64>,
    pub correction_v: Vec<f64>,
    /// Standard deviation of `ratio_true / target - 1` after settling.
    pub relative_error: f64,
}

pub fn run_intensity_loop(cfg: &IntensityLoopConfig) -> Result<IntensityTrace> {
    if !(cfg.step_s > 0.0 && cfg.duration_s > cfg.settle_s + cfg.step_s) {
        return Err(Error::InvalidParams("need 0 < step_s and settle_s + step_s < duration_s".into()));
    }
    let p = &cfg.plant;
    let v0 = p.operating_point(cfg.ratio_target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut state = LoopState::new(cfg.gains, -cfg.limit_v, cfg.limit_v);
    let mut bias = 0.0;
    let mut correction = 0.0;
    let mut trace = IntensityTrace::default();
    let mut settled = Vec::new();
    let steps = (cfg.duration_s / cfg.step_s).floor() as usize;
    for k in 0..steps {
        let t = (k + 1) as f64 * cfg.step_s;
        bias += p.bias_drift_v_per_s * cfg.step_s + p.bias_walk_v_per_sqrt_s * cfg.step_s.sqrt() * unit.sample(&mut rng);
        let truth = p.ratio(v0 + correction, bias);
        let meas = (truth * (1.0 + p.measurement_noise * unit.sample(&mut rng))).max(f64::MIN_POSITIVE);
        let (next, c) = intensity_ratio_step(state, meas, cfg.ratio_target, cfg.step_s);
        state = next;
        correction = c;
        trace.t_s.push(t);
        trace.ratio_true.push(truth);
        trace.ratio_meas.push(meas);
        trace.correction_v.push(c);
        if t > cfg.settle_s {
            settled.push(truth / cfg.ratio_target - 1.0);
        }
    }
    trace.relative_error = mean_std(&settled).1;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> LoopState {
        let c = IntensityLoopConfig::default();
        LoopState::new(c.gains, -c.limit_v, c.limit_v)
    }

    #[test]
    fn at_target_no_adjustment() {
        let (_, adj) = intensity_ratio_step(fresh(), 0.25, 0.25, 1.0);
        assert_eq!(adj, 0.0);
    }

    #[test]
    fn above_target_lowers_transmission() {
        let p = ModulatorPlant::default();
        let v0 = p.operating_point(0.25).unwrap();
        assert!((p.ratio(v0, 0.0) - 0.25).abs() < 1e-12);
        let (_, adj) = intensity_ratio_step(fresh(), 0.3, 0.25, 1.0);
        assert!(p.ratio(v0 + adj, 0.0) < p.ratio(v0, 0.0));
        let (_, adj) = intensity_ratio_step(fresh(), 0.2, 0.25, 1.0);
        assert!(p.ratio(v0 + adj, 0.0) > p.ratio(v0, 0.0));
    }

    #[test]
    fn drifting_plant_steady_state() {
        let tr = run_intensity_loop(&IntensityLoopConfig::default()).unwrap();
        assert!(tr.relative_error <= 0.005, "{}", tr.relative_error);
        let open = IntensityLoopConfig {
            gains: PidGains { kp: 0.0, ki: 0.0, kd: 0.0 },
            ..IntensityLoopConfig::default()
        };
        assert!(run_intensity_loop(&open).unwrap().relative_error > 0.05);
    }
}
