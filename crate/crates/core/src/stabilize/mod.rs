//! Feedback loops of the link: delay lock from rising-edge timing,
//! two-wavelength polarization control and intensity-ratio control, each
//! driven against a synthetic plant.

mod delay;
mod edge;
mod intensity;
mod polarization;

use serde::{Deserialize, Serialize};

pub use delay::{run_delay_loop, DelayLoopConfig, DelayTrace, PulseShape};
pub use edge::{rising_edge_arrival, PulseHistogram};
pub use intensity::{intensity_ratio_step, run_intensity_loop, IntensityLoopConfig, IntensityTrace, ModulatorPlant};
pub use polarization::{
    polarization_step, run_polarization_loop, PolarizationConfig, PolarizationMode, PolarizationPlant,
    PolarizationState, PolarizationTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// PID controller memory with output limits. The integrator is clamped to
/// the same limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub gains: PidGains,
    pub integrator: f64,
    pub last_error: Option<f64>,
    pub out_min: f64,
    pub out_max: f64,
}

impl LoopState {
    pub fn new(gains: PidGains, out_min: f64, out_max: f64) -> Self {
        LoopState {
            gains,
            integrator: 0.0,
            last_error: None,
            out_min,
            out_max,
        }
    }
}

/// One PID update; `dt` must be positive.
pub fn pid_step(state: LoopState, setpoint: f64, measurement: f64, dt: f64) -> (LoopState, f64) {
    debug_assert!(dt > 0.0);
    let g = state.gains;
    let e = setpoint - measurement;
    let integrator = (state.integrator + g.ki * e * dt).clamp(state.out_min, state.out_max);
    let derivative = state.last_error.map_or(0.0, |l| (e - l) / dt);
    let control = (g.kp * e + integrator + g.kd * derivative).clamp(state.out_min, state.out_max);
    (
        LoopState {
            integrator,
            last_error: Some(e),
            ..state
        },
        control,
    )
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_holds_integrator() {
        let mut s = LoopState::new(PidGains { kp: 2.0, ki: 1.0, kd: 0.5 }, -10.0, 10.0);
        s.integrator = 3.5;
        s.last_error = Some(0.0);
        for _ in 0..5 {
            let (next, u) = pid_step(s, 1.0, 1.0, 0.1);
            assert_eq!(u, 3.5);
            s = next;
        }
    }

    #[test]
    fn integrator_is_clamped() {
        let mut s = LoopState::new(PidGains { kp: 0.0, ki: 100.0, kd: 0.0 }, -1.0, 1.0);
        for _ in 0..100 {
            let (next, u) = pid_step(s, 10.0, 0.0, 1.0);
            assert!(u <= 1.0);
            s = next;
        }
        assert_eq!(s.integrator, 1.0);
    }

    #[test]
    fn first_order_lag_rejects_step_disturbance() {
        // y' = (u + d - y) / tau, simulated with the same discrete step.
        let (tau, dt) = (1.0, 0.05);
        let mut s = LoopState::new(PidGains { kp: 1.5, ki: 2.0, kd: 0.0 }, -20.0, 20.0);
        let mut y = 0.0;
        let mut tail = Vec::new();
        for k in 0..2000 {
            let d = if k >= 400 { 2.0 } else { 0.0 };
            let (next, u) = pid_step(s, 1.0, y, dt);
            s = next;
            y += dt * (u + d - y) / tau;
            if k >= 1600 {
                tail.push(y);
            }
        }
        assert!(tail.iter().all(|y| (y - 1.0).abs() < 1e-3), "{:?}", tail.last());
    }
}
