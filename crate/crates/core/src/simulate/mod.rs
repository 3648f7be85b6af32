//! Channel and detector simulation producing [`ExperimentRecord`]s.
//!
//! Alice's and Bob's weak coherent pulses interfere at Charlie's beam
//! splitter. With transmittances `eta_a`, `eta_b` and relative phase
//! `delta` the two output ports carry Poissonian light with means
//!
//! ```text
//! m_{1,2} = (eta_a mu_a + eta_b mu_b +/- 2 v sqrt(eta_a mu_a eta_b mu_b) cos delta) / 2
//! ```
//!
//! scaled by the detector and acceptance-window efficiencies, where
//! `v = 1 - 2 misalign` is the interference visibility. A window is
//! heralded when exactly one detector clicks.
//!
//! The decoy-decoy windows carry the phase information. Their estimated
//! relative phase is uniform (16-level private phases on top of a
//! continuously drifting channel phase); the true phase differs from the
//! estimate by Gaussian noise of standard deviation `phase_noise_sigma_deg`.
//! Windows whose estimated phase lies within `ds_deg` of 0 or of 180
//! degrees form the post-selected slice. Near 0 the constructive detector
//! is the correct one, near 180 the other.

mod analytic;
mod monte_carlo;

use serde::{Deserialize, Serialize};

pub use analytic::{expected_counts, run_analytic, ExpectedCounts};
pub use monte_carlo::run_monte_carlo;

use crate::error::{Error, Result};
use crate::model::{LinkBudget, SourceParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub src: SourceParams,
    pub link: LinkBudget,
    pub n_total: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sigma")]
    pub phase_noise_sigma_deg: f64,
    #[serde(default = "default_ds")]
    pub ds_deg: f64,
}

fn default_sigma() -> f64 {
    4.3
}

fn default_ds() -> f64 {
    12.0
}

impl SimConfig {
    pub fn new(src: SourceParams, link: LinkBudget, n_total: u64) -> Self {
        SimConfig {
            src,
            link,
            n_total,
            seed: 0,
            phase_noise_sigma_deg: default_sigma(),
            ds_deg: default_ds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.src.validate()?;
        self.link.validate()?;
        if self.n_total == 0 {
            return Err(Error::InvalidParams("n_total must be > 0".into()));
        }
        if !(self.phase_noise_sigma_deg >= 0.0) {
            return Err(Error::Domain {
                what: "phase_noise_sigma_deg",
                value: self.phase_noise_sigma_deg,
                expected: ">= 0",
            });
        }
        if !(self.ds_deg > 0.0 && self.ds_deg < 90.0) {
            return Err(Error::Domain {
                what: "ds_deg",
                value: self.ds_deg,
                expected: "(0, 90)",
            });
        }
        Ok(())
    }
}

/// Per-port detection constants of a link, precomputed once per run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ports {
    eta_a: f64,
    eta_b: f64,
    gain_1: f64,
    gain_2: f64,
    visibility: f64,
    dark_1: f64,
    dark_2: f64,
}

impl Ports {
    pub(crate) fn new(link: &LinkBudget) -> Self {
        let (eta_a, eta_b) = link.transmittances();
        let (dark_1, dark_2) = link.dark_probabilities();
        Ports {
            eta_a,
            eta_b,
            gain_1: link.det_eff_1 * link.window_eff,
            gain_2: link.det_eff_2 * link.window_eff,
            visibility: 1.0 - 2.0 * link.misalign,
            dark_1,
            dark_2,
        }
    }

    /// Click probabilities of the two detectors.
    pub(crate) fn clicks(&self, mu_a: f64, mu_b: f64, cos_delta: f64) -> (f64, f64) {
        let a = self.eta_a * mu_a;
        let b = self.eta_b * mu_b;
        let cross = 2.0 * self.visibility * (a * b).sqrt() * cos_delta;
        let m1 = (0.5 * (a + b + cross)).max(0.0) * self.gain_1;
        let m2 = (0.5 * (a + b - cross)).max(0.0) * self.gain_2;
        (
            1.0 - (1.0 - self.dark_1) * (-m1).exp(),
            1.0 - (1.0 - self.dark_2) * (-m2).exp(),
        )
    }
}

/// Probability that detectors 1 and 2 click for intensities `mu_a`,
/// `mu_b` and relative phase `delta` (radians).
pub fn click_probabilities(mu_a: f64, mu_b: f64, delta: f64, link: &LinkBudget) -> (f64, f64) {
    Ports::new(link).clicks(mu_a.max(0.0), mu_b.max(0.0), delta.cos())
}

/// Probability that exactly one detector clicks.
pub fn heralding_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lossless() -> LinkBudget {
        LinkBudget {
            det_eff_1: 1.0,
            det_eff_2: 1.0,
            window_eff: 1.0,
            dark_rate_1: 0.0,
            dark_rate_2: 0.0,
            ..LinkBudget::paper_detectors()
        }
    }

    #[test]
    fn destructive_port_is_dark() {
        let (p1, p2) = click_probabilities(0.3, 0.3, 0.0, &lossless());
        assert_eq!(p2, 0.0);
        assert!((p1 - (1.0 - (-0.6f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn ports_swap_at_pi() {
        let link = lossless();
        let (a1, a2) = click_probabilities(0.2, 0.2, 0.0, &link);
        let (b1, b2) = click_probabilities(0.2, 0.2, PI, &link);
        assert!((a1 - b2).abs() < 1e-15 && (a2 - b1).abs() < 1e-15);
    }

    #[test]
    fn vacuum_gives_dark_probability() {
        let mut link = LinkBudget::paper(1002).unwrap();
        link.dark_gate_s = None;
        let (p1, p2) = click_probabilities(0.0, 0.0, 1.0, &link);
        assert!((p1 - 5.7e-11).abs() / 5.7e-11 < 0.01, "{p1}");
        assert_eq!(p1, p2);
    }

    #[test]
    fn heralding_excludes_double_clicks() {
        assert_eq!(heralding_probability(1.0, 1.0), 0.0);
        assert!((heralding_probability(0.5, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let link = LinkBudget::paper(202).unwrap();
        let mut cfg = SimConfig::new(SourceParams::LONG_DISTANCE, link, 100);
        cfg.validate().unwrap();
        cfg.n_total = 0;
        assert!(cfg.validate().is_err());
        cfg.n_total = 1;
        cfg.phase_noise_sigma_deg = -1.0;
        assert!(cfg.validate().is_err());
    }
}
