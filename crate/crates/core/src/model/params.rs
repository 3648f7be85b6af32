use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, check_probability, Error, Result};

/// Intensities and selection probabilities of the vacuum, decoy (`x`) and
/// signal (`y`) sources. Alice and Bob use the same settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub mu_x: f64,
    pub mu_y: f64,
    pub p_v: f64,
    pub p_x: f64,
    pub p_y: f64,
}

impl SourceParams {
    /// Settings used for the 202-1002 km runs.
    pub const LONG_DISTANCE: SourceParams = SourceParams {
        mu_x: 0.08,
        mu_y: 0.445,
        p_v: 0.52,
        p_x: 0.28,
        p_y: 0.20,
    };

    /// Settings used for the 900 MHz short-distance runs.
    pub const SHORT_DISTANCE: SourceParams = SourceParams {
        mu_x: 0.08,
        mu_y: 0.445,
        p_v: 0.68,
        p_x: 0.04,
        p_y: 0.28,
    };

    pub fn new(mu_x: f64, mu_y: f64, p_v: f64, p_x: f64, p_y: f64) -> Result<Self> {
        let s = SourceParams {
            mu_x,
            mu_y,
            p_v,
            p_x,
            p_y,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, p) in [("p_v", self.p_v), ("p_x", self.p_x), ("p_y", self.p_y)] {
            check_probability(what, p)?;
        }
        let total = self.p_v + self.p_x + self.p_y;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "selection probabilities sum to {total}, expected 1"
            )));
        }
        if !(self.mu_x > 0.0 && self.mu_y > self.mu_x) {
            return Err(Error::InvalidParams(format!(
                "intensities must satisfy 0 < mu_x < mu_y (got {}, {})",
                self.mu_x, self.mu_y
            )));
        }
        Ok(())
    }

    /// Intensity of source `i` (0 = vacuum, 1 = x, 2 = y).
    pub fn intensity(&self, i: usize) -> f64 {
        [0.0, self.mu_x, self.mu_y][i]
    }

    /// Selection probability of source `i`.
    pub fn probability(&self, i: usize) -> f64 {
        [self.p_v, self.p_x, self.p_y][i]
    }
}

/// Error-correction inefficiency and the failure probabilities of the
/// finite-key analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityParams {
    pub f: f64,
    /// Failure probability of each Chernoff estimate.
    pub eps: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    /// Coefficient of the smooth-entropy chain rules.
    pub eps_hat: f64,
}

impl SecurityParams {
    pub const PAPER: SecurityParams = SecurityParams {
        f: 1.16,
        eps: 1e-10,
        eps_cor: 1e-10,
        eps_pa: 1e-10,
        eps_hat: 1e-10,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.f >= 1.0) {
            return Err(Error::Domain {
                what: "f",
                value: self.f,
                expected: ">= 1",
            });
        }
        check_open_unit("eps", self.eps)?;
        check_open_unit("eps_cor", self.eps_cor)?;
        check_open_unit("eps_pa", self.eps_pa)?;
        check_open_unit("eps_hat", self.eps_hat)?;
        Ok(())
    }
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self::PAPER
    }
}

/// Channel and detector characterization for one Alice-Charlie-Bob link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub length_ac_km: f64,
    pub length_bc_km: f64,
    pub atten_ac_db: f64,
    pub atten_bc_db: f64,
    pub det_eff_1: f64,
    pub det_eff_2: f64,
    /// Dark/noise count rates of the two detectors (Hz).
    pub dark_rate_1: f64,
    pub dark_rate_2: f64,
    /// Fraction of signal detections kept by the acceptance window.
    pub window_eff: f64,
    pub eff_freq_hz: f64,
    /// Flat interference misalignment (0 = perfect visibility).
    #[serde(default)]
    pub misalign: f64,
    /// Width of the detection gate (s). When set, the per-window dark-count
    /// probability is `dark_rate * gate`; otherwise `dark_rate / eff_freq_hz`.
    #[serde(default)]
    pub dark_gate_s: Option<f64>,
}

/// Fiber characterization: total length, A-C / B-C lengths and losses.
pub const FIBER_TABLE: [(u32, f64, f64, f64, f64); 10] = [
    (202, 101.0, 101.0, 15.8, 15.8),
    (297, 148.7, 147.8, 23.3, 22.9),
    (398, 199.2, 198.3, 31.2, 30.8),
    (499, 249.7, 248.8, 39.1, 38.7),
    (600, 300.2, 299.3, 47.0, 46.7),
    (701, 350.7, 348.8, 54.9, 54.5),
    (800, 399.1, 401.1, 62.5, 62.4),
    (901, 449.6, 451.6, 70.4, 70.3),
    (952, 474.8, 476.8, 74.4, 74.3),
    (1002, 500.1, 502.1, 78.3, 78.2),
];

/// Average attenuation of the ultra-low-loss fiber spools (dB/km).
pub const FIBER_DB_PER_KM: f64 = 0.1562;

impl LinkBudget {
    /// Detector and filtering characteristics of the long-distance
    /// configuration, with the fiber section left at zero length.
    pub fn paper_detectors() -> Self {
        LinkBudget {
            length_ac_km: 0.0,
            length_bc_km: 0.0,
            atten_ac_db: 0.0,
            atten_bc_db: 0.0,
            det_eff_1: 0.60,
            det_eff_2: 0.55,
            dark_rate_1: 0.02,
            dark_rate_2: 0.02,
            window_eff: 0.65,
            eff_freq_hz: 351e6,
            misalign: 0.0,
            dark_gate_s: Some(200e-12),
        }
    }

    /// Link budget for one of the characterized fiber distances.
    pub fn paper(total_km: u32) -> Option<Self> {
        FIBER_TABLE
            .iter()
            .find(|row| row.0 == total_km)
            .map(|&(_, lac, lbc, aac, abc)| LinkBudget {
                length_ac_km: lac,
                length_bc_km: lbc,
                atten_ac_db: aac,
                atten_bc_db: abc,
                ..Self::paper_detectors()
            })
    }

    /// Symmetric link of `total_km` with a uniform per-km attenuation.
    pub fn symmetric(total_km: f64, db_per_km: f64, template: &LinkBudget) -> Self {
        let half = total_km / 2.0;
        LinkBudget {
            length_ac_km: half,
            length_bc_km: half,
            atten_ac_db: half * db_per_km,
            atten_bc_db: half * db_per_km,
            ..*template
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.atten_ac_db < 0.0 || self.atten_bc_db < 0.0 {
            return Err(Error::InvalidParams("attenuations must be >= 0".into()));
        }
        check_probability("det_eff_1", self.det_eff_1)?;
        check_probability("det_eff_2", self.det_eff_2)?;
        check_probability("window_eff", self.window_eff)?;
        if !(self.eff_freq_hz > 0.0) {
            return Err(Error::Domain {
                what: "eff_freq_hz",
                value: self.eff_freq_hz,
                expected: "> 0",
            });
        }
        if self.dark_rate_1 < 0.0 || self.dark_rate_2 < 0.0 {
            return Err(Error::InvalidParams("dark rates must be >= 0".into()));
        }
        if !(0.0..=0.5).contains(&self.misalign) {
            return Err(Error::Domain {
                what: "misalign",
                value: self.misalign,
                expected: "[0, 0.5]",
            });
        }
        Ok(())
    }

    pub fn total_atten_db(&self) -> f64 {
        self.atten_ac_db + self.atten_bc_db
    }

    pub fn total_length_km(&self) -> f64 {
        self.length_ac_km + self.length_bc_km
    }

    /// Transmittance of the A-C and B-C fibers.
    pub fn transmittances(&self) -> (f64, f64) {
        (db_to_transmittance(self.atten_ac_db), db_to_transmittance(self.atten_bc_db))
    }

    /// Per-window dark-count probabilities of the two detectors.
    pub fn dark_probabilities(&self) -> (f64, f64) {
        let per_window = |rate: f64| match self.dark_gate_s {
            Some(gate) => rate * gate,
            None => rate / self.eff_freq_hz,
        };
        (per_window(self.dark_rate_1), per_window(self.dark_rate_2))
    }
}

pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}
