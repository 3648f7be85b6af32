use crate::error::{Error, Result};

/// Source index: 0 = vacuum, 1 = decoy `x`, 2 = signal `y`.
pub const VACUUM: usize = 0;
pub const DECOY: usize = 1;
pub const SIGNAL: usize = 2;

pub type CountMatrix = [[u64; 3]; 3];

/// Survivor statistics observed after the odd-parity pairing of a real run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedAopp {
    pub n_t_after: u64,
    pub e_t_after: f64,
}

/// Sent and heralded counts of one run, indexed `[alice][bob]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub n_total: u64,
    pub sent: CountMatrix,
    pub detected: CountMatrix,
    /// Half-width of the phase slice (degrees).
    pub ds_deg: f64,
    pub detected_11_ds: u64,
    pub correct_11_ds: u64,
    pub eff_freq_hz: f64,
    pub observed_aopp: Option<ObservedAopp>,
}

impl ExperimentRecord {
    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            for b in 0..3 {
                if self.detected[a][b] > self.sent[a][b] {
                    return Err(Error::InvalidRecord(format!(
                        "detected_{a}{b} = {} exceeds sent_{a}{b} = {}",
                        self.detected[a][b], self.sent[a][b]
                    )));
                }
            }
        }
        if self.correct_11_ds > self.detected_11_ds {
            return Err(Error::InvalidRecord(
                "correct_11_ds exceeds detected_11_ds".into(),
            ));
        }
        if self.detected_11_ds > self.detected[DECOY][DECOY] {
            return Err(Error::InvalidRecord(
                "detected_11_ds exceeds detected_11".into(),
            ));
        }
        if !(self.ds_deg > 0.0 && self.ds_deg < 90.0) {
            return Err(Error::InvalidRecord(format!(
                "ds_deg = {} outside (0, 90)",
                self.ds_deg
            )));
        }
        if !(self.eff_freq_hz > 0.0) {
            return Err(Error::InvalidRecord("eff_freq_hz must be > 0".into()));
        }
        if let Some(obs) = &self.observed_aopp {
            if !(0.0..=1.0).contains(&obs.e_t_after) {
                return Err(Error::InvalidRecord("e_t_after outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn total_sent(&self) -> u64 {
        self.sent.iter().flatten().sum()
    }

    /// Multiplies every count (and `n_total`) by `k`. Observed AOPP
    /// statistics are dropped since they do not scale.
    pub fn scaled(&self, k: u64) -> Self {
        let mul = |m: &CountMatrix| m.map(|row| row.map(|v| v * k));
        ExperimentRecord {
            n_total: self.n_total * k,
            sent: mul(&self.sent),
            detected: mul(&self.detected),
            detected_11_ds: self.detected_11_ds * k,
            correct_11_ds: self.correct_11_ds * k,
            observed_aopp: None,
            ..self.clone()
        }
    }

    /// Empirical bit error rate of the Z windows: (n_vv + n_yy) / n_t.
    pub fn z_error_rate(&self) -> Option<f64> {
        let d = &self.detected;
        let nt = d[VACUUM][VACUUM] + d[VACUUM][SIGNAL] + d[SIGNAL][VACUUM] + d[SIGNAL][SIGNAL];
        (nt > 0).then(|| (d[VACUUM][VACUUM] + d[SIGNAL][SIGNAL]) as f64 / nt as f64)
    }

    /// Error rate of the post-selected `xx` windows.
    pub fn x_error_rate(&self) -> Option<f64> {
        (self.detected_11_ds > 0).then(|| {
            (self.detected_11_ds - self.correct_11_ds) as f64 / self.detected_11_ds as f64
        })
    }
}
