//! Secure key rate from decoy and pairing outputs.
//!
//! ```text
//! R = [n1' (1 - H(e1')) - f n_t' H(E_t')] / N - gamma'
//! ```

mod optimize;

use serde::Serialize;

pub use optimize::{optimize_sources, optimize_sources_with, OptimizeGrid, Optimized};

use crate::aopp::{aopp_asymptotic, aopp_finite, tally_from_record, AoppOutcome, RawKeyTally};
use crate::decoy::{analyze, counting_rates, CountingRates, DecoyBounds};
use crate::error::{Error, Result};
use crate::model::{
    db_to_transmittance, entropy_unchecked, plob_bound, ExperimentRecord, Mode, SecurityParams,
    SourceParams,
};

/// Key-length correction of the finite-size analysis (bits per pulse pair).
pub fn gamma_prime(
    n_t: u64,
    n_vv: u64,
    n_yy: u64,
    sec: &SecurityParams,
    n_total: u64,
) -> Result<f64> {
    let wrong = n_vv + n_yy;
    if n_t <= wrong {
        return Err(Error::Domain {
            what: "n_t - n_vv - n_yy",
            value: n_t as f64 - wrong as f64,
            expected: "> 0",
        });
    }
    if n_total == 0 {
        return Err(Error::DivisionByZero("n_total = 0".into()));
    }
    let bits = 2.0 * (2.0 / sec.eps_cor).log2()
        + 4.0 * (1.0 / (std::f64::consts::SQRT_2 * sec.eps_pa * sec.eps_hat)).log2()
        + 2.0 * ((n_t - wrong) as f64).log2();
    Ok(bits / n_total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateInputs {
    pub record: ExperimentRecord,
    pub src: SourceParams,
    pub sec: SecurityParams,
    pub mode: Mode,
}

impl KeyRateInputs {
    /// Checks that the sent counts agree with `n_total * p_a * p_b`.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.record.n_total as f64;
        for a in 0..3 {
            for b in 0..3 {
                let nominal = n * self.src.probability(a) * self.src.probability(b);
                let sent = self.record.sent[a][b] as f64;
                if nominal > 0.0 && (sent - nominal).abs() > 0.005 * nominal {
                    return Err(Error::InvalidParams(format!(
                        "sent_{a}{b} = {sent} differs from N p_a p_b = {nominal} by more than 0.5%"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStatus {
    Positive,
    /// The formula evaluated to `R <= 0`.
    NonPositive,
    /// No untagged bits could be certified; `R` is evaluated with `n1' = 0`
    /// or reported as zero when the key itself is empty.
    NoKey,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub mode: Mode,
    pub r_per_pulse: f64,
    pub r_bps: f64,
    pub status: KeyStatus,
    /// Why no key could be certified, when `status` is `NoKey`.
    pub reason: Option<String>,
    pub rates: CountingRates,
    pub decoy: Option<DecoyBounds>,
    pub tally: Option<RawKeyTally>,
    pub aopp: Option<AoppOutcome>,
    pub gamma_prime: f64,
    pub eff_freq_hz: f64,
}

impl KeyRateReport {
    pub fn is_positive(&self) -> bool {
        self.status == KeyStatus::Positive
    }

    fn no_key(inputs: &KeyRateInputs, rates: CountingRates, reason: &Error) -> Self {
        KeyRateReport {
            mode: inputs.mode,
            r_per_pulse: 0.0,
            r_bps: 0.0,
            status: KeyStatus::NoKey,
            reason: Some(reason.to_string()),
            rates,
            decoy: None,
            tally: None,
            aopp: None,
            gamma_prime: 0.0,
            eff_freq_hz: inputs.record.eff_freq_hz,
        }
    }
}

fn is_analysis_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::UndefinedBound
            | Error::EmptyKey
            | Error::EmptySlice
            | Error::BoundCollapse(_)
            | Error::DivisionByZero(_)
    )
}

/// Runs decoy analysis, pairing and privacy amplification accounting.
///
/// Invalid inputs are errors. Statistics too thin to certify a key yield a
/// report with status [`KeyStatus::NoKey`] instead.
pub fn key_rate(inputs: &KeyRateInputs) -> Result<KeyRateReport> {
    inputs.sec.validate()?;
    let record = &inputs.record;
    let rates = counting_rates(record)?;
    let (_, decoy) = match analyze(record, &inputs.src, inputs.mode, inputs.sec.eps) {
        Ok(v) => v,
        Err(e) if is_analysis_failure(&e) => return Ok(KeyRateReport::no_key(inputs, rates, &e)),
        Err(e) => return Err(e),
    };
    let tally = match tally_from_record(record) {
        Ok(t) => t,
        Err(e) => return Ok(KeyRateReport::no_key(inputs, rates, &e)),
    };
    let gamma = match inputs.mode {
        Mode::Asymptotic => 0.0,
        Mode::Finite => {
            let d = &record.detected;
            match gamma_prime(tally.n_t, d[0][0], d[2][2], &inputs.sec, record.n_total) {
                Ok(g) => g,
                Err(e) => return Ok(KeyRateReport::no_key(inputs, rates, &e)),
            }
        }
    };
    let outcome = match inputs.mode {
        Mode::Asymptotic => aopp_asymptotic(&decoy, &tally, decoy.e1ph_ub),
        Mode::Finite => aopp_finite(&decoy, &tally, decoy.e1ph_ub, &inputs.sec),
    };
    let (aopp, reason) = match outcome {
        Ok(o) => (o, None),
        Err(e) if is_analysis_failure(&e) => (
            AoppOutcome {
                n1_after: 0.0,
                e1ph_after: 0.5,
                chain: None,
            },
            Some(e.to_string()),
        ),
        Err(e) => return Err(e),
    };
    let n = record.n_total as f64;
    let r = (aopp.n1_after * (1.0 - entropy_unchecked(aopp.e1ph_after))
        - inputs.sec.f * tally.n_t_after * entropy_unchecked(tally.e_t_after))
        / n
        - gamma;
    let status = if reason.is_some() {
        KeyStatus::NoKey
    } else if r > 0.0 {
        KeyStatus::Positive
    } else {
        KeyStatus::NonPositive
    };
    Ok(KeyRateReport {
        mode: inputs.mode,
        r_per_pulse: r,
        r_bps: r * record.eff_freq_hz,
        status,
        reason,
        rates,
        decoy: Some(decoy),
        tally: Some(tally),
        aopp: Some(aopp),
        gamma_prime: gamma,
        eff_freq_hz: record.eff_freq_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlobComparison {
    pub r_per_pulse: f64,
    pub plob_bits: f64,
    pub exceeds: bool,
}

/// Compares a key rate with the repeaterless bound of a channel with the
/// given total attenuation.
pub fn key_rate_vs_plob(report: &KeyRateReport, total_atten_db: f64) -> Result<PlobComparison> {
    if !(total_atten_db >= 0.0) {
        return Err(Error::Domain {
            what: "total_atten_db",
            value: total_atten_db,
            expected: ">= 0",
        });
    }
    let plob = plob_bound(db_to_transmittance(total_atten_db))?;
    Ok(PlobComparison {
        r_per_pulse: report.r_per_pulse,
        plob_bits: plob,
        exceeds: report.r_per_pulse > plob,
    })
}
