//! Three-intensity decoy-state analysis.
//!
//! Counting rates `S_lr` of the nine intensity pairs bound the yields of
//! the untagged states `|01>` and `|10>`; the post-selected `xx` windows
//! bound their phase-flip error rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::chernoff::{expected_lower, expected_upper};
use crate::model::{ExperimentRecord, Mode, SourceParams, DECOY, SIGNAL, VACUUM};

/// Heralded fraction of each intensity pair, indexed `[alice][bob]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingRates {
    pub s: [[f64; 3]; 3],
}

impl CountingRates {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.s[a][b]
    }
}

/// `S_lr = n_lr / (N p_l p_r)` with the exact sent counts as denominator.
pub fn counting_rates(record: &ExperimentRecord) -> Result<CountingRates> {
    rates_with(record, |n| Ok(n as f64))
}

fn rates_with(
    record: &ExperimentRecord,
    count: impl Fn(u64) -> Result<f64>,
) -> Result<CountingRates> {
    let mut s = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let sent = record.sent[a][b];
            let det = record.detected[a][b];
            if sent == 0 {
                if det > 0 {
                    return Err(Error::DivisionByZero(format!(
                        "sent_{a}{b} = 0 with detected_{a}{b} = {det}"
                    )));
                }
                continue;
            }
            s[a][b] = count(det)? / sent as f64;
        }
    }
    Ok(CountingRates { s })
}

/// Lower and upper estimates of the expected counting rates. In the
/// asymptotic case both sides equal the observed rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEnvelope {
    pub lower: CountingRates,
    pub upper: CountingRates,
}

impl RateEnvelope {
    pub fn exact(rates: CountingRates) -> Self {
        RateEnvelope {
            lower: rates,
            upper: rates,
        }
    }

    /// Chernoff bounds on the expected count of every cell.
    pub fn chernoff(record: &ExperimentRecord, eps: f64) -> Result<Self> {
        Ok(RateEnvelope {
            lower: rates_with(record, |n| expected_lower(n as f64, eps))?,
            upper: rates_with(record, |n| expected_upper(n as f64, eps))?,
        })
    }
}

/// Output of the decoy analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoyBounds {
    pub s01_lb: f64,
    pub s10_lb: f64,
    pub s1_lb: f64,
    pub n10_lb: f64,
    pub n01_lb: f64,
    pub e1ph_ub: f64,
    /// Slice error ratio used by the phase-flip bound (an upper estimate
    /// in finite mode).
    pub t_x: f64,
    pub n_x: f64,
    pub m_x: u64,
    /// A decoy numerator was negative and floored at zero.
    pub floored: bool,
    /// The phase-flip estimate fell outside `[0, 0.5]` and was clamped.
    pub clamped: bool,
}

impl DecoyBounds {
    /// `n1 = n10 + n01`, the untagged bits before pairing.
    pub fn n1_lb(&self) -> f64 {
        self.n10_lb + self.n01_lb
    }
}

/// Lower bounds on `s01`, `s10` and the untagged counts `n10`, `n01`.
/// Slice and phase-flip fields are left at zero.
pub fn untagged_bounds(
    env: &RateEnvelope,
    src: &SourceParams,
    record: &ExperimentRecord,
) -> Result<DecoyBounds> {
    let (mx, my) = (src.mu_x, src.mu_y);
    if mx == my {
        return Err(Error::DegenerateSources);
    }
    let (lo, hi) = (&env.lower, &env.upper);
    let den = my * mx * (my - mx);
    let side = |added: f64, subtracted: f64| {
        (my * my * mx.exp() * added
            - mx * mx * my.exp() * subtracted
            - (my * my - mx * mx) * hi.get(VACUUM, VACUUM))
            / den
    };
    let raw01 = side(lo.get(VACUUM, DECOY), hi.get(VACUUM, SIGNAL));
    let raw10 = side(lo.get(DECOY, VACUUM), hi.get(SIGNAL, VACUUM));
    let s01 = raw01.max(0.0);
    let s10 = raw10.max(0.0);

    let nominal = record.n_total as f64 * src.p_v * src.p_y * my * (-my).exp();
    Ok(DecoyBounds {
        s01_lb: s01,
        s10_lb: s10,
        s1_lb: 0.5 * (s01 + s10),
        n10_lb: nominal * s10,
        n01_lb: nominal * s01,
        e1ph_ub: 0.0,
        t_x: 0.0,
        n_x: 0.0,
        m_x: 0,
        floored: raw01 < 0.0 || raw10 < 0.0,
        clamped: false,
    })
}

/// Phase-slice statistics of the `xx` windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceStats {
    pub n_x: f64,
    pub m_x: u64,
    pub t_x: f64,
}

/// `n_x = sent_11 * 4 Ds / 360`, `m_x = detected - correct`, `t_x = m_x / n_x`.
///
/// A uniform relative phase lies within `Ds` of 0 or of `pi` with
/// probability `4 Ds / 360`.
pub fn slice_statistics(record: &ExperimentRecord) -> Result<SliceStats> {
    if !(record.ds_deg > 0.0 && record.ds_deg < 90.0) {
        return Err(Error::Domain {
            what: "ds_deg",
            value: record.ds_deg,
            expected: "(0, 90)",
        });
    }
    let n_x = record.sent[DECOY][DECOY] as f64 * 4.0 * record.ds_deg / 360.0;
    if n_x <= 0.0 {
        return Err(Error::EmptySlice);
    }
    let m_x = record.detected_11_ds.saturating_sub(record.correct_11_ds);
    Ok(SliceStats {
        n_x,
        m_x,
        t_x: m_x as f64 / n_x,
    })
}

/// Upper bound on the phase-flip error rate of the untagged bits,
/// clamped to `[0, 0.5]`. Returns the value and whether it was clamped.
pub fn phase_error_bound(
    bounds: &DecoyBounds,
    env: &RateEnvelope,
    src: &SourceParams,
) -> Result<(f64, bool)> {
    if !(bounds.s1_lb > 0.0) {
        return Err(Error::UndefinedBound);
    }
    let damp = (-2.0 * src.mu_x).exp();
    let e = (bounds.t_x - damp * env.lower.get(VACUUM, VACUUM) / 2.0)
        / (2.0 * src.mu_x * damp * bounds.s1_lb);
    let clamped = e.clamp(0.0, 0.5);
    Ok((clamped, clamped != e))
}

/// Runs the complete decoy analysis on a record.
///
/// In finite mode every observed count is replaced by the Chernoff bound
/// on its expectation that is pessimistic for the term it enters.
pub fn analyze(
    record: &ExperimentRecord,
    src: &SourceParams,
    mode: Mode,
    eps: f64,
) -> Result<(CountingRates, DecoyBounds)> {
    record.validate()?;
    src.validate()?;
    let rates = counting_rates(record)?;
    let env = match mode {
        Mode::Asymptotic => RateEnvelope::exact(rates),
        Mode::Finite => RateEnvelope::chernoff(record, eps)?,
    };
    let mut bounds = untagged_bounds(&env, src, record)?;
    let slice = slice_statistics(record)?;
    bounds.n_x = slice.n_x;
    bounds.m_x = slice.m_x;
    bounds.t_x = match mode {
        Mode::Asymptotic => slice.t_x,
        Mode::Finite => expected_upper(slice.m_x as f64, eps)? / slice.n_x,
    };
    let (e, clamped) = phase_error_bound(&bounds, &env, src)?;
    bounds.e1ph_ub = e;
    bounds.clamped = clamped;
    Ok((rates, bounds))
}
