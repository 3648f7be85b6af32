//! Actively odd-parity pairing.
//!
//! Bob pairs a bit 1 with a bit 0 and announces the pairs; Alice keeps a
//! pair only if her two bits also have odd parity. One bit of each
//! surviving pair is kept. Bit errors are suppressed quadratically while
//! the untagged fraction of the survivors has to be re-estimated.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decoy::DecoyBounds;
use crate::error::{check_open_unit, check_probability, Error, Result};
use crate::model::chernoff::{observed_lower, observed_upper};
use crate::model::{ExperimentRecord, SecurityParams, SIGNAL, VACUUM};

/// Statistics of the sifted key before and after pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawKeyTally {
    pub n_t: u64,
    /// Zeros in Bob's string (Bob sent the signal source).
    pub n_t0: u64,
    pub n_t1: u64,
    /// Bit errors among Bob's zeros and ones.
    pub err_0: u64,
    pub err_1: u64,
    pub n_g: u64,
    /// Expected odd-parity pairs under uniform random grouping.
    pub n_odd: f64,
    pub n_t_after: f64,
    pub e_t_after: f64,
    /// Whether the survivor statistics were observed rather than modeled.
    pub observed_after: bool,
}

impl RawKeyTally {
    /// Bit error rate of the sifted key before pairing.
    pub fn e_before(&self) -> f64 {
        (self.err_0 + self.err_1) as f64 / self.n_t as f64
    }

    /// Error-free bits (`n_t - n_vv - n_yy`).
    pub fn correct_bits(&self) -> u64 {
        self.n_t - self.err_0 - self.err_1
    }
}

/// Builds the key tally from the Z windows of a record.
///
/// When the record carries observed post-pairing statistics they are used
/// directly; otherwise survivors follow the expectation for independent
/// errors, `n_g((1-e0)(1-e1) + e0 e1)`.
pub fn tally_from_record(record: &ExperimentRecord) -> Result<RawKeyTally> {
    let d = &record.detected;
    let (vv, vy, yv, yy) = (
        d[VACUUM][VACUUM],
        d[VACUUM][SIGNAL],
        d[SIGNAL][VACUUM],
        d[SIGNAL][SIGNAL],
    );
    let n_t0 = vy + yy;
    let n_t1 = vv + yv;
    let n_t = n_t0 + n_t1;
    if n_t == 0 {
        return Err(Error::EmptyKey);
    }
    let n_g = n_t0.min(n_t1);
    let n_odd = if n_t > 1 {
        n_t0 as f64 * n_t1 as f64 / (n_t - 1) as f64
    } else {
        0.0
    };
    let (n_t_after, e_t_after, observed_after) = match record.observed_aopp {
        Some(obs) => (obs.n_t_after as f64, obs.e_t_after, true),
        None => {
            let (n, e) = expected_survivors(n_g, yy, n_t0, vv, n_t1);
            (n, e, false)
        }
    };
    Ok(RawKeyTally {
        n_t,
        n_t0,
        n_t1,
        err_0: yy,
        err_1: vv,
        n_g,
        n_odd,
        n_t_after,
        e_t_after,
        observed_after,
    })
}

fn expected_survivors(n_g: u64, err_0: u64, n_t0: u64, err_1: u64, n_t1: u64) -> (f64, f64) {
    if n_g == 0 {
        return (0.0, 0.0);
    }
    let e0 = err_0 as f64 / n_t0 as f64;
    let e1 = err_1 as f64 / n_t1 as f64;
    let keep = (1.0 - e0) * (1.0 - e1) + e0 * e1;
    if keep == 0.0 {
        return (0.0, 0.0);
    }
    (n_g as f64 * keep, e0 * e1 / keep)
}

/// Intermediate quantities of the finite-size estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteChain {
    pub u: f64,
    pub n10_lb: f64,
    pub n01_lb: f64,
    pub n1: f64,
    pub n1r: f64,
    pub n01p: f64,
    pub n10p: f64,
    pub n_min: f64,
    pub r: f64,
    pub e_tau: f64,
    pub ms_bar: f64,
}

/// Untagged survivors and their phase-flip error rate after pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoppOutcome {
    pub n1_after: f64,
    pub e1ph_after: f64,
    pub chain: Option<FiniteChain>,
}

/// `n1' = (n10/n_t1)(n01/n_t0) n_g` and `e1' = 2e(1-e)`.
pub fn aopp_asymptotic(bounds: &DecoyBounds, tally: &RawKeyTally, e1ph: f64) -> Result<AoppOutcome> {
    check_probability("e1ph", e1ph)?;
    if tally.n_t0 == 0 || tally.n_t1 == 0 {
        return Err(Error::DivisionByZero("n_t0 or n_t1 is zero".into()));
    }
    let n1 = (bounds.n10_lb / tally.n_t1 as f64) * (bounds.n01_lb / tally.n_t0 as f64)
        * tally.n_g as f64;
    Ok(AoppOutcome {
        n1_after: n1,
        e1ph_after: 2.0 * e1ph * (1.0 - e1ph),
        chain: None,
    })
}

/// Finite-size estimate of the untagged survivors.
///
/// Fails with [`Error::BoundCollapse`] when the statistics are too thin for
/// any untagged bit to survive with confidence `1 - eps`.
pub fn aopp_finite(
    bounds: &DecoyBounds,
    tally: &RawKeyTally,
    e1ph_ub: f64,
    sec: &SecurityParams,
) -> Result<AoppOutcome> {
    check_probability("e1ph_ub", e1ph_ub)?;
    let eps = check_open_unit("eps", sec.eps)?;
    let collapse = |what: &str| Err(Error::BoundCollapse(what.to_string()));
    if tally.n_g == 0 || tally.n_odd <= 0.0 {
        return collapse("no odd-parity pairs");
    }
    let n_t = tally.n_t as f64;
    let u = tally.n_g as f64 / (2.0 * tally.n_odd);
    let n10_lb = observed_lower(u * bounds.n10_lb, eps)?;
    let n01_lb = observed_lower(u * bounds.n01_lb, eps)?;
    let n1 = n10_lb + n01_lb;
    if n1 <= 0.0 {
        return collapse("n1 = 0");
    }
    let n1r = observed_lower(n1 * n1 / (2.0 * u * n_t), eps)?;
    if n1r <= 0.0 {
        return collapse("n1^r = 0");
    }
    let dev = (-eps.ln() / (2.0 * n1r)).sqrt();
    let n01p = 2.0 * n1r * (n01_lb / n1 - dev);
    let n10p = 2.0 * n1r * (n10_lb / n1 - dev);
    let n_min = n01p.min(n10p);
    if n_min <= 0.0 {
        return collapse("n_min <= 0");
    }
    let arg = n_min * (1.0 - n_min / (2.0 * n1r));
    if arg < 0.0 {
        return collapse("negative argument of phi^L");
    }
    let n1_after = 2.0 * observed_lower(arg, eps)?;
    if n1_after <= 0.0 {
        return collapse("n1' <= 0");
    }
    let rest = n1 - 2.0 * n1r;
    if rest <= 0.0 {
        return collapse("n1 <= 2 n1^r");
    }
    let r = n1 / rest * (3.0 * rest * rest / eps).ln();
    if 2.0 * n1r <= r || n1r <= r {
        return collapse("correction r exceeds n1^r");
    }
    let e_tau = observed_upper(2.0 * n1r * e1ph_ub, eps)? / (2.0 * n1r - r);
    let var = (n1r - r) * e_tau * (1.0 - e_tau);
    let ms_bar = observed_upper(var.max(0.0), eps)? + r;
    let e1ph_after = (2.0 * ms_bar / n1_after).min(1.0);
    Ok(AoppOutcome {
        n1_after,
        e1ph_after,
        chain: Some(FiniteChain {
            u,
            n10_lb,
            n01_lb,
            n1,
            n1r,
            n01p,
            n10p,
            n_min,
            r,
            e_tau,
            ms_bar,
        }),
    })
}

/// Result of one explicit pairing run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairingOutcome {
    pub n_g: u64,
    pub n_t_after: u64,
    pub errors_after: u64,
}

impl PairingOutcome {
    pub fn e_t_after(&self) -> f64 {
        if self.n_t_after == 0 {
            0.0
        } else {
            self.errors_after as f64 / self.n_t_after as f64
        }
    }
}

/// Pairs Bob's ones with his zeros at random and applies Alice's parity
/// check. The first bit (Bob's 1) of each surviving pair is kept.
pub fn simulate_pairing(alice: &[bool], bob: &[bool], seed: u64) -> Result<PairingOutcome> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ones: Vec<usize> = (0..bob.len()).filter(|&i| bob[i]).collect();
    let mut zeros: Vec<usize> = (0..bob.len()).filter(|&i| !bob[i]).collect();
    ones.shuffle(&mut rng);
    zeros.shuffle(&mut rng);
    let mut out = PairingOutcome {
        n_g: ones.len().min(zeros.len()) as u64,
        n_t_after: 0,
        errors_after: 0,
    };
    for (&i, &j) in ones.iter().zip(&zeros) {
        if alice[i] != alice[j] {
            out.n_t_after += 1;
            out.errors_after += (alice[i] != bob[i]) as u64;
        }
    }
    Ok(out)
}

/// Bit strings with the Z-window statistics of a record: Bob's zeros come
/// from `vy` (correct) and `yy` (error), his ones from `yv` (correct) and
/// `vv` (error).
pub fn strings_from_record(record: &ExperimentRecord) -> (Vec<bool>, Vec<bool>) {
    let d = &record.detected;
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for (n, a, b) in [
        (d[VACUUM][SIGNAL], false, false),
        (d[SIGNAL][SIGNAL], true, false),
        (d[SIGNAL][VACUUM], true, true),
        (d[VACUUM][VACUUM], false, true),
    ] {
        alice.extend(std::iter::repeat_n(a, n as usize));
        bob.extend(std::iter::repeat_n(b, n as usize));
    }
    (alice, bob)
}
