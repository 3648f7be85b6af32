//! Chernoff bounds for sums of independent indicator variables.
//!
//! The bounds use the unrelaxed Chernoff exponent. For a sum `X` of
//! independent Bernoulli (or Poisson) variables with mean `x`,
//!
//! ```text
//! P(X >= x(1+d)) <= exp(-x g(d)),   P(X <= x(1-d)) <= exp(-x g(-d)),
//! g(t) = (1+t) ln(1+t) - t
//! ```
//!
//! Each side is solved for `exp(-x g) = eps` by bisection. The
//! expectation bounds invert the same tails: given one observation `X`,
//! the upper bound is the largest mean whose lower tail still reaches `X`
//! with probability `eps`, and symmetrically for the lower bound.

use crate::error::{check_open_unit, Error, Result};

fn kl_exponent(t: f64) -> f64 {
    if t <= -1.0 {
        1.0
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

/// Finds the root of an increasing function on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn check_count(what: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain {
            what,
            value: x,
            expected: ">= 0",
        })
    }
}

/// `phi^L(x)`: lower bound on an observed count whose expectation is `x`.
pub fn observed_lower(expected: f64, eps: f64) -> Result<f64> {
    let x = check_count("expected", expected)?;
    let beta = -check_open_unit("eps", eps)?.ln();
    if x <= beta {
        // Even X = 0 has probability e^-x >= eps.
        return Ok(0.0);
    }
    let d = bisect(0.0, 1.0, |d| x * kl_exponent(-d) - beta);
    Ok(x * (1.0 - d))
}

/// `phi^U(x)`: upper bound on an observed count whose expectation is `x`.
pub fn observed_upper(expected: f64, eps: f64) -> Result<f64> {
    let x = check_count("expected", expected)?;
    let beta = -check_open_unit("eps", eps)?.ln();
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while x * kl_exponent(hi) < beta {
        hi *= 2.0;
    }
    let d = bisect(0.0, hi, |d| x * kl_exponent(d) - beta);
    Ok(x * (1.0 + d))
}

/// `(phi^L(x), phi^U(x))`.
pub fn chernoff_observed_bounds(expected: f64, eps: f64) -> Result<(f64, f64)> {
    Ok((observed_lower(expected, eps)?, observed_upper(expected, eps)?))
}

/// Lower bound on the expectation given one observation.
pub fn expected_lower(observed: f64, eps: f64) -> Result<f64> {
    let obs = check_count("observed", observed)?;
    let beta = -check_open_unit("eps", eps)?.ln();
    if obs == 0.0 {
        return Ok(0.0);
    }
    // h(L) = X ln(X/L) - X + L falls from +inf to 0 on (0, X].
    let h = |l: f64| obs * (obs / l).ln() - obs + l;
    if h(f64::MIN_POSITIVE) <= beta {
        return Ok(0.0);
    }
    Ok(bisect(0.0, obs, |l| beta - h(l.max(f64::MIN_POSITIVE))))
}

/// Upper bound on the expectation given one observation.
pub fn expected_upper(observed: f64, eps: f64) -> Result<f64> {
    let obs = check_count("observed", observed)?;
    let beta = -check_open_unit("eps", eps)?.ln();
    if obs == 0.0 {
        return Ok(beta);
    }
    // h(U) = U - X - X ln(U/X) rises from 0 at U = X.
    let h = |u: f64| u - obs - obs * (u / obs).ln();
    let mut hi = obs + beta + 1.0;
    while h(hi) < beta {
        hi *= 2.0;
    }
    Ok(bisect(obs, hi, |u| h(u) - beta))
}

/// Bounds on the expectation of a count given one observation of it.
pub fn chernoff_expected_bounds(observed: f64, eps: f64) -> Result<(f64, f64)> {
    Ok((expected_lower(observed, eps)?, expected_upper(observed, eps)?))
}
