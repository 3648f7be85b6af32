use crate::error::{Error, Result};

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            expected: "[0, 1]",
        });
    }
    Ok(entropy_unchecked(x))
}

/// Entropy for arguments already known to lie in `[0, 1]`.
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Repeaterless secret-key capacity `-log2(1 - eta)` of a pure-loss channel.
pub fn plob_bound(eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Domain {
            what: "eta",
            value: eta,
            expected: "[0, 1)",
        });
    }
    // ln_1p keeps full precision at the 1e-16 transmittances of 1000 km links.
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}
