//! Post-processing and security analysis for sending-or-not-sending
//! twin-field QKD.
//!
//! The pipeline runs from an [`ExperimentRecord`] of sent and heralded
//! counts to a secure key rate:
//!
//! 1. [`decoy`] bounds the untagged single-photon counts and the phase-flip
//!    error rate from the three-intensity statistics.
//! 2. [`aopp`] applies actively-odd-parity pairing to the raw key and
//!    carries the bounds through the pairing.
//! 3. [`keyrate`] assembles the key rate, compares it with the repeaterless
//!    bound and optimizes source settings.
//!
//! Records can be read from files ([`cli`]) or generated by the channel
//! simulator ([`simulate`]). [`phasecomp`] and [`stabilize`] hold the
//! phase-estimation and feedback algorithms that keep the interferometer
//! usable over long fibers.
//!
//! ```
//! use tfqkd::{cli, keyrate, Mode};
//!
//! let fx = cli::fixture("1002").unwrap();
//! let report = keyrate::key_rate(&fx.inputs(Mode::Asymptotic)).unwrap();
//! assert!(report.r_per_pulse > 9e-12 && report.r_per_pulse < 1e-11);
//! ```

pub mod aopp;
pub mod cli;
pub mod decoy;
mod error;
pub mod keyrate;
pub mod model;
pub mod phasecomp;
pub mod simulate;
pub mod stabilize;

pub use error::{Error, Result};
pub use model::{
    binary_entropy, chernoff_expected_bounds, chernoff_observed_bounds, plob_bound,
    ExperimentRecord, LinkBudget, Mode, SecurityParams, SourceParams,
};
