//! Domain types and scalar primitives shared by the analysis modules.

pub mod chernoff;
mod math;
mod mode;
mod params;
mod record;

pub use chernoff::{chernoff_expected_bounds, chernoff_observed_bounds};
pub use math::{binary_entropy, plob_bound};
pub(crate) use math::entropy_unchecked;
pub use mode::Mode;
pub use params::{
    db_to_transmittance, LinkBudget, SecurityParams, SourceParams, FIBER_DB_PER_KM, FIBER_TABLE,
};
pub use record::{CountMatrix, ExperimentRecord, ObservedAopp, DECOY, SIGNAL, VACUUM};
