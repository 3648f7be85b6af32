//! Source intensities and probabilities that maximize the finite-size rate
//! at a few distances.
//!
//! ```text
//! cargo run --release --example optimize_sources
//! ```

use tfqkd::keyrate::optimize_sources;
use tfqkd::{LinkBudget, SecurityParams};

fn main() -> tfqkd::Result<()> {
    let sec = SecurityParams::default();
    for km in [202, 499, 800] {
        let link = LinkBudget::paper(km).unwrap();
        let best = optimize_sources(&link, &sec, 100_000_000_000_000)?;
        let s = best.src;
        println!(
            "{km} km: R = {:.3e}  mu_x {:.3} mu_y {:.3} p_v {:.3} p_x {:.3} p_y {:.3}  ({} evaluations)",
            best.r_per_pulse, s.mu_x, s.mu_y, s.p_v, s.p_x, s.p_y, best.evaluations
        );
    }
    Ok(())
}
