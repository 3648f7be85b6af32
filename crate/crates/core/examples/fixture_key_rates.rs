//! Key rates of the bundled runs next to the published figures.
//!
//! ```text
//! cargo run --release --example fixture_key_rates
//! ```

use tfqkd::cli::{fixture, fixture_entries};
use tfqkd::keyrate::{key_rate, key_rate_vs_plob};
use tfqkd::LinkBudget;

fn main() -> tfqkd::Result<()> {
    println!("{:>6} {:>10} {:>12} {:>12} {:>7} {:>12} {:>6}", "run", "mode", "R", "published", "ratio", "R (bps)", "PLOB");
    for e in fixture_entries() {
        let report = key_rate(&fixture(&e.name)?.inputs(e.mode))?;
        let db = LinkBudget::paper(e.total_km).map(|l| l.total_atten_db()).unwrap_or(0.0);
        let plob = key_rate_vs_plob(&report, db)?;
        println!(
            "{:>6} {:>10} {:>12.4e} {:>12.4e} {:>7.3} {:>12.4e} {:>6}",
            e.name,
            e.mode.to_string(),
            report.r_per_pulse,
            e.reference.r_per_pulse,
            report.r_per_pulse / e.reference.r_per_pulse,
            report.r_bps,
            if plob.exceeds { "above" } else { "below" }
        );
    }
    Ok(())
}
