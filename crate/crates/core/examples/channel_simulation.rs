//! Expected counts of the 202 km link against a Monte-Carlo run, then the
//! key rate of the sampled record.
//!
//! ```text
//! cargo run --release --example channel_simulation -- 100000000
//! ```

use std::time::Instant;

use tfqkd::keyrate::{key_rate, KeyRateInputs};
use tfqkd::simulate::{expected_counts, run_monte_carlo, SimConfig};
use tfqkd::{LinkBudget, Mode, SecurityParams, SourceParams};

fn main() -> tfqkd::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000_000);
    let cfg = SimConfig {
        seed: 1,
        ..SimConfig::new(SourceParams::LONG_DISTANCE, LinkBudget::paper(202).unwrap(), n)
    };
    let expected = expected_counts(&cfg)?;
    let start = Instant::now();
    let record = run_monte_carlo(&cfg, 1 << 20)?;
    println!("{n} windows in {:.2?}", start.elapsed());

    println!("{:>5} {:>12} {:>10} {:>7}", "cell", "expected", "sampled", "z");
    for a in 0..3 {
        for b in 0..3 {
            let e = expected.detected[a][b];
            let got = record.detected[a][b];
            println!("{:>5} {e:>12.1} {got:>10} {:>+7.2}", format!("{a}{b}"), (got as f64 - e) / e.max(1.0).sqrt());
        }
    }
    println!(
        "slice: {} heralded, {} correct (QBER {:.2}%)",
        record.detected_11_ds,
        record.correct_11_ds,
        100.0 * record.x_error_rate().unwrap_or(f64::NAN)
    );

    let report = key_rate(&KeyRateInputs {
        record,
        src: cfg.src,
        sec: SecurityParams::default(),
        mode: Mode::Asymptotic,
    })?;
    println!("asymptotic R = {:.4e} ({:?})", report.r_per_pulse, report.status);
    Ok(())
}
