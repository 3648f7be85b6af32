//! Two-wavelength polarization control over a drifting fiber, with and
//! without feedback.
//!
//! ```text
//! cargo run --release --example polarization_feedback -- 4
//! ```

use tfqkd::stabilize::{run_polarization_loop, PolarizationConfig, PolarizationMode, PolarizationState};

fn main() -> tfqkd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let on = PolarizationConfig { seed, ..PolarizationConfig::default() };
    let off = PolarizationConfig { feedback: false, ..on };
    let c = PolarizationState::default();

    for (label, cfg) in [("feedback off", off), ("feedback on", on)] {
        let tr = run_polarization_loop(&cfg, c)?;
        println!(
            "{label}: l1 in [{:.0}k, {:.0}k] {:.1}% of the time, l2 <= {} Hz {:.1}%",
            c.l1_low_hz / 1e3,
            c.l1_high_hz / 1e3,
            100.0 * tr.l1_in_band,
            c.l2_cap_hz,
            100.0 * tr.l2_under_cap
        );
        if cfg.feedback {
            let idle = tr.mode.iter().filter(|m| **m == PolarizationMode::Idle).count();
            let first = tr.mode.iter().position(|m| *m == PolarizationMode::Idle);
            println!("  idle {:.1}% of steps, first lock after {:?} s", 100.0 * idle as f64 / tr.mode.len() as f64, first);
        }
        for k in (0..tr.t_s.len()).step_by(3600) {
            println!("  {:>2} h  l1 {:>9.0} Hz  l2 {:>8.0} Hz  {:?}", k / 3600, tr.rate_l1_hz[k], tr.rate_l2_hz[k], tr.mode[k]);
        }
    }
    Ok(())
}
