//! Bias-voltage feedback holding the decoy-to-signal intensity ratio of a
//! drifting modulator.
//!
//! ```text
//! cargo run --release --example intensity_feedback
//! ```

use tfqkd::stabilize::{run_intensity_loop, IntensityLoopConfig};

fn main() -> tfqkd::Result<()> {
    let cfg = IntensityLoopConfig::default();
    let tr = run_intensity_loop(&cfg)?;
    println!("target ratio {}, {:.0} h run", cfg.ratio_target, cfg.duration_s / 3600.0);
    println!("relative ratio error after settling: {:.2}%", 100.0 * tr.relative_error);
    for k in (0..tr.t_s.len()).step_by(tr.t_s.len() / 8) {
        println!(
            "  t {:>6.0} s  ratio {:.4}  measured {:.4}  correction {:>+.3} V",
            tr.t_s[k], tr.ratio_true[k], tr.ratio_meas[k], tr.correction_v[k]
        );
    }
    Ok(())
}
