//! Relative-delay lock from rising-edge timing against a slow ramp.
//!
//! ```text
//! cargo run --release --example delay_lock
//! ```

use tfqkd::stabilize::{run_delay_loop, DelayLoopConfig};

fn main() -> tfqkd::Result<()> {
    let cfg = DelayLoopConfig::default();
    let tr = run_delay_loop(&cfg)?;
    let free = cfg.ramp_ps_per_s * cfg.duration_s;
    println!("free drift over {:.0} h: {free:.0} ps", cfg.duration_s / 3600.0);
    println!("locked residual std: {:.1} ps", tr.residual_std_ps);
    for k in (0..tr.t_s.len()).step_by(tr.t_s.len() / 8) {
        println!(
            "  t {:>6.0} s  delay {:>+7.1} ps  measured {:>+7.1}  correction {:>+8.1}",
            tr.t_s[k], tr.delay_ps[k], tr.measured_ps[k], tr.control_ps[k]
        );
    }
    Ok(())
}
