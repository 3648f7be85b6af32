//! Dual-band phase compensation: per-window phase from strong-reference
//! counts, wavelength scaling, offset from weak-reference clicks.
//!
//! ```text
//! cargo run --release --example phase_compensation
//! ```

use tfqkd::phasecomp::{estimate_window_phase, run_phase_demo, PhaseDemoConfig, ReferenceWindow};

fn main() -> tfqkd::Result<()> {
    // One window: counts of both detectors at the four phase settings.
    let w = ReferenceWindow::from_detectors([30, 14, 1, 15], [1, 16, 29, 14]);
    println!("single window: {} detections, phase {:.0} deg", w.total(), estimate_window_phase(&w)?);

    let cfg = PhaseDemoConfig::default();
    let r = run_phase_demo(&cfg)?;
    println!(
        "{:.0} s at {} Hz per detector, {} us windows, {} ms offset refresh",
        cfg.duration_s, cfg.ref_rate_hz, cfg.window_us, cfg.segment_ms
    );
    println!("  free drift std   {:>10.1} deg", r.free.std_deg);
    println!("  simple residual  {:>10.2} deg (rms {:.2})", r.simple.std_deg, r.simple.rms_deg);
    println!("  fine residual    {:>10.2} deg (rms {:.2})", r.fine.std_deg, r.fine.rms_deg);
    println!("  reduction        {:>10.0}x", r.reduction_factor);
    let offsets: Vec<String> = r.segment_offsets.iter().map(|o| format!("{o:.0}")).collect();
    println!("  offsets per segment: {}", offsets.join(" "));
    Ok(())
}
