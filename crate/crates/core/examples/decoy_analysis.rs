//! Decoy-state bounds for one run, asymptotic and with statistical
//! fluctuations.
//!
//! ```text
//! cargo run --release --example decoy_analysis -- 499
//! ```

use tfqkd::cli::fixture;
use tfqkd::decoy::analyze;
use tfqkd::Mode;

fn main() -> tfqkd::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "1002".into());
    let file = fixture(&name)?;
    let inputs = file.inputs(Mode::Asymptotic);

    for mode in [Mode::Asymptotic, Mode::Finite] {
        let (rates, b) = analyze(&inputs.record, &inputs.src, mode, inputs.sec.eps)?;
        println!("{name} km, {mode}");
        for a in 0..3 {
            let row: Vec<String> = (0..3).map(|r| format!("{:.4e}", rates.get(a, r))).collect();
            println!("  S_{a}x  {}", row.join("  "));
        }
        println!("  s01 >= {:.4e}  s10 >= {:.4e}  s1 >= {:.4e}", b.s01_lb, b.s10_lb, b.s1_lb);
        println!("  n1  >= {:.1}  (n10 {:.1}, n01 {:.1})", b.n1_lb(), b.n10_lb, b.n01_lb);
        println!("  slice: {} errors in {:.0} windows, T_x = {:.4e}", b.m_x, b.n_x, b.t_x);
        println!("  e1ph <= {:.4}%", 100.0 * b.e1ph_ub);
    }
    Ok(())
}
