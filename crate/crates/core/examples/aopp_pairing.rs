//! Actively-odd-parity pairing on synthetic keys and on a recorded run.
//!
//! ```text
//! cargo run --release --example aopp_pairing
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfqkd::aopp::{simulate_pairing, strings_from_record, tally_from_record};
use tfqkd::cli::fixture;

fn main() -> tfqkd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("{:>6} {:>9} {:>9} {:>8}", "E", "E' sim", "E' model", "kept");
    for e in [0.01, 0.05, 0.15, 0.28, 0.4] {
        let bob: Vec<bool> = (0..200_000).map(|_| rng.random()).collect();
        let alice: Vec<bool> = bob.iter().map(|&b| b ^ (rng.random::<f64>() < e)).collect();
        let out = simulate_pairing(&alice, &bob, 7)?;
        let model = e * e / ((1.0 - e).powi(2) + e * e);
        println!(
            "{e:>6} {:>9.5} {model:>9.5} {:>7.1}%",
            out.e_t_after(),
            100.0 * out.n_t_after as f64 / out.n_g as f64
        );
    }

    let record = fixture("1002")?.record;
    let tally = tally_from_record(&record)?;
    let (alice, bob) = strings_from_record(&record);
    let out = simulate_pairing(&alice, &bob, 0)?;
    println!("\n1002 km: n_t = {}, E = {:.2}%", tally.n_t, 100.0 * tally.e_before());
    println!(
        "  paired {} -> kept {} with E' = {:.2}% (recorded {} at {:.2}%)",
        out.n_g,
        out.n_t_after,
        100.0 * out.e_t_after(),
        tally.n_t_after,
        100.0 * tally.e_t_after
    );
    Ok(())
}
