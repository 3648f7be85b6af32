//! Chernoff confidence intervals and their empirical coverage.
//!
//! ```text
//! cargo run --release --example chernoff_bounds
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use tfqkd::{chernoff_expected_bounds, chernoff_observed_bounds};

fn main() -> tfqkd::Result<()> {
    let eps = 1e-10;
    println!("{:>10} {:>12} {:>12} {:>8}", "observed", "mean >=", "mean <=", "width");
    for x in [10.0, 100.0, 485.0, 4967.0, 1e5, 1e7] {
        let (lo, hi) = chernoff_expected_bounds(x, eps)?;
        println!("{x:>10} {lo:>12.2} {hi:>12.2} {:>7.2}%", 100.0 * (hi - lo) / x);
    }

    // Coverage at a looser failure probability, where misses are countable.
    let eps = 1e-3;
    let mean = 250.0;
    let (lo, hi) = chernoff_observed_bounds(mean, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pois = Poisson::new(mean).unwrap();
    let trials = 200_000;
    let (mut below, mut above) = (0, 0);
    for _ in 0..trials {
        let x: f64 = pois.sample(&mut rng);
        below += (x < lo) as u32;
        above += (x > hi) as u32;
    }
    println!(
        "\nPoisson({mean}): observed in [{lo:.1}, {hi:.1}] except {:.1e} below, {:.1e} above (eps {eps:e})",
        below as f64 / trials as f64,
        above as f64 / trials as f64
    );
    Ok(())
}
