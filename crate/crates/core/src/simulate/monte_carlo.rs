use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{Ports, SimConfig};
use crate::error::{Error, Result};
use crate::model::{CountMatrix, ExperimentRecord, DECOY};

/// Phase levels of the private phase randomization.
const PHASE_LEVELS: u32 = 16;

#[derive(Default)]
struct Tally {
    sent: CountMatrix,
    detected: CountMatrix,
    detected_11_ds: u64,
    correct_11_ds: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for a in 0..3 {
            for b in 0..3 {
                self.sent[a][b] += other.sent[a][b];
                self.detected[a][b] += other.detected[a][b];
            }
        }
        self.detected_11_ds += other.detected_11_ds;
        self.correct_11_ds += other.correct_11_ds;
        self
    }
}

/// Constants shared by all batches of one run.
struct Setup {
    ports: Ports,
    intensity: [f64; 3],
    /// Cumulative probabilities of the nine source pairs, row-major.
    cumulative: [f64; 9],
    /// Click probabilities of pairs whose outcome does not depend on phase.
    fixed: [[Option<(f64, f64)>; 3]; 3],
    cos_ds: f64,
    noise: Option<Normal<f64>>,
}

impl Setup {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let ports = Ports::new(&cfg.link);
        let intensity = [0.0, cfg.src.mu_x, cfg.src.mu_y];
        let mut cumulative = [0.0; 9];
        let mut fixed = [[None; 3]; 3];
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += cfg.src.probability(a) * cfg.src.probability(b);
                cumulative[3 * a + b] = acc;
                if intensity[a] == 0.0 || intensity[b] == 0.0 {
                    fixed[a][b] = Some(ports.clicks(intensity[a], intensity[b], 0.0));
                }
            }
        }
        cumulative[8] = f64::INFINITY;
        let sigma = cfg.phase_noise_sigma_deg.to_radians();
        let noise = if sigma > 0.0 {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?)
        } else {
            None
        };
        Ok(Setup {
            ports,
            intensity,
            cumulative,
            fixed,
            cos_ds: cfg.ds_deg.to_radians().cos(),
            noise,
        })
    }

    fn run_batch(&self, rng: &mut ChaCha8Rng, windows: u64) -> Tally {
        let mut t = Tally::default();
        for _ in 0..windows {
            let u: f64 = rng.random();
            let cell = self.cumulative.iter().position(|&c| u < c).unwrap_or(8);
            let (a, b) = (cell / 3, cell % 3);
            t.sent[a][b] += 1;

            let (p1, p2, slice) = match self.fixed[a][b] {
                Some((p1, p2)) => (p1, p2, None),
                None if a == DECOY && b == DECOY => {
                    let ka = rng.random_range(0..PHASE_LEVELS);
                    let kb = rng.random_range(0..PHASE_LEVELS);
                    let channel: f64 = rng.random_range(0.0..TAU);
                    let est = TAU * (ka as f64 - kb as f64) / PHASE_LEVELS as f64 + channel;
                    let noise = self.noise.map_or(0.0, |n| n.sample(rng));
                    let (p1, p2) = self.ports.clicks(self.intensity[a], self.intensity[b], (est + noise).cos());
                    let c = est.cos();
                    let slice = (c.abs() >= self.cos_ds).then_some(c > 0.0);
                    (p1, p2, slice)
                }
                None => {
                    let delta: f64 = rng.random_range(0.0..PI);
                    let (p1, p2) = self.ports.clicks(self.intensity[a], self.intensity[b], delta.cos());
                    (p1, p2, None)
                }
            };
            let c1 = rng.random::<f64>() < p1;
            let c2 = rng.random::<f64>() < p2;
            if c1 != c2 {
                t.detected[a][b] += 1;
                if let Some(constructive) = slice {
                    t.detected_11_ds += 1;
                    t.correct_11_ds += (c1 == constructive) as u64;
                }
            }
        }
        t
    }
}

/// Samples `cfg.n_total` windows one by one in batches of `batch`
/// windows. Batch `i` draws from stream `i` of a generator seeded with
/// `cfg.seed`, so the record depends only on the seed and batch size.
pub fn run_monte_carlo(cfg: &SimConfig, batch: u64) -> Result<ExperimentRecord> {
    cfg.validate()?;
    if batch == 0 || batch > cfg.n_total {
        return Err(Error::InvalidParams(format!(
            "batch = {batch} must lie in [1, n_total = {}]",
            cfg.n_total
        )));
    }
    let setup = Setup::new(cfg)?;
    let batches = cfg.n_total.div_ceil(batch);
    let tally = (0..batches)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let windows = batch.min(cfg.n_total - i * batch);
            setup.run_batch(&mut rng, windows)
        })
        .reduce(Tally::default, Tally::merge);
    let record = ExperimentRecord {
        n_total: cfg.n_total,
        sent: tally.sent,
        detected: tally.detected,
        ds_deg: cfg.ds_deg,
        detected_11_ds: tally.detected_11_ds,
        correct_11_ds: tally.correct_11_ds,
        eff_freq_hz: cfg.link.eff_freq_hz,
        observed_aopp: None,
    };
    record.validate()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkBudget, SourceParams};
    use crate::simulate::expected_counts;

    fn cfg(km: u32, n: u64) -> SimConfig {
        SimConfig {
            seed: 17,
            ..SimConfig::new(SourceParams::LONG_DISTANCE, LinkBudget::paper(km).unwrap(), n)
        }
    }

    #[test]
    fn same_seed_same_record() {
        let c = cfg(202, 200_000);
        assert_eq!(run_monte_carlo(&c, 50_000).unwrap(), run_monte_carlo(&c, 50_000).unwrap());
        let other = SimConfig { seed: 18, ..c };
        assert_ne!(run_monte_carlo(&c, 50_000).unwrap(), run_monte_carlo(&other, 50_000).unwrap());
    }

    #[test]
    fn no_decoy_source_no_decoy_detections() {
        let mut c = cfg(202, 300_000);
        c.src = SourceParams::new(0.08, 0.445, 0.6, 0.0, 0.4).unwrap();
        let r = run_monte_carlo(&c, 100_000).unwrap();
        for i in 0..3 {
            assert_eq!(r.detected[DECOY][i], 0);
            assert_eq!(r.detected[i][DECOY], 0);
        }
    }

    #[test]
    fn batch_bounds() {
        let c = cfg(202, 1000);
        assert!(run_monte_carlo(&c, 0).is_err());
        assert!(run_monte_carlo(&c, 1001).is_err());
    }

    #[test]
    fn high_rate_agreement_with_analytic() {
        // A lossless link so that every cell sees thousands of events.
        let link = LinkBudget {
            atten_ac_db: 3.0,
            atten_bc_db: 3.0,
            ..LinkBudget::paper(202).unwrap()
        };
        let c = SimConfig {
            link,
            ds_deg: 15.0,
            ..cfg(202, 2_000_000)
        };
        let r = run_monte_carlo(&c, 250_000).unwrap();
        let e = expected_counts(&c).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let exp = e.detected[a][b] * r.sent[a][b] as f64 / e.sent[a][b];
                let z = (r.detected[a][b] as f64 - exp) / exp.max(1.0).sqrt();
                assert!(z.abs() < 5.0, "cell {a}{b}: {} vs {exp}", r.detected[a][b]);
            }
        }
        let scale = r.sent[1][1] as f64 / e.sent[1][1];
        for (got, exp) in [
            (r.detected_11_ds, e.detected_11_ds * scale),
            (r.correct_11_ds, e.correct_11_ds * scale),
        ] {
            assert!((got as f64 - exp).abs() < 5.0 * exp.sqrt(), "{got} vs {exp}");
        }
    }
}
