use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::{heralding_probability, Ports, SimConfig};
use crate::error::Result;
use crate::model::{ExperimentRecord, DECOY};

/// Midpoint nodes over a full phase period.
const PHASE_NODES: usize = 360;
/// Nodes per post-selected arc.
const SLICE_NODES: usize = 64;
/// Nodes of the Gaussian phase-noise average, spanning +/- 6 sigma.
const NOISE_NODES: usize = 61;

/// Expected (real-valued) counts of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedCounts {
    pub sent: [[f64; 3]; 3],
    pub detected: [[f64; 3]; 3],
    pub detected_11_ds: f64,
    pub correct_11_ds: f64,
}

/// Phase-averaged heralding probability of one intensity pair.
fn mean_heralding(ports: &Ports, mu_a: f64, mu_b: f64) -> f64 {
    if mu_a == 0.0 || mu_b == 0.0 {
        let (p1, p2) = ports.clicks(mu_a, mu_b, 0.0);
        return heralding_probability(p1, p2);
    }
    let step = TAU / PHASE_NODES as f64;
    (0..PHASE_NODES)
        .map(|k| {
            let (p1, p2) = ports.clicks(mu_a, mu_b, ((k as f64 + 0.5) * step).cos());
            heralding_probability(p1, p2)
        })
        .sum::<f64>()
        / PHASE_NODES as f64
}

fn noise_nodes(sigma: f64) -> Vec<(f64, f64)> {
    if sigma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    let h = 12.0 * sigma / NOISE_NODES as f64;
    let raw: Vec<(f64, f64)> = (0..NOISE_NODES)
        .map(|k| {
            let x = -6.0 * sigma + (k as f64 + 0.5) * h;
            (x, (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let z: f64 = raw.iter().map(|r| r.1).sum();
    raw.into_iter().map(|(x, w)| (x, w / z)).collect()
}

/// Probability per decoy-decoy window of landing in the slice and being
/// heralded, and of being heralded on the correct detector.
fn slice_probabilities(ports: &Ports, mu: f64, ds: f64, sigma: f64) -> (f64, f64) {
    let noise = noise_nodes(sigma);
    let h = 2.0 * ds / SLICE_NODES as f64;
    let (mut heralded, mut correct) = (0.0, 0.0);
    for center in [0.0, PI] {
        for k in 0..SLICE_NODES {
            let est = center - ds + (k as f64 + 0.5) * h;
            for &(dn, w) in &noise {
                let (p1, p2) = ports.clicks(mu, mu, (est + dn).cos());
                let right = if center == 0.0 { p1 * (1.0 - p2) } else { p2 * (1.0 - p1) };
                heralded += w * h * heralding_probability(p1, p2);
                correct += w * h * right;
            }
        }
    }
    (heralded / TAU, correct / TAU)
}

/// Expected sent and heralded counts of a configuration.
pub fn expected_counts(cfg: &SimConfig) -> Result<ExpectedCounts> {
    cfg.validate()?;
    let ports = Ports::new(&cfg.link);
    let n = cfg.n_total as f64;
    let mut out = ExpectedCounts {
        sent: [[0.0; 3]; 3],
        detected: [[0.0; 3]; 3],
        detected_11_ds: 0.0,
        correct_11_ds: 0.0,
    };
    for a in 0..3 {
        for b in 0..3 {
            let sent = n * cfg.src.probability(a) * cfg.src.probability(b);
            out.sent[a][b] = sent;
            out.detected[a][b] =
                sent * mean_heralding(&ports, cfg.src.intensity(a), cfg.src.intensity(b));
        }
    }
    let (h, c) = slice_probabilities(
        &ports,
        cfg.src.mu_x,
        cfg.ds_deg.to_radians(),
        cfg.phase_noise_sigma_deg.to_radians(),
    );
    out.detected_11_ds = out.sent[DECOY][DECOY] * h;
    out.correct_11_ds = out.sent[DECOY][DECOY] * c;
    Ok(out)
}

/// Record of expected counts, rounded to the nearest integer.
pub fn run_analytic(cfg: &SimConfig) -> Result<ExperimentRecord> {
    let e = expected_counts(cfg)?;
    let round = |m: [[f64; 3]; 3]| m.map(|row| row.map(|v| v.round() as u64));
    let record = ExperimentRecord {
        n_total: cfg.n_total,
        sent: round(e.sent),
        detected: round(e.detected),
        ds_deg: cfg.ds_deg,
        detected_11_ds: e.detected_11_ds.round() as u64,
        correct_11_ds: e.correct_11_ds.round() as u64,
        eff_freq_hz: cfg.link.eff_freq_hz,
        observed_aopp: None,
    };
    record.validate()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aopp::tally_from_record;
    use crate::model::{LinkBudget, SourceParams, SIGNAL, VACUUM};

    #[test]
    fn closed_form_single_source() {
        // Only Alice sends: each port sees half her attenuated light.
        let link = LinkBudget {
            det_eff_1: 1.0,
            det_eff_2: 1.0,
            window_eff: 1.0,
            dark_rate_1: 0.0,
            dark_rate_2: 0.0,
            ..LinkBudget::paper_detectors()
        };
        let cfg = SimConfig::new(SourceParams::LONG_DISTANCE, link, 1_000_000);
        let e = expected_counts(&cfg).unwrap();
        let half = (-0.445f64 / 2.0).exp();
        let s_yv = 2.0 * half * (1.0 - half);
        let got = e.detected[SIGNAL][VACUUM] / e.sent[SIGNAL][VACUUM];
        assert!((got - s_yv).abs() < 1e-14, "{got} {s_yv}");
        assert_eq!(e.detected[VACUUM][VACUUM], 0.0);
    }

    #[test]
    fn phase_average_matches_fine_quadrature() {
        let link = LinkBudget::paper(202).unwrap();
        let ports = Ports::new(&link);
        let fine: f64 = (0..100_000)
            .map(|k| {
                let (p1, p2) = ports.clicks(0.445, 0.08, ((k as f64 + 0.5) * TAU / 1e5).cos());
                heralding_probability(p1, p2)
            })
            .sum::<f64>()
            / 1e5;
        let coarse = mean_heralding(&ports, 0.445, 0.08);
        assert!((fine - coarse).abs() / fine < 1e-12);
    }

    #[test]
    fn paper_like_1002_km_budget() {
        let link = LinkBudget::paper(1002).unwrap();
        let mut cfg = SimConfig::new(SourceParams::LONG_DISTANCE, link, 102_400_000_000_000);
        cfg.ds_deg = 10.0;
        let r = run_analytic(&cfg).unwrap();
        let e = tally_from_record(&r).unwrap().e_before();
        assert!((0.26..=0.30).contains(&e), "{e}");
        let vv = r.detected[VACUUM][VACUUM] as f64;
        assert!(vv >= 485.0 / 3.0 && vv <= 485.0 * 3.0, "{vv}");
    }

    #[test]
    fn slice_without_noise_or_dark_counts() {
        // Errors inside the slice come only from its finite width.
        let link = LinkBudget {
            dark_rate_1: 0.0,
            dark_rate_2: 0.0,
            det_eff_2: 0.60,
            ..LinkBudget::paper(600).unwrap()
        };
        let mut cfg = SimConfig::new(SourceParams::LONG_DISTANCE, link, 1e13 as u64);
        cfg.phase_noise_sigma_deg = 0.0;
        cfg.ds_deg = 12.0;
        let e = expected_counts(&cfg).unwrap();
        let qber = 1.0 - e.correct_11_ds / e.detected_11_ds;
        // Weak light: mean of (1 - V cos d)/2 over d in [-Ds, Ds], with V the
        // interference visibility left by the two arms' unequal losses.
        let (a, b) = (10f64.powf(-link.atten_ac_db / 10.0), 10f64.powf(-link.atten_bc_db / 10.0));
        let v = 2.0 * (a * b).sqrt() / (a + b);
        let ds = 12f64.to_radians();
        let oracle = 0.5 * (1.0 - v * ds.sin() / ds);
        assert!((qber - oracle).abs() / oracle < 0.01, "{qber} {oracle}");
    }
}
