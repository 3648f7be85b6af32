//! The simulator against the decoy analysis and the published rates.

use tfqkd::cli::{fixture, fixture_entry};
use tfqkd::decoy::analyze;
use tfqkd::keyrate::{key_rate, KeyRateInputs};
use tfqkd::simulate::{run_analytic, SimConfig};
use tfqkd::{LinkBudget, Mode, SourceParams};

/// Heralding probability of one photon from one arm, the other arm empty.
fn single_photon_yield(link: &LinkBudget, eta: f64) -> f64 {
    let (d1, d2) = link.dark_probabilities();
    let q1 = 0.5 * eta * link.det_eff_1 * link.window_eff;
    let q2 = 0.5 * eta * link.det_eff_2 * link.window_eff;
    q1 * (1.0 - d2) + q2 * (1.0 - d1) + (1.0 - q1 - q2) * (d1 * (1.0 - d2) + d2 * (1.0 - d1))
}

/// Relative shortfall of the two-intensity lower bound for yields linear in
/// photon number: the two-photon terms cancel, three and more remain.
fn decoy_gap(mu_x: f64, mu_y: f64) -> f64 {
    let mut gap = 0.0;
    let mut fact = 1.0;
    for n in 3..30 {
        fact *= (n - 1) as f64;
        gap += mu_x * mu_y * (mu_x.powi(n - 2) - mu_y.powi(n - 2)) / ((mu_y - mu_x) * fact);
    }
    gap
}

fn untagged_yields(src: SourceParams, km: u32) -> [(f64, f64); 2] {
    let link = LinkBudget::paper(km).unwrap();
    let cfg = SimConfig::new(src, link, 1_000_000_000_000_000_000);
    let (_, b) = analyze(&run_analytic(&cfg).unwrap(), &src, Mode::Asymptotic, 1e-10).unwrap();
    let (eta_a, eta_b) = link.transmittances();
    [
        (b.s10_lb, single_photon_yield(&link, eta_a)),
        (b.s01_lb, single_photon_yield(&link, eta_b)),
    ]
}

#[test]
fn untagged_yield_bounds_match_the_model() {
    let src = SourceParams::LONG_DISTANCE;
    let gap = decoy_gap(src.mu_x, src.mu_y);
    for km in [499, 800, 1002] {
        for (bound, truth) in untagged_yields(src, km) {
            assert!(bound <= truth);
            let rel = bound / truth - 1.0;
            assert!((rel - gap).abs() < 1e-3, "{km} km: {rel} vs {gap}");
        }
    }
}

#[test]
fn untagged_yield_bounds_tighten_for_weak_decoys() {
    let src = SourceParams::new(0.02, 0.1, 0.5, 0.25, 0.25).unwrap();
    for km in [499, 1002] {
        for (bound, truth) in untagged_yields(src, km) {
            assert!(bound <= truth && bound >= 0.995 * truth, "{km} km: {bound} vs {truth}");
        }
    }
}

fn simulated_rate(name: &str) -> (f64, f64, f64) {
    let e = fixture_entry(name).unwrap();
    let f = fixture(name).unwrap();
    let src = f.source.unwrap();
    let link = LinkBudget::paper(e.total_km).unwrap();
    let cfg = SimConfig {
        ds_deg: f.record.ds_deg,
        ..SimConfig::new(src, link, f.record.n_total)
    };
    let report = key_rate(&KeyRateInputs {
        record: run_analytic(&cfg).unwrap(),
        src,
        sec: f.security.unwrap(),
        mode: e.mode,
    })
    .unwrap();
    (link.total_atten_db(), report.r_per_pulse, e.reference.r_per_pulse)
}

#[test]
fn simulated_rates_follow_the_published_points() {
    let rows: Vec<_> = ["499", "600", "701", "800"].iter().map(|n| simulated_rate(n)).collect();
    for &(db, sim, published) in &rows {
        let ratio = sim / published;
        assert!((0.1..=10.0).contains(&ratio), "{db} dB: {sim:e} vs {published:e}");
    }
    // Square-root scaling: log10 R falls by 1/20 per dB.
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let slope = (last.1 / first.1).log10() / (last.0 - first.0);
    assert!((slope + 0.05).abs() <= 0.15 * 0.05, "{slope}");
}
