use rayon::prelude::*;
use serde::Serialize;

use super::{key_rate, KeyRateInputs};
use crate::error::Result;
use crate::model::{LinkBudget, Mode, SecurityParams, SourceParams};
use crate::simulate::{run_analytic, SimConfig};

/// Coarse grid explored before coordinate refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeGrid {
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub p_v: Vec<f64>,
    pub p_x: Vec<f64>,
    /// Refinement rounds; each halves the step sizes.
    pub rounds: usize,
    pub ds_deg: f64,
    pub phase_noise_sigma_deg: f64,
    pub mode: Mode,
}

impl Default for OptimizeGrid {
    fn default() -> Self {
        OptimizeGrid {
            mu_x: vec![0.04, 0.08, 0.12],
            mu_y: vec![0.3, 0.45, 0.6],
            p_v: vec![0.3, 0.45, 0.6],
            p_x: vec![0.05, 0.15, 0.3],
            rounds: 6,
            ds_deg: 12.0,
            phase_noise_sigma_deg: 4.3,
            mode: Mode::Finite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimized {
    pub src: SourceParams,
    pub r_per_pulse: f64,
    /// False when even the best point has no positive key.
    pub positive: bool,
    pub evaluations: usize,
}

/// Key rate of `src` on the analytic simulator's expected record.
fn objective(
    src: &SourceParams,
    link: &LinkBudget,
    sec: &SecurityParams,
    n_total: u64,
    grid: &OptimizeGrid,
) -> f64 {
    if src.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let cfg = SimConfig {
        ds_deg: grid.ds_deg,
        phase_noise_sigma_deg: grid.phase_noise_sigma_deg,
        ..SimConfig::new(*src, *link, n_total)
    };
    let Ok(record) = run_analytic(&cfg) else {
        return f64::NEG_INFINITY;
    };
    let inputs = KeyRateInputs {
        record,
        src: *src,
        sec: *sec,
        mode: grid.mode,
    };
    match key_rate(&inputs) {
        Ok(rep) if rep.decoy.is_some() => rep.r_per_pulse,
        _ => f64::NEG_INFINITY,
    }
}

fn params(v: [f64; 4]) -> SourceParams {
    SourceParams {
        mu_x: v[0],
        mu_y: v[1],
        p_v: v[2],
        p_x: v[3],
        p_y: 1.0 - v[2] - v[3],
    }
}

/// Larger rate wins; ties go to the lexicographically smaller parameters.
fn better(a: (f64, [f64; 4]), b: (f64, [f64; 4])) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1.partial_cmp(&b.1) == Some(std::cmp::Ordering::Less))
}

/// Source settings maximizing the finite-size key rate of a link.
pub fn optimize_sources(
    link: &LinkBudget,
    sec: &SecurityParams,
    n_total: u64,
) -> Result<Optimized> {
    optimize_sources_with(link, sec, n_total, &OptimizeGrid::default())
}

/// Grid search over `(mu_x, mu_y, p_v, p_x)` with `p_y = 1 - p_v - p_x`,
/// followed by coordinate descent from the best grid point.
pub fn optimize_sources_with(
    link: &LinkBudget,
    sec: &SecurityParams,
    n_total: u64,
    grid: &OptimizeGrid,
) -> Result<Optimized> {
    link.validate()?;
    sec.validate()?;
    let eval = |v: [f64; 4]| objective(&params(v), link, sec, n_total, grid);

    let mut points = Vec::new();
    for &a in &grid.mu_x {
        for &b in &grid.mu_y {
            for &c in &grid.p_v {
                for &d in &grid.p_x {
                    points.push([a, b, c, d]);
                }
            }
        }
    }
    let mut evaluations = points.len();
    let mut best = points
        .par_iter()
        .map(|&v| (eval(v), v))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0.0; 4]), |acc, x| if better(x, acc) { x } else { acc });

    let spread = |xs: &[f64]| {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ((hi - lo) / 4.0).max(0.01)
    };
    let mut step = [
        spread(&grid.mu_x),
        spread(&grid.mu_y),
        spread(&grid.p_v),
        spread(&grid.p_x),
    ];
    for _ in 0..grid.rounds {
        let mut improved = true;
        while improved {
            improved = false;
            for axis in 0..4 {
                let candidates: Vec<[f64; 4]> = [-1.0, 1.0]
                    .iter()
                    .map(|s| {
                        let mut v = best.1;
                        v[axis] += s * step[axis];
                        v
                    })
                    .collect();
                evaluations += candidates.len();
                for cand in candidates.into_par_iter().map(|v| (eval(v), v)).collect::<Vec<_>>() {
                    if better(cand, best) {
                        best = cand;
                        improved = true;
                    }
                }
            }
        }
        for s in step.iter_mut() {
            *s /= 2.0;
        }
    }
    Ok(Optimized {
        src: params(best.1),
        r_per_pulse: best.0,
        positive: best.0 > 0.0,
        evaluations,
    })
}
