use serde::Serialize;

use crate::error::{Error, Result};

/// Arrival-time histogram of reference pulses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseHistogram {
    /// Time of the left edge of bin 0 (ps).
    pub start_ps: f64,
    pub bin_width_ps: f64,
    pub counts: Vec<u64>,
}

impl PulseHistogram {
    fn center(&self, i: usize) -> f64 {
        self.start_ps + (i as f64 + 0.5) * self.bin_width_ps
    }
}

/// Arrival time of the pulse (ps).
///
/// The peak is the mean count over `[20 ns, 220 ns]` after a rough edge
/// (first bin at half the maximum); a least-squares line is fitted through
/// the contiguous bins between 10% and 60% of the peak around that edge, and
/// the arrival is where the line reaches 35% of the peak.
pub fn rising_edge_arrival(h: &PulseHistogram) -> Result<f64> {
    if !(h.bin_width_ps > 0.0) || h.counts.is_empty() {
        return Err(Error::InsufficientData("empty histogram".into()));
    }
    let c: Vec<f64> = h.counts.iter().map(|&n| n as f64).collect();
    let mut sorted = c.clone();
    sorted.sort_by(f64::total_cmp);
    let low = &sorted[..(sorted.len() / 10).max(1)];
    let floor = low.iter().sum::<f64>() / low.len() as f64;

    let max = sorted[sorted.len() - 1];
    let rough = c.iter().position(|&x| x >= 0.5 * max).unwrap_or(0);
    let from = rough + (20_000.0 / h.bin_width_ps).round() as usize;
    let to = (rough + (220_000.0 / h.bin_width_ps).round() as usize).min(c.len());
    let peak = if from < to {
        c[from..to].iter().sum::<f64>() / (to - from) as f64
    } else {
        max
    };
    if peak <= floor + 5.0 * floor.max(1.0).sqrt() {
        return Err(Error::NoEdge { peak, floor });
    }

    let (lo, hi) = (0.1 * peak, 0.6 * peak);
    let mut first = rough;
    while first > 0 && c[first - 1] >= lo {
        first -= 1;
    }
    let mut last = rough;
    while last + 1 < c.len() && c[last + 1] <= hi {
        last += 1;
    }
    let pts: Vec<(f64, f64)> = (first..=last)
        .filter(|&i| c[i] >= lo && c[i] <= hi)
        .map(|i| (h.center(i), c[i]))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData("fewer than two bins on the rising edge".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::NoEdge { peak, floor });
    }
    Ok(mt + (0.35 * peak - my) / slope)
}
