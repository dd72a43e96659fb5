//! Frequency grids and parallel spectrum scans.

use rayon::prelude::*;
use rayzero_core::amplitude::collect_scan;
use rayzero_core::{evaluate_point, AtomicSystem, Error, GuardPolicy, Result, SpectrumScan};

/// `points` equally spaced frequencies from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if points < 2 {
        return Err(Error::InvalidProblem(format!("a grid needs at least 2 points, got {points}")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// Evaluates the grid on the current rayon pool. Each point is computed
/// independently, so the result is identical for any thread count.
pub fn scan_parallel(system: &AtomicSystem, grid: &[f64], guard: &GuardPolicy) -> Result<SpectrumScan> {
    let results: Vec<_> = grid
        .par_iter()
        .map(|&w| evaluate_point(system, w, guard))
        .collect();
    collect_scan(system, results)
}

/// Runs of consecutive points with `P_L` below `threshold`, as
/// `(first_index, last_index, index_of_minimum)`.
pub fn depolarization_dips(scan: &SpectrumScan, threshold: f64) -> Vec<(usize, usize, usize)> {
    let mut dips = Vec::new();
    let mut current: Option<(usize, usize, usize)> = None;
    for (i, p) in scan.points.iter().enumerate() {
        if p.p_l < threshold {
            current = Some(match current {
                None => (i, i, i),
                Some((s, _, m)) => (s, i, if p.p_l < scan.points[m].p_l { i } else { m }),
            });
        } else if let Some(d) = current.take() {
            dips.push(d);
        }
    }
    dips.extend(current);
    dips
}
