//! Local minima of `G_{β,K}` on a positive interval.
//!
//! Stationary points are bracketed by a sign scan of `G'` over a uniform
//! 4001-point grid on `[0, 1]` merged with a geometric grid near the origin
//! (close to the tricritical point the nonzero minimizer can be ~1e-3), then
//! refined by safeguarded Newton on `G'`.

use crate::model::{free_energy_deriv_unchecked, free_energy_unchecked, ModelParams};

pub(crate) const SCAN_POINTS: usize = 4001;
const GEOMETRIC_POINTS: usize = 80;
const GEOMETRIC_FLOOR: f64 = 1e-8;

/// A local minimum `x` of `G` with its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LocalMin {
    pub x: f64,
    pub value: f64,
}

fn scan_grid(lower: f64) -> Vec<f64> {
    let step = 1.0 / (SCAN_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..GEOMETRIC_POINTS)
        .map(|i| {
            let f = i as f64 / (GEOMETRIC_POINTS - 1) as f64;
            GEOMETRIC_FLOOR * (step / GEOMETRIC_FLOOR).powf(f)
        })
        .chain((1..SCAN_POINTS).map(|i| i as f64 * step))
        .filter(|&x| x > lower)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.insert(0, lower);
    grid
}

/// All interior local minima of `G` in `(lower, 1]`, sorted by `x`.
pub(crate) fn local_minima(params: ModelParams, lower: f64) -> Vec<LocalMin> {
    let grid = scan_grid(lower);
    let d = |x: f64| free_energy_deriv_unchecked(params, x, 1);
    let mut out = Vec::new();
    let mut prev_x = grid[0];
    let mut prev_d = d(prev_x);
    for &x in &grid[1..] {
        let dx = d(x);
        if prev_d < 0.0 && dx >= 0.0 {
            let root = refine(params, prev_x, x);
            out.push(LocalMin {
                x: root,
                value: free_energy_unchecked(params, root),
            });
        }
        prev_x = x;
        prev_d = dx;
    }
    out
}

/// Lowest interior local minimum in `(lower, 1]`; among values equal to
/// machine precision the largest `x` wins.
pub(crate) fn lowest_minimum(params: ModelParams, lower: f64) -> Option<LocalMin> {
    local_minima(params, lower)
        .into_iter()
        .reduce(|best, cand| if cand.value <= best.value { cand } else { best })
}

/// Root of `G'` in `[lo, hi]` with `G'(lo) < 0 ≤ G'(hi)`.
fn refine(params: ModelParams, mut lo: f64, mut hi: f64) -> f64 {
    let d1 = |x: f64| free_energy_deriv_unchecked(params, x, 1);
    let d2 = |x: f64| free_energy_deriv_unchecked(params, x, 2);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = d1(x);
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let slope = d2(x);
        let newton = x - f / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_symmetric_phase_minimum() {
        let p = ModelParams::new(1.0, 1.5).unwrap();
        let m = lowest_minimum(p, 0.0).unwrap();
        assert!(m.x > 0.1 && m.value < 0.0);
        assert!(free_energy_deriv_unchecked(p, m.x, 1).abs() < 1e-13);
    }

    #[test]
    fn no_minimum_in_single_phase() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(local_minima(p, 0.0).is_empty());
    }

    #[test]
    fn grid_is_sorted_and_starts_at_lower() {
        let g = scan_grid(1e-4);
        assert_eq!(g[0], 1e-4);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 1.0);
    }
}
