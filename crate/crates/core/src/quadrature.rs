//! Adaptive Gauss–Kronrod (7/15) integration with global error control, and
//! Gaussian expectations by 64-node Gauss–Hermite.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Accuracy and truncation settings for the improper integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative accuracy requested from the integrator.
    pub rel_tol: f64,
    /// Integrands `e^{−φ}` are truncated where `φ − min φ` reaches this value.
    pub tail_cut: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            tail_cut: 60.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(usage("QuadratureConfig", "rel_tol must be > 0"));
        }
        if !(self.tail_cut > 0.0) {
            return Err(usage("QuadratureConfig", "tail_cut must be > 0"));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    abs_value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut kabs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += WGK[i] * (f1 + f2);
        kabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        abs_value: kabs * h.abs(),
        err: ((k - g) * h).abs(),
    }
}

/// `∫ f` over `[points[0], points[last]]`, with the interior points used as
/// initial breakpoints (kinks, peaks).
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], rel_tol: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(usage("integrate", "need at least two breakpoints"));
    }
    let mut heap: BinaryHeap<Piece> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();
    let sums = |heap: &BinaryHeap<Piece>| {
        heap.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.abs_value, acc.2 + p.err)
        })
    };
    let (mut total, mut total_abs, mut err) = sums(&heap);
    loop {
        let tol = (rel_tol * total.abs()).max(50.0 * f64::EPSILON * total_abs);
        if err <= tol || total_abs == 0.0 {
            // running sums drift; report the exact sum of the final pieces
            return Ok(sums(&heap).0);
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numeric {
                op: "integrate",
                msg: format!("no convergence after {MAX_INTERVALS} subintervals"),
                achieved: err / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in f64
            return Err(Error::Numeric {
                op: "integrate",
                msg: "subinterval collapsed to machine precision".into(),
                achieved: err / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        let (left, right) = (kronrod(&f, worst.a, mid), kronrod(&f, mid, worst.b));
        total += left.value + right.value - worst.value;
        total_abs += left.abs_value + right.abs_value - worst.abs_value;
        err = (err + left.err + right.err - worst.err).max(0.0);
        heap.push(left);
        heap.push(right);
        if heap.len() % 256 == 0 {
            (total, total_abs, err) = sums(&heap);
        }
    }
}

fn hermite_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gh = GaussHermite::new(NonZeroUsize::new(64).expect("nonzero"));
        gh.iter().map(|(x, w)| (*x, *w)).collect()
    })
}

/// `E f(μ + σZ)` for standard normal `Z` by 64-node Gauss–Hermite.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, mu: f64, sigma: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * sigma;
    hermite_rule()
        .iter()
        .map(|&(x, w)| w * f(mu + s * x))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt()
}
