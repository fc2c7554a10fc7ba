use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::check_n_list;
use crate::error::{usage, Error, Result};
use crate::finite_size::{finite_size_law, log_tail_mass, SpinLawExact};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::sequences::{
    g_tilde, gl_polynomial, params_at, xbar, EvenPolynomial, Regime, SequenceSpec,
};

/// Tail masses below `e^{LOG_TAIL_FLOOR}` are reported as saturated.
pub const LOG_TAIL_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdpRow {
    pub n: u64,
    pub log_tail: f64,
    /// `−n^{−u} log P{|S_n|/n^{1−θα} ≥ a}`; absent when saturated.
    pub rate_est: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdpReport {
    pub a: f64,
    /// `Γ([a, ∞)) = g(a) − g(x̄)`.
    pub target: f64,
    /// Speed exponent `u = 1 − α/α₀`.
    pub speed: f64,
    pub rows: Vec<MdpRow>,
}

/// Moderate-deviation rate estimates from exact tail masses, for `α < α₀`.
pub fn mdp_rate_estimate(spec: &SequenceSpec, a: f64, n_list: &[u64]) -> Result<MdpReport> {
    const OP: &str = "mdp_rate_estimate";
    check_n_list(OP, n_list)?;
    if spec.regime() != Regime::Below {
        return Err(usage(OP, "alpha must be below alpha0"));
    }
    let (g, e) = gl_polynomial(spec)?;
    let xb = xbar(&g).value;
    if !(a > xb) {
        return Err(usage(
            OP,
            format!("a = {a} must exceed x_bar = {xb}; the rate vanishes at the minimizer"),
        ));
    }
    let alpha = spec.alpha().value();
    let u = 1.0 - alpha / e.alpha0_value();
    let gamma = e.theta * alpha;
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let law = finite_size_law(n as usize, params_at(spec, n)?)?;
            let lt = log_tail_mass(&law, gamma, a);
            let saturated = !(lt >= LOG_TAIL_FLOOR);
            Ok(MdpRow {
                n,
                log_tail: lt,
                rate_est: (!saturated).then(|| -(n as f64).powf(-u) * lt),
                saturated,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MdpReport {
        a,
        target: g.eval(a) - g.eval(xb),
        speed: u,
        rows,
    })
}

/// Points on which the two CDFs are compared.
const CDF_GRID: usize = 8001;
/// Lattice points with smaller log-probability are dropped from the mixture.
const LOG_P_FLOOR: f64 = -60.0;

/// `P{S_n/scale + σZ ≤ x}` from the atoms `(s/scale, P(s))`.
fn convolved_cdf(atoms: &[(f64, f64)], sigma: f64, x: f64) -> f64 {
    let mut acc = 0.0;
    for &(loc, p) in atoms {
        acc += p * 0.5 * erfc(-(x - loc) / (sigma * std::f64::consts::SQRT_2));
    }
    acc
}

fn mixture_atoms(law: &SpinLawExact, scale: f64) -> Vec<(f64, f64)> {
    law.probabilities()
        .filter(|&(s, _)| law.log_probability(s) >= LOG_P_FLOOR)
        .map(|(s, p)| (s as f64 / scale, p))
        .collect()
}

/// CDF of the density `∝ e^{−p}` on the given sorted grid.
fn polynomial_cdf(poly: &EvenPolynomial, grid: &[f64], quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let floor = poly.eval(xbar(poly).value).min(0.0);
    let w = |x: f64| (-(poly.eval(x) - floor)).exp();
    let pieces: Vec<f64> = grid
        .par_windows(2)
        .map(|win| integrate(w, win, quad.rel_tol))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = pieces.iter().sum();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut run = 0.0;
    cdf.push(0.0);
    for p in pieces {
        run += p;
        cdf.push(run / total);
    }
    Ok(cdf)
}

/// Kolmogorov distance between the law of `S_n/n^{1−θα₀} + W/n^{1/2−θα₀}`
/// (exact, with the smoothing Gaussian `W ~ N(0, 1/(2βK))`) and the limit
/// law `∝ e^{−g}` at `α = α₀` or `∝ e^{−g̃}` above it.
pub fn weak_limit_distance(spec: &SequenceSpec, n: u64, quad: &QuadratureConfig) -> Result<f64> {
    const OP: &str = "weak_limit_distance";
    quad.validate()?;
    let target = match spec.regime() {
        Regime::Below => return Err(usage(OP, "alpha must be at least alpha0")),
        Regime::At => gl_polynomial(spec)?.0,
        Regime::Above => g_tilde(spec).map_err(|e| match e {
            Error::Unsupported { msg, .. } => Error::Unsupported { op: OP, msg },
            other => other,
        })?,
    };
    if n == 0 {
        return Err(usage(OP, "n must be >= 1"));
    }
    let e = spec.exponents();
    let gamma = e.theta * e.alpha0_value();
    let p = params_at(spec, n)?;
    let law = finite_size_law(n as usize, p)?;
    let nf = n as f64;
    let scale = nf.powf(1.0 - gamma);
    let sigma = (2.0 * p.beta() * p.kappa()).powf(-0.5) / nf.powf(0.5 - gamma);
    let atoms = mixture_atoms(&law, scale);

    let xb = xbar(&target).value;
    let floor = target.eval(xb).min(0.0);
    let mut cut = xb.max(1.0);
    while target.eval(cut) - floor < quad.tail_cut {
        cut *= 1.25;
    }
    let reach = atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max) + 12.0 * sigma;
    let half = cut.max(reach);
    let grid: Vec<f64> = (0..CDF_GRID)
        .map(|i| -half + 2.0 * half * i as f64 / (CDF_GRID - 1) as f64)
        .collect();

    let limit = polynomial_cdf(&target, &grid, quad)?;
    let dist = grid
        .par_iter()
        .zip(limit.par_iter())
        .map(|(&x, &f)| (convolved_cdf(&atoms, sigma, x) - f).abs())
        .reduce(|| 0.0, f64::max);
    Ok(dist.clamp(0.0, 1.0))
}
