use rayon::prelude::*;
use serde::Serialize;

use super::report::{AsymptoticsReport, ReportConstants, ReportRow};
use super::{check_n_list, thermo_magnetization};
use crate::error::{usage, Error, Result};
use crate::finite_size::{
    abs_deviation_moment, abs_moment, finite_size_law, mc_estimate, DEFAULT_N_MAX,
};
use crate::quadrature::QuadratureConfig;
use crate::sequences::{
    g_tilde, gl_polynomial, limit_constant, params_at, xbar, MinimumSet, Regime, SequenceKind,
    SequenceSpec,
};

/// How `E|S_n/n|` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    Exact,
    /// Metropolis; row `n` uses seed `seed ^ n`.
    MonteCarlo {
        sweeps: usize,
        burn_in: usize,
        seed: u64,
    },
}

const THREE_POINT_BANNER: &str = "three-point-limit conjecture: g has global minimum set \
     {0, +x_bar, -x_bar}; no x_bar comparison is made below the threshold";

/// Aitken Δ² extrapolation of the last three values; the last value when
/// the second difference vanishes.
pub fn richardson_limit(values: &[f64]) -> Option<f64> {
    let [f1, f2, f3] = values.get(values.len().checked_sub(3)?..)? else {
        return None;
    };
    let denom = f1 + f3 - 2.0 * f2;
    if denom.abs() <= 1e-14 * f3.abs().max(1e-300) {
        return Some(*f3);
    }
    Some((f1 * f3 - f2 * f2) / denom)
}

fn base_constants(spec: &SequenceSpec) -> Result<ReportConstants> {
    let (g, e) = gl_polynomial(spec)?;
    let xb = xbar(&g);
    Ok(ReportConstants {
        sequence: spec.kind().label(),
        alpha: spec.alpha().to_string(),
        alpha0: e.alpha0_value(),
        theta: e.theta,
        regime: spec.regime(),
        x_bar: xb.value,
        minimum_set: xb.minimum_set,
        y_bar: None,
        z_bar: None,
        target: None,
        extrapolated: None,
        banner: (xb.minimum_set == MinimumSet::ThreePoint).then(|| THREE_POINT_BANNER.to_owned()),
    })
}

/// `n^{θα} m(β_n, K_n)` along the sequence; cost is independent of `n`.
pub fn run_thermo_asymptotics(spec: &SequenceSpec, n_list: &[u64]) -> Result<AsymptoticsReport> {
    check_n_list("run_thermo_asymptotics", n_list)?;
    let mut constants = base_constants(spec)?;
    let theta_alpha = constants.theta * spec.alpha().value();
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let p = params_at(spec, n)?;
            let m = thermo_magnetization(p);
            Ok(ReportRow {
                n,
                beta_n: p.beta(),
                kappa_n: p.kappa(),
                m_thermo: m,
                e_finite: None,
                scaled_m: (n as f64).powf(theta_alpha) * m,
                scaled_e: None,
                e_stderr: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    constants.target = Some(constants.x_bar);
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_m).collect();
    constants.extrapolated = richardson_limit(&scaled);
    Ok(AsymptoticsReport { rows, constants })
}

/// `E|S_n/n|` next to `m(β_n, K_n)`, with the scaling appropriate to the
/// regime of `α` and the matching limit constant attached.
pub fn run_finite_size_asymptotics(
    spec: &SequenceSpec,
    n_list: &[u64],
    estimator: Estimator,
    quad: &QuadratureConfig,
) -> Result<AsymptoticsReport> {
    const OP: &str = "run_finite_size_asymptotics";
    check_n_list(OP, n_list)?;
    let regime = spec.regime();
    if regime == Regime::Above {
        if let SequenceKind::Seq6 { .. } = spec.kind() {
            return Err(Error::Unsupported {
                op: OP,
                msg: "sequence 6 has no top-order limit above the threshold".into(),
            });
        }
    }
    if estimator == Estimator::Exact {
        let max = *n_list.last().expect("checked non-empty");
        if max > DEFAULT_N_MAX as u64 {
            return Err(Error::Resource {
                op: OP,
                msg: format!("exact enumeration needs n <= {DEFAULT_N_MAX}, got {max}"),
            });
        }
    }
    let mut constants = base_constants(spec)?;
    let (g, e) = gl_polynomial(spec)?;
    let alpha = spec.alpha().value();
    let theta_alpha = e.theta * alpha;
    let e_exponent = match regime {
        Regime::Below => theta_alpha,
        Regime::At | Regime::Above => e.theta * e.alpha0_value(),
    };
    match regime {
        Regime::Below => {
            constants.target =
                (constants.minimum_set != MinimumSet::ThreePoint).then_some(constants.x_bar);
        }
        Regime::At => {
            let z = limit_constant(&g, quad)?;
            constants.z_bar = Some(z);
            constants.target = Some(z);
        }
        Regime::Above => {
            let y = limit_constant(&g_tilde(spec)?, quad)?;
            constants.y_bar = Some(y);
            constants.target = Some(y);
        }
    }
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let p = params_at(spec, n)?;
            let m = thermo_magnetization(p);
            let (e_finite, e_stderr) = match estimator {
                Estimator::Exact => {
                    (abs_moment(&finite_size_law(n as usize, p)?, 1.0, 0.0), None)
                }
                Estimator::MonteCarlo {
                    sweeps,
                    burn_in,
                    seed,
                } => {
                    let est = mc_estimate(n as usize, p, sweeps, burn_in, seed ^ n)?;
                    (est.mean, Some(est.stderr))
                }
            };
            let nf = n as f64;
            Ok(ReportRow {
                n,
                beta_n: p.beta(),
                kappa_n: p.kappa(),
                m_thermo: m,
                e_finite: Some(e_finite),
                scaled_m: nf.powf(theta_alpha) * m,
                scaled_e: Some(nf.powf(e_exponent) * e_finite),
                e_stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scaled: Vec<f64> = rows.iter().filter_map(|r| r.scaled_e).collect();
    constants.extrapolated = richardson_limit(&scaled);
    Ok(AsymptoticsReport { rows, constants })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub e_finite: f64,
    pub m_thermo: f64,
    /// `E|S_n/n| / m(β_n, K_n)`.
    pub ratio: f64,
}

/// Ratio of the finite-size to the thermodynamic magnetization (exact law).
pub fn estimator_comparison(spec: &SequenceSpec, n_list: &[u64]) -> Result<Vec<RatioRow>> {
    check_n_list("estimator_comparison", n_list)?;
    n_list
        .par_iter()
        .map(|&n| {
            let p = params_at(spec, n)?;
            let m = thermo_magnetization(p);
            let e = abs_moment(&finite_size_law(n as usize, p)?, 1.0, 0.0);
            Ok(RatioRow {
                n,
                e_finite: e,
                m_thermo: m,
                ratio: e / m,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaRow {
    pub n: u64,
    /// `E| |S_n/n| − m(β_n, K_n) |`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEstimate {
    pub rows: Vec<KappaRow>,
    /// Minus the least-squares slope of `log deviation` against `log n`.
    pub fitted_slope: f64,
    /// `(1 − α/α₀)/2 + θα`.
    pub conjectured_kappa: f64,
}

/// Exploratory fit of the decay exponent of `E||S_n/n| − m|`.
pub fn kappa_fluctuation_estimate(spec: &SequenceSpec, n_list: &[u64]) -> Result<KappaEstimate> {
    const OP: &str = "kappa_fluctuation_estimate";
    check_n_list(OP, n_list)?;
    if n_list.len() < 2 {
        return Err(usage(OP, "need at least two n values to fit a slope"));
    }
    if spec.regime() != Regime::Below {
        return Err(usage(OP, "alpha must be below alpha0"));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let p = params_at(spec, n)?;
            let m = thermo_magnetization(p);
            let law = finite_size_law(n as usize, p)?;
            Ok(KappaRow {
                n,
                deviation: abs_deviation_moment(&law, m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.deviation.ln()))
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / k,
        pts.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(KappaEstimate {
        rows,
        fitted_slope: -sxy / sxx,
        conjectured_kappa: spec.exponents().kappa(spec.alpha().value()),
    })
}
