//! End-to-end experiments along the scaling sequences: scaled magnetization
//! tables, estimator comparison, moderate-deviation rates, weak-limit
//! distances and the fluctuation-exponent fit.

mod asymptotics;
mod limits;
mod report;

pub use asymptotics::{
    estimator_comparison, kappa_fluctuation_estimate, richardson_limit,
    run_finite_size_asymptotics, run_thermo_asymptotics, Estimator, KappaEstimate, KappaRow,
    RatioRow,
};
pub use limits::{mdp_rate_estimate, weak_limit_distance, MdpReport, MdpRow, LOG_TAIL_FLOOR};
pub use report::{AsymptoticsReport, ReportConstants, ReportRow, CSV_HEADER};

use crate::landscape::lowest_minimum;
use crate::model::ModelParams;
use crate::phase::{classify, PhaseRegion, BETA_C};

/// A nonzero minimum deeper than this below `G(0) = 0` is strictly global.
const STRICT_DEPTH: f64 = 1e-14;
/// Near-ties up to this depth are resolved by the phase classification.
const TIE_WINDOW: f64 = 1e-9;

/// Thermodynamic magnetization `m(β, K)`: the largest global minimizer of
/// `G_{β,K}` on `[0, 1]`.
///
/// On the first-order curve `G` has three global minimizers `{0, ±m}` and `m`
/// is returned; a near-tie elsewhere resolves toward 0.
pub fn thermo_magnetization(params: ModelParams) -> f64 {
    let Some(min) = lowest_minimum(params, 0.0) else {
        return 0.0;
    };
    if min.value < -STRICT_DEPTH {
        return min.x;
    }
    if params.beta() > BETA_C && min.value <= TIE_WINDOW {
        if let PhaseRegion::FirstOrderCurve | PhaseRegion::Coexistence = classify(params) {
            return min.x;
        }
    }
    0.0
}

/// Validates an `n` list: non-empty, positive and strictly increasing.
pub(crate) fn check_n_list(op: &'static str, n_list: &[u64]) -> crate::Result<()> {
    if n_list.is_empty() {
        return Err(crate::error::usage(op, "n_list must not be empty"));
    }
    if n_list[0] == 0 {
        return Err(crate::error::usage(op, "n_list entries must be >= 1"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::error::usage(op, "n_list must be strictly increasing"));
    }
    Ok(())
}
