//! Phase diagram: the second-order curve `K(β) = (e^β + 2)/(4β)`, its
//! closed-form derivatives, the implicitly defined first-order curve `K₁(β)`
//! for `β > β_c`, and region classification.
//!
//! The tricritical point is `(β_c, K(β_c)) = (log 4, 3/(2 log 4))`. The value
//! `3/(2 log 4) ≈ 1.0820` is what the formula for `K(β)` gives at `β_c`; the
//! shorthand "3/2 log 4" that appears in some write-ups means `3/(2·log 4)`,
//! not `(3/2)·log 4`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::error::{domain, usage, Error, Result};
use crate::landscape::lowest_minimum;
use crate::model::{free_energy_unchecked, ModelParams};

/// `β_c = log 4`.
pub const BETA_C: f64 = std::f64::consts::LN_2 * 2.0;

/// Tolerance used to decide whether a point sits on a curve.
pub const CURVE_TOL: f64 = 1e-12;

/// Highest derivative order of `K(β)` exposed.
pub const MAX_K_DERIV_ORDER: u32 = 12;

/// Lower end `δ` of the search interval for the nonzero minimizer when solving
/// for `K₁`.
const FIRST_ORDER_DELTA: f64 = 1e-4;
const FIRST_ORDER_BRACKET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseRegion {
    SinglePhase,
    SecondOrderCurve,
    FirstOrderCurve,
    Coexistence,
    TricriticalPoint,
}

/// Constants attached to the tricritical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalConstants {
    pub beta_c: f64,
    pub k_at_beta_c: f64,
    /// `ℓ_c = K''(β_c) − 5/(4β_c)`, the conjectured value of `K₁''(β_c)`.
    pub ell_c: f64,
}

impl CriticalConstants {
    pub fn get() -> Self {
        let beta_c = BETA_C;
        Self {
            beta_c,
            k_at_beta_c: k_curve(beta_c),
            ell_c: k_curve_deriv(beta_c, 2) - 5.0 / (4.0 * beta_c),
        }
    }
}

fn check_beta(op: &'static str, beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("beta must be > 0, got {beta}")))
    }
}

/// `K(β) = (e^β + 2)/(4β)`. For `β > β_c` this is the spinodal curve.
pub fn second_order_k(beta: f64) -> Result<f64> {
    check_beta("second_order_k", beta)?;
    Ok(k_curve(beta))
}

#[inline]
pub(crate) fn k_curve(beta: f64) -> f64 {
    (beta.exp() + 2.0) / (4.0 * beta)
}

/// `d^order K / dβ^order` at `β`, `1 ≤ order ≤ 12`.
pub fn second_order_k_deriv(beta: f64, order: u32) -> Result<f64> {
    check_beta("second_order_k_deriv", beta)?;
    if order == 0 {
        return Ok(k_curve(beta));
    }
    if order > MAX_K_DERIV_ORDER {
        return Err(usage(
            "second_order_k_deriv",
            format!("order {order} exceeds the cap {MAX_K_DERIV_ORDER}"),
        ));
    }
    Ok(k_curve_deriv(beta, order))
}

/// Leibniz rule on `e^β · 1/(4β)` plus `d^j (1/(2β)) = (−1)^j j!/(2β^{j+1})`.
pub(crate) fn k_curve_deriv(beta: f64, order: u32) -> f64 {
    let j = order as i32;
    // d^i (1/β) = (−1)^i i! / β^{i+1}
    let inv_deriv = |i: i32| -> f64 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * factorial(i as u32) / beta.powi(i + 1)
    };
    let exp_part: f64 = (0..=j)
        .map(|i| binomial(order, i as u32) * inv_deriv(i))
        .sum::<f64>()
        * beta.exp()
        / 4.0;
    exp_part + inv_deriv(j) / 2.0
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn first_order_memo() -> &'static RwLock<HashMap<u64, f64>> {
    static MEMO: OnceLock<RwLock<HashMap<u64, f64>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `K₁(β)` for `β > β_c`: the coupling at which the nonzero minimum of `G`
/// on `[δ, 1]` reaches `G(0) = 0`. Memoized per `β`.
pub fn first_order_k(beta: f64) -> Result<f64> {
    check_beta("first_order_k", beta)?;
    if beta <= BETA_C {
        return Err(domain(
            "first_order_k",
            format!("beta must exceed beta_c = log 4, got {beta}"),
        ));
    }
    let key = beta.to_bits();
    if let Some(&k) = first_order_memo()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .get(&key)
    {
        return Ok(k);
    }
    let k = solve_first_order(beta)?;
    first_order_memo()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, k);
    Ok(k)
}

/// Same as [`first_order_k`] without consulting or filling the memo table.
pub fn first_order_k_uncached(beta: f64) -> Result<f64> {
    check_beta("first_order_k", beta)?;
    if beta <= BETA_C {
        return Err(domain(
            "first_order_k",
            format!("beta must exceed beta_c = log 4, got {beta}"),
        ));
    }
    solve_first_order(beta)
}

/// `min_{x ∈ [δ,1]} G_{β,K}(x)`; decreasing in `K`.
fn positive_branch_minimum(beta: f64, kappa: f64) -> f64 {
    let params = ModelParams::new(beta, kappa).expect("positive parameters");
    let at_delta = free_energy_unchecked(params, FIRST_ORDER_DELTA);
    match lowest_minimum(params, FIRST_ORDER_DELTA) {
        Some(m) => m.value.min(at_delta),
        None => at_delta,
    }
}

fn solve_first_order(beta: f64) -> Result<f64> {
    let mut hi = k_curve(beta);
    if positive_branch_minimum(beta, hi) >= 0.0 {
        return Err(Error::Numeric {
            op: "first_order_k",
            msg: format!("no negative minimum on the spinodal curve at beta = {beta}"),
            achieved: positive_branch_minimum(beta, hi),
        });
    }
    let mut lo = 0.5 * hi;
    let mut tries = 0;
    while positive_branch_minimum(beta, lo) <= 0.0 {
        hi = lo;
        lo *= 0.5;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numeric {
                op: "first_order_k",
                msg: format!("could not bracket K1 from below at beta = {beta}"),
                achieved: lo,
            });
        }
    }
    while hi - lo >= FIRST_ORDER_BRACKET {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive_branch_minimum(beta, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Region of the phase diagram containing `params`.
///
/// # Panics
/// If the first-order curve cannot be bracketed, which does not happen for
/// any `β > β_c` representable in `f64`.
pub fn classify(params: ModelParams) -> PhaseRegion {
    let (beta, kappa) = (params.beta(), params.kappa());
    if (beta - BETA_C).abs() <= CURVE_TOL && (kappa - k_curve(BETA_C)).abs() <= CURVE_TOL {
        return PhaseRegion::TricriticalPoint;
    }
    let (curve, on_curve) = if beta <= BETA_C + CURVE_TOL {
        (k_curve(beta), PhaseRegion::SecondOrderCurve)
    } else {
        (
            first_order_k(beta).expect("first-order curve solve"),
            PhaseRegion::FirstOrderCurve,
        )
    };
    if kappa < curve - CURVE_TOL {
        PhaseRegion::SinglePhase
    } else if kappa > curve + CURVE_TOL {
        PhaseRegion::Coexistence
    } else {
        on_curve
    }
}

/// One-sided finite-difference estimates of `K₁'` and `K₁''` at `β_c` for a
/// single step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub h: f64,
    pub k1_prime_est: f64,
    pub k1_second_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureCheck {
    pub rows: Vec<ConjectureRow>,
    pub k_prime_ref: f64,
    pub ell_c_ref: f64,
    pub k_second_ref: f64,
}

/// Estimates the right derivatives of `K₁` at `β_c` (with `K₁(β_c) := K(β_c)`)
/// and reports them next to `K'(β_c)` and `ℓ_c`.
pub fn verify_tricritical_conjectures(h_grid: &[f64]) -> Result<ConjectureCheck> {
    const OP: &str = "verify_tricritical_conjectures";
    if h_grid.is_empty() {
        return Err(usage(OP, "h_grid must not be empty"));
    }
    if h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage(OP, "h_grid must be strictly decreasing"));
    }
    if let Some(&h) = h_grid.iter().find(|&&h| !(h >= 1e-4)) {
        return Err(usage(OP, format!("every h must be >= 1e-4, got {h}")));
    }
    let k0 = k_curve(BETA_C);
    let rows = h_grid
        .iter()
        .map(|&h| {
            let k1 = first_order_k(BETA_C + h)?;
            let k2 = first_order_k(BETA_C + 2.0 * h)?;
            Ok(ConjectureRow {
                h,
                k1_prime_est: (k1 - k0) / h,
                k1_second_est: (k2 - 2.0 * k1 + k0) / (h * h),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let consts = CriticalConstants::get();
    Ok(ConjectureCheck {
        rows,
        k_prime_ref: k_curve_deriv(BETA_C, 1),
        ell_c_ref: consts.ell_c,
        k_second_ref: k_curve_deriv(BETA_C, 2),
    })
}

/// One-sided third-difference estimate of `K₁'''(β_c)` with step `h`.
pub fn first_order_third_deriv_estimate(h: f64) -> Result<f64> {
    let k0 = k_curve(BETA_C);
    let k1 = first_order_k(BETA_C + h)?;
    let k2 = first_order_k(BETA_C + 2.0 * h)?;
    let k3 = first_order_k(BETA_C + 3.0 * h)?;
    Ok((k3 - 3.0 * k2 + 3.0 * k1 - k0) / (h * h * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tricritical_value() {
        let k = second_order_k(4f64.ln()).unwrap();
        assert_abs_diff_eq!(k, 3.0 / (2.0 * 4f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(k, 1.0820213, epsilon = 1e-7);
        assert_abs_diff_eq!(BETA_C, 4f64.ln(), epsilon = 1e-16);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(second_order_k(1.0).unwrap(), (e + 2.0) / 4.0, epsilon = 1e-15);
        assert!(second_order_k(0.0).is_err());
        assert!(second_order_k(-1.0).is_err());
    }

    #[test]
    fn second_order_curve_matches_cumulant_form() {
        for i in 1..=60 {
            let beta = 0.05 * i as f64;
            let c2 = crate::model::cumulant_deriv(beta, 0.0, 2).unwrap();
            let k = second_order_k(beta).unwrap();
            assert!((k - 1.0 / (2.0 * beta * c2)).abs() < 1e-12);
            assert!(k > 0.0);
        }
    }

    #[test]
    fn derivative_values() {
        let b = BETA_C;
        let l = 4f64.ln();
        assert_abs_diff_eq!(
            second_order_k_deriv(b, 1).unwrap(),
            (4.0 * l - 6.0) / (4.0 * l * l),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(second_order_k_deriv(b, 1).unwrap(), -0.0591658, epsilon = 1e-7);
        let k2 = (l * l * 4.0 - 2.0 * l * 4.0 + 2.0 * 4.0 + 4.0) / (4.0 * l * l * l);
        assert_abs_diff_eq!(second_order_k_deriv(b, 2).unwrap(), k2, epsilon = 1e-13);
        assert_abs_diff_eq!(k2, 0.80670, epsilon = 1e-4);
        assert_eq!(second_order_k_deriv(1.0, 1).unwrap(), -0.5);
        assert!(second_order_k_deriv(1.0, 13).is_err());
    }

    #[test]
    fn derivatives_match_nested_finite_differences() {
        // Independent oracle: repeated central differences of K itself.
        fn fd(beta: f64, order: u32, h: f64) -> f64 {
            if order == 0 {
                k_curve(beta)
            } else {
                (fd(beta + h, order - 1, h) - fd(beta - h, order - 1, h)) / (2.0 * h)
            }
        }
        for i in 0..=8 {
            let beta = 0.5 + 0.25 * i as f64;
            for (order, h) in [(1, 1e-4), (2, 1e-3), (3, 4e-3), (4, 5e-3)] {
                let exact = second_order_k_deriv(beta, order).unwrap();
                // one Richardson step removes the O(h²) truncation term
                let approx = (4.0 * fd(beta, order, 0.5 * h) - fd(beta, order, h)) / 3.0;
                let rel = (exact - approx).abs() / exact.abs().max(1e-3);
                assert!(rel < 1e-5, "beta={beta} order={order} rel={rel}");
            }
        }
    }

    #[test]
    fn critical_constants_ordering() {
        let c = CriticalConstants::get();
        assert_abs_diff_eq!(c.ell_c, -0.0950, epsilon = 5e-4);
        assert!(c.ell_c < 0.0 && 0.0 < k_curve_deriv(BETA_C, 2));
        assert_eq!(c.k_at_beta_c, second_order_k(c.beta_c).unwrap());
    }

    #[test]
    fn first_order_curve_below_spinodal() {
        for i in 1..=10 {
            let beta = BETA_C + 0.16 * i as f64;
            let k1 = first_order_k(beta).unwrap();
            assert!(k1 < k_curve(beta), "beta={beta}");
        }
        assert!(first_order_k(BETA_C).is_err());
        assert!(first_order_k(1.0).is_err());
    }

    #[test]
    fn first_order_defining_property() {
        for &beta in &[1.5, 2.0, 3.0] {
            let k1 = first_order_k(beta).unwrap();
            let p = ModelParams::new(beta, k1).unwrap();
            // dense independent scan of G on (0, 1]
            let (xmin, gmin) = (1..=200_000)
                .map(|i| {
                    let x = i as f64 / 200_000.0;
                    (x, free_energy_unchecked(p, x))
                })
                .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert!(gmin.abs() < 1e-10, "beta={beta} gmin={gmin}");
            assert!(xmin > 1e-3);
        }
    }

    #[test]
    fn memo_and_uncached_agree() {
        let a = first_order_k(2.2).unwrap();
        let b = first_order_k_uncached(2.2).unwrap();
        assert_eq!(a, b);
        assert_eq!(first_order_k(2.2).unwrap(), a);
    }

    #[test]
    fn classify_examples() {
        let p = |b, k| ModelParams::new(b, k).unwrap();
        assert_eq!(classify(p(1.0, 1.0)), PhaseRegion::SinglePhase);
        assert_eq!(classify(p(1.0, 1.5)), PhaseRegion::Coexistence);
        assert_eq!(
            classify(p(4f64.ln(), 3.0 / (2.0 * 4f64.ln()))),
            PhaseRegion::TricriticalPoint
        );
        assert_eq!(classify(p(1.0, k_curve(1.0))), PhaseRegion::SecondOrderCurve);
        let k1 = first_order_k(2.0).unwrap();
        assert_eq!(classify(p(2.0, k1)), PhaseRegion::FirstOrderCurve);
        assert_eq!(classify(p(2.0, k1 - 1e-6)), PhaseRegion::SinglePhase);
        assert_eq!(classify(p(2.0, k1 + 1e-6)), PhaseRegion::Coexistence);
        // between K1 and the spinodal the region is already coexistence
        assert_eq!(classify(p(2.0, 0.5 * (k1 + k_curve(2.0)))), PhaseRegion::Coexistence);
    }

    #[test]
    fn conjecture_inputs_validated() {
        assert!(verify_tricritical_conjectures(&[]).is_err());
        assert!(verify_tricritical_conjectures(&[1e-3, 1e-2]).is_err());
        assert!(verify_tricritical_conjectures(&[1e-2, 1e-5]).is_err());
    }

    #[test]
    fn conjecture_refs() {
        let c = verify_tricritical_conjectures(&[1e-2, 1e-3]).unwrap();
        assert_abs_diff_eq!(c.k_prime_ref, -0.0591658, epsilon = 1e-7);
        let e0 = (c.rows[0].k1_prime_est - c.k_prime_ref).abs();
        let e1 = (c.rows[1].k1_prime_est - c.k_prime_ref).abs();
        assert!(e1 < e0, "{e0} {e1}");
    }
}
