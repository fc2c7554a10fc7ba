//! Single-site measure, cumulant generating function and the free-energy
//! functional `G(x) = βK x² − c_β(2βK x)` of the mean-field Blume–Capel model.
//!
//! The single-spin law after absorbing the `ω²` term of the Hamiltonian is
//! `ρ_β(±1) = e^{−β}/(1+2e^{−β})`, `ρ_β(0) = 1/(1+2e^{−β})`; `c_β` is its
//! cumulant generating function.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, usage, Result};

/// A point `(β, K)` of the open positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    beta: f64,
    kappa: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    beta: f64,
    kappa: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = crate::Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.beta, raw.kappa)
    }
}

impl ModelParams {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain("ModelParams", format!("beta must be > 0, got {beta}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(domain("ModelParams", format!("kappa must be > 0, got {kappa}")));
        }
        Ok(Self { beta, kappa })
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `2βK`, the slope linking the magnetization to the tilt of `c_β`.
    #[inline]
    pub(crate) fn coupling(&self) -> f64 {
        2.0 * self.beta * self.kappa
    }
}

/// A single spin value in `{−1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinValue {
    Minus,
    Zero,
    Plus,
}

impl SpinValue {
    pub const ALL: [SpinValue; 3] = [SpinValue::Minus, SpinValue::Zero, SpinValue::Plus];

    pub fn value(self) -> i8 {
        match self {
            SpinValue::Minus => -1,
            SpinValue::Zero => 0,
            SpinValue::Plus => 1,
        }
    }
}

impl TryFrom<i8> for SpinValue {
    type Error = crate::Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(SpinValue::Minus),
            0 => Ok(SpinValue::Zero),
            1 => Ok(SpinValue::Plus),
            _ => Err(domain("SpinValue", format!("{v} is not in {{-1, 0, 1}}"))),
        }
    }
}

const LARGE_TILT: f64 = 30.0;

/// `c_β(t) = log((1 + e^{−β}(e^t + e^{−t})) / (1 + 2e^{−β}))`.
pub fn cumulant(beta: f64, t: f64) -> Result<f64> {
    ensure_finite("cumulant", "t", t)?;
    if !(beta > 0.0) {
        return Err(domain("cumulant", format!("beta must be > 0, got {beta}")));
    }
    Ok(cumulant_unchecked(beta, t))
}

#[inline]
pub(crate) fn cumulant_unchecked(beta: f64, t: f64) -> f64 {
    let s = t.abs();
    let a = (-beta).exp();
    if s <= LARGE_TILT {
        // 1 + a(e^s + e^{-s}) = (1 + 2a) + 4a sinh²(s/2)
        let h = (0.5 * s).sinh();
        (4.0 * a * h * h / (1.0 + 2.0 * a)).ln_1p()
    } else {
        s - beta + ((beta - s).exp() + (-2.0 * s).exp()).ln_1p() - (2.0 * a).ln_1p()
    }
}

/// Probabilities of the tilted single-spin law, `(p₊, p₀, p₋)`.
#[inline]
fn tilted_law(beta: f64, t: f64) -> (f64, f64, f64) {
    let s = t.abs();
    let big = 1.0 / (1.0 + (beta - s).exp() + (-2.0 * s).exp());
    let zero = (beta - s).exp() * big;
    let small = (-2.0 * s).exp() * big;
    if t >= 0.0 {
        (big, zero, small)
    } else {
        (small, zero, big)
    }
}

/// Mean of the tilted law, i.e. `c_β'(t)`, computed without cancellation.
#[inline]
pub(crate) fn cumulant_first(beta: f64, t: f64) -> f64 {
    let s = t.abs();
    let big = 1.0 / (1.0 + (beta - s).exp() + (-2.0 * s).exp());
    let m = -(-2.0 * s).exp_m1() * big;
    m.copysign(t)
}

/// `d^order c_β / dt^order` for `order ∈ {1,2,3,4}`.
///
/// The derivatives are the cumulants of the tilted single-spin law; since
/// `ω³ = ω` and `ω⁴ = ω²`, they follow from its mean `m` and second moment `q`.
pub fn cumulant_deriv(beta: f64, t: f64, order: u32) -> Result<f64> {
    ensure_finite("cumulant_deriv", "t", t)?;
    if !(beta > 0.0) {
        return Err(domain("cumulant_deriv", format!("beta must be > 0, got {beta}")));
    }
    if !(1..=4).contains(&order) {
        return Err(usage(
            "cumulant_deriv",
            format!("order must be in 1..=4, got {order}"),
        ));
    }
    Ok(cumulant_deriv_unchecked(beta, t, order))
}

pub(crate) fn cumulant_deriv_unchecked(beta: f64, t: f64, order: u32) -> f64 {
    if order == 1 {
        return cumulant_first(beta, t);
    }
    // Central moments in the frame t ≥ 0, where the mean is 1 − u with
    // u = p₀ + 2p₋ computed directly so that nothing cancels for large |t|.
    let (big, zero, small) = tilted_law(beta, t.abs());
    let u = zero + 2.0 * small;
    let d = [u, u - 1.0, u - 2.0];
    let p = [big, zero, small];
    let moment = |k: i32| -> f64 { p.iter().zip(d).map(|(p, d)| p * d.powi(k)).sum() };
    match order {
        2 => moment(2),
        3 if t == 0.0 => 0.0,
        3 if t < 0.0 => -moment(3),
        3 => moment(3),
        4 => {
            let k2 = moment(2);
            moment(4) - 3.0 * k2 * k2
        }
        _ => unreachable!("order checked by caller"),
    }
}

/// `G_{β,K}(x) = βK x² − c_β(2βK x)`.
pub fn free_energy(params: ModelParams, x: f64) -> Result<f64> {
    ensure_finite("free_energy", "x", x)?;
    Ok(free_energy_unchecked(params, x))
}

#[inline]
pub(crate) fn free_energy_unchecked(params: ModelParams, x: f64) -> f64 {
    let bk = params.beta * params.kappa;
    bk * x * x - cumulant_unchecked(params.beta, 2.0 * bk * x)
}

/// First or second derivative of `G_{β,K}` in `x`.
pub fn free_energy_deriv(params: ModelParams, x: f64, order: u32) -> Result<f64> {
    ensure_finite("free_energy_deriv", "x", x)?;
    match order {
        1 | 2 => Ok(free_energy_deriv_unchecked(params, x, order)),
        _ => Err(usage(
            "free_energy_deriv",
            format!("order must be 1 or 2, got {order}"),
        )),
    }
}

#[inline]
pub(crate) fn free_energy_deriv_unchecked(params: ModelParams, x: f64, order: u32) -> f64 {
    let c = params.coupling();
    let t = c * x;
    if order == 1 {
        c * (x - cumulant_first(params.beta, t))
    } else {
        c - c * c * cumulant_deriv_unchecked(params.beta, t, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn closed_form(beta: f64, t: f64) -> f64 {
        let a = (-beta).exp();
        ((1.0 + a * (t.exp() + (-t).exp())) / (1.0 + 2.0 * a)).ln()
    }

    #[test]
    fn cumulant_values() {
        assert_eq!(cumulant(1.0, 0.0).unwrap(), 0.0);
        let beta = 4f64.ln();
        let e = std::f64::consts::E;
        let expected = ((1.0 + (e + 1.0 / e) / 4.0) / 1.5).ln();
        assert_abs_diff_eq!(cumulant(beta, 1.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.166384, epsilon = 1e-6);
        for &(b, t) in &[(0.3, 0.1), (2.0, 5.0), (1.0, 29.0), (1.0, 31.0), (0.7, 45.0)] {
            assert_abs_diff_eq!(cumulant(b, t).unwrap(), closed_form(b, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulant_large_arguments_do_not_overflow() {
        let v = cumulant(1.0, 700.0).unwrap();
        assert!(v.is_finite());
        // c_β(t) ≈ |t| − β − log(1+2e^{−β}) for large |t|
        let a = (-1.0f64).exp();
        assert_abs_diff_eq!(v, 700.0 - 1.0 - (1.0 + 2.0 * a).ln(), epsilon = 1e-9);
        assert_eq!(cumulant(1.0, -700.0).unwrap(), v);
        assert!(cumulant(1.0, f64::NAN).is_err());
        assert!(cumulant(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn second_derivative_at_origin() {
        let beta = 4f64.ln();
        assert_abs_diff_eq!(cumulant_deriv(beta, 0.0, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(cumulant_deriv(0.8, 0.0, 1).unwrap(), 0.0);
        assert_eq!(cumulant_deriv(0.8, 0.0, 3).unwrap(), 0.0);
        assert!(cumulant_deriv(0.8, 0.0, 5).is_err());
        assert!(cumulant_deriv(0.8, 0.0, 0).is_err());
    }

    #[test]
    fn convex_on_wide_grid() {
        for &beta in &[0.1, 1.0, 4f64.ln(), 3.0] {
            for i in 0..=1000 {
                let t = -50.0 + 0.1 * i as f64;
                assert!(cumulant_deriv(beta, t, 2).unwrap() > 0.0, "beta={beta} t={t}");
            }
        }
    }

    #[test]
    fn free_energy_example() {
        let p = ModelParams::new(1.0, 2.0).unwrap();
        let c = closed_form(1.0, 2.0);
        assert_abs_diff_eq!(c, 0.775118, epsilon = 1e-6);
        assert_abs_diff_eq!(free_energy(p, 0.5).unwrap(), 0.5 - c, epsilon = 1e-14);
        assert_eq!(free_energy(p, 0.0).unwrap(), 0.0);
        assert_eq!(free_energy_deriv(p, 0.0, 1).unwrap(), 0.0);
        assert!(free_energy_deriv(p, 0.0, 3).is_err());
    }

    #[test]
    fn free_energy_lower_bound() {
        // c_β(t) ≤ |t| + log 3
        for &(b, k) in &[(0.5, 0.5), (1.0, 2.0), (2.5, 3.0)] {
            let p = ModelParams::new(b, k).unwrap();
            for i in -200..=200 {
                let x = i as f64 * 0.05;
                let bk = b * k;
                let lower = bk * x * x - 2.0 * bk * x.abs() - 3f64.ln();
                assert!(free_energy(p, x).unwrap() >= lower);
            }
        }
        let p = ModelParams::new(2.0, 3.0).unwrap();
        let g1 = free_energy(p, 1.0).unwrap();
        assert!(free_energy(p, 10.0).unwrap() > g1 && g1 > -1e300);
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        let p: std::result::Result<ModelParams, _> =
            serde_json::from_str(r#"{"beta": -1.0, "kappa": 1.0}"#);
        assert!(p.is_err());
    }

    #[test]
    fn spin_values() {
        for s in SpinValue::ALL {
            assert_eq!(SpinValue::try_from(s.value()).unwrap(), s);
        }
        assert!(SpinValue::try_from(2).is_err());
    }

    proptest! {
        #[test]
        fn cumulant_is_even(beta in 0.01f64..5.0, t in -700.0f64..700.0) {
            prop_assert_eq!(cumulant(beta, t).unwrap(), cumulant(beta, -t).unwrap());
        }

        #[test]
        fn cumulant_derivs_match_finite_differences(beta in 0.1f64..3.0, t in -5.0f64..5.0) {
            let h = 1e-5;
            let c = |t: f64| cumulant(beta, t).unwrap();
            let d1 = cumulant_deriv(beta, t, 1).unwrap();
            prop_assert!((d1 - (c(t + h) - c(t - h)) / (2.0 * h)).abs() < 1e-6);
            let c1 = |t: f64| cumulant_deriv(beta, t, 1).unwrap();
            let c2 = |t: f64| cumulant_deriv(beta, t, 2).unwrap();
            let c3 = |t: f64| cumulant_deriv(beta, t, 3).unwrap();
            let d2 = c2(t);
            prop_assert!((d2 - (c1(t + h) - c1(t - h)) / (2.0 * h)).abs() < 1e-6);
            let d3 = c3(t);
            prop_assert!((d3 - (c2(t + h) - c2(t - h)) / (2.0 * h)).abs() < 1e-6);
            let d4 = cumulant_deriv(beta, t, 4).unwrap();
            prop_assert!((d4 - (c3(t + h) - c3(t - h)) / (2.0 * h)).abs() < 1e-6);
        }

        #[test]
        fn free_energy_derivs_match_finite_differences(
            beta in 0.1f64..3.0, kappa in 0.1f64..3.0, x in -1.0f64..1.0
        ) {
            let p = ModelParams::new(beta, kappa).unwrap();
            let h = 1e-6;
            let g = |x: f64| free_energy(p, x).unwrap();
            let g1 = |x: f64| free_energy_deriv(p, x, 1).unwrap();
            prop_assert!((g1(x) - (g(x + h) - g(x - h)) / (2.0 * h)).abs() < 1e-7);
            let d2 = free_energy_deriv(p, x, 2).unwrap();
            prop_assert!((d2 - (g1(x + h) - g1(x - h)) / (2.0 * h)).abs() < 1e-7);
            prop_assert_eq!(g(x), g(-x));
        }
    }
}
