//! The six parameter sequences `(β_n, K_n)` converging to a second-order or
//! tricritical point, their Ginzburg–Landau polynomials and scaling
//! exponents, and the limit constants `x̄`, `ȳ`, `z̄`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::model::{free_energy_unchecked, ModelParams};
use crate::phase::{
    classify, first_order_third_deriv_estimate, k_curve, k_curve_deriv, CriticalConstants,
    PhaseRegion, BETA_C, MAX_K_DERIV_ORDER,
};
use crate::quadrature::{integrate, QuadratureConfig};

/// Step used for the finite-difference estimate of `K₁'''(β_c)`.
pub const K1_THIRD_DERIV_STEP: f64 = 1e-2;

/// Tolerance for the equalities `ℓ = K''(β_c)` and `ℓ = ℓ_c`.
pub const PARAM_EQ_TOL: f64 = 1e-9;

/// Values of `g` within this distance of `g(0) = 0` count as ties.
pub const MIN_TIE_TOL: f64 = 1e-12;

/// Grid size for [`check_hypothesis_iiia`].
pub const IIIA_GRID_POINTS: usize = 2001;

/// The speed exponent `α`, kept as an exact rational when given as `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Exact(Ratio<u64>),
    Approx(f64),
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Alpha::Approx(v) => v,
        }
    }

    /// Compares against a rational threshold; exact for rational `α`,
    /// within `1e−12` otherwise.
    pub fn cmp_rational(self, other: Ratio<u64>) -> Ordering {
        match self {
            Alpha::Exact(r) => r.cmp(&other),
            Alpha::Approx(v) => {
                let o = *other.numer() as f64 / *other.denom() as f64;
                if (v - o).abs() <= 1e-12 {
                    Ordering::Equal
                } else {
                    v.total_cmp(&o)
                }
            }
        }
    }
}

impl From<f64> for Alpha {
    fn from(v: f64) -> Self {
        Alpha::Approx(v)
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            let r: Ratio<u64> = s
                .parse()
                .map_err(|_| usage("alpha", format!("cannot parse rational {s:?}")))?;
            Ok(Alpha::Exact(r))
        } else {
            s.parse::<f64>()
                .map(Alpha::Approx)
                .map_err(|_| usage("alpha", format!("cannot parse {s:?}")))
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Alpha::Approx(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Number(f64),
    Text(String),
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Approx(v) => AlphaRepr::Number(*v),
            Alpha::Exact(_) => AlphaRepr::Text(self.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match AlphaRepr::deserialize(d)? {
            AlphaRepr::Number(v) => Ok(Alpha::Approx(v)),
            AlphaRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The four choices of `(ℓ, ℓ̃)` for the sequence approaching the
/// tricritical point from the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seq4Case {
    A,
    B,
    C,
    D,
}

/// Sequence family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKind {
    /// `β_n = β + b/n^α`, `K_n = K(β) + k/n^α`, with `β < β_c`.
    Seq1 { beta: f64, b: i8, k: f64 },
    /// Approach to `(β₀, K(β₀))` along a curve matching `K` to order `p − 1`.
    Seq2 { beta0: f64, b: i8, p: u32, ell: f64 },
    /// As `Seq1` with `β = β_c`.
    Seq3 { b: i8, k: f64 },
    /// From the right of `β_c`, tangent to the spinodal curve.
    Seq4 { ell: f64, ell_tilde: f64, case: Seq4Case },
    /// From the left of `β_c`, matching `K` to order 2.
    Seq5 { ell: f64 },
    /// From the left of `β_c`, matching `K` to order `p − 1`.
    Seq6 { p: u32, ell: f64 },
}

impl SequenceKind {
    pub fn label(&self) -> &'static str {
        match self {
            SequenceKind::Seq1 { .. } => "seq1",
            SequenceKind::Seq2 { .. } => "seq2",
            SequenceKind::Seq3 { .. } => "seq3",
            SequenceKind::Seq4 { .. } => "seq4",
            SequenceKind::Seq5 { .. } => "seq5",
            SequenceKind::Seq6 { .. } => "seq6",
        }
    }
}

/// A validated sequence together with its speed `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct SequenceSpec {
    alpha: Alpha,
    kind: SequenceKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpecDoc {
    Seq1 { alpha: Alpha, beta: f64, b: i8, k: f64 },
    Seq2 { alpha: Alpha, beta0: f64, b: i8, p: u32, ell: f64 },
    Seq3 { alpha: Alpha, b: i8, k: f64 },
    Seq4 { alpha: Alpha, ell: f64, ell_tilde: f64, case: Seq4Case },
    Seq5 { alpha: Alpha, ell: f64 },
    Seq6 { alpha: Alpha, p: u32, ell: f64 },
}

impl TryFrom<SpecDoc> for SequenceSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        use SequenceKind as K;
        let (alpha, kind) = match doc {
            SpecDoc::Seq1 { alpha, beta, b, k } => (alpha, K::Seq1 { beta, b, k }),
            SpecDoc::Seq2 { alpha, beta0, b, p, ell } => (alpha, K::Seq2 { beta0, b, p, ell }),
            SpecDoc::Seq3 { alpha, b, k } => (alpha, K::Seq3 { b, k }),
            SpecDoc::Seq4 { alpha, ell, ell_tilde, case } => {
                (alpha, K::Seq4 { ell, ell_tilde, case })
            }
            SpecDoc::Seq5 { alpha, ell } => (alpha, K::Seq5 { ell }),
            SpecDoc::Seq6 { alpha, p, ell } => (alpha, K::Seq6 { p, ell }),
        };
        SequenceSpec::new(alpha, kind)
    }
}

impl From<SequenceSpec> for SpecDoc {
    fn from(spec: SequenceSpec) -> Self {
        use SequenceKind as K;
        let alpha = spec.alpha;
        match spec.kind {
            K::Seq1 { beta, b, k } => SpecDoc::Seq1 { alpha, beta, b, k },
            K::Seq2 { beta0, b, p, ell } => SpecDoc::Seq2 { alpha, beta0, b, p, ell },
            K::Seq3 { b, k } => SpecDoc::Seq3 { alpha, b, k },
            K::Seq4 { ell, ell_tilde, case } => SpecDoc::Seq4 { alpha, ell, ell_tilde, case },
            K::Seq5 { ell } => SpecDoc::Seq5 { alpha, ell },
            K::Seq6 { p, ell } => SpecDoc::Seq6 { alpha, p, ell },
        }
    }
}

impl SequenceSpec {
    /// Builds a spec, failing with [`Error::Validation`] listing every
    /// violated condition.
    pub fn new(alpha: impl Into<Alpha>, kind: SequenceKind) -> Result<Self> {
        let alpha = alpha.into();
        let failed: Vec<String> = validate(alpha, &kind)
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        if failed.is_empty() {
            Ok(Self { alpha, kind })
        } else {
            Err(Error::Validation(failed))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| usage("SequenceSpec", e.to_string()))
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Same sequence at another speed.
    pub fn with_alpha(&self, alpha: impl Into<Alpha>) -> Result<Self> {
        Self::new(alpha, self.kind)
    }

    pub fn exponents(&self) -> ScalingExponents {
        exponents_of(&self.kind)
    }

    pub fn regime(&self) -> Regime {
        match self.alpha.cmp_rational(self.exponents().alpha0) {
            Ordering::Less => Regime::Below,
            Ordering::Equal => Regime::At,
            Ordering::Greater => Regime::Above,
        }
    }
}

/// Position of `α` relative to the threshold `α₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Below,
    At,
    Above,
}

/// Threshold `α₀` and magnetization exponent `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingExponents {
    #[serde(serialize_with = "ser_ratio")]
    pub alpha0: Ratio<u64>,
    pub theta: f64,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl ScalingExponents {
    pub fn alpha0_value(&self) -> f64 {
        *self.alpha0.numer() as f64 / *self.alpha0.denom() as f64
    }

    /// `κ(α) = (1 − α/α₀)/2 + θα`.
    pub fn kappa(&self, alpha: f64) -> f64 {
        0.5 * (1.0 - alpha / self.alpha0_value()) + self.theta * alpha
    }
}

fn exponents_of(kind: &SequenceKind) -> ScalingExponents {
    let r = |n: u64, d: u64| Ratio::new(n, d);
    let (alpha0, theta) = match *kind {
        SequenceKind::Seq1 { .. } => (r(1, 2), 0.5),
        SequenceKind::Seq2 { p, .. } => (r(1, 2 * u64::from(p)), f64::from(p) / 2.0),
        SequenceKind::Seq3 { .. } => (r(2, 3), 0.25),
        SequenceKind::Seq4 { .. } | SequenceKind::Seq5 { .. } => (r(1, 3), 0.5),
        SequenceKind::Seq6 { p, .. } => (r(1, 2 * u64::from(p) - 1), (f64::from(p) - 1.0) / 2.0),
    };
    ScalingExponents { alpha0, theta }
}

/// One condition checked by [`validate`]; `margin > 0` means satisfied
/// with room to spare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub note: Option<String>,
}

impl CheckResult {
    fn positive(name: &str, margin: f64) -> Self {
        Self {
            name: name.to_owned(),
            passed: margin > 0.0,
            margin,
            note: None,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.to_owned(),
            passed,
            margin: if passed { 1.0 } else { -1.0 },
            note: None,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_owned());
        self
    }
}

const CONJECTURE_NOTE: &str = "coexistence membership assumes K1'(beta_c) = K'(beta_c) and \
     K1''(beta_c) = ell_c";

/// Every defining condition of the sequence, with margins.
pub fn validate(alpha: Alpha, kind: &SequenceKind) -> Vec<CheckResult> {
    let a = alpha.value();
    let mut out = vec![CheckResult::positive("alpha > 0", if a.is_finite() { a } else { -1.0 })];
    if let Alpha::Exact(r) = alpha {
        out.push(CheckResult::flag("alpha denominator != 0", *r.denom() != 0));
    }
    let finite = |name: &str, vals: &[f64]| CheckResult::flag(name, vals.iter().all(|v| v.is_finite()));
    let sign_b = |b: i8, zero_ok: bool| {
        CheckResult::flag(
            if zero_ok { "b in {-1, 0, 1}" } else { "b in {-1, 1}" },
            b == 1 || b == -1 || (zero_ok && b == 0),
        )
    };
    let p_range = |p: u32, lo: u32| {
        CheckResult::flag(
            &format!("{lo} <= p <= {MAX_K_DERIV_ORDER}"),
            (lo..=MAX_K_DERIV_ORDER).contains(&p),
        )
    };
    let k2c = k_curve_deriv(BETA_C, 2);
    match *kind {
        SequenceKind::Seq1 { beta, b, k } => {
            out.push(finite("parameters finite", &[beta, k]));
            out.push(CheckResult::positive("0 < beta", beta));
            out.push(CheckResult::positive("beta < beta_c", BETA_C - beta));
            out.push(sign_b(b, true));
            out.push(CheckResult::flag("k != 0", k != 0.0));
            if beta > 0.0 {
                let v = k_curve_deriv(beta, 1) * f64::from(b) - k;
                out.push(CheckResult::positive("K'(beta) b - k < 0", -v));
            }
        }
        SequenceKind::Seq2 { beta0, b, p, ell } => {
            out.push(finite("parameters finite", &[beta0, ell]));
            out.push(CheckResult::positive("0 < beta0", beta0));
            out.push(CheckResult::positive("beta0 < beta_c", BETA_C - beta0));
            out.push(sign_b(b, false));
            out.push(p_range(p, 2));
            if beta0 > 0.0 && (2..=MAX_K_DERIV_ORDER).contains(&p) {
                let kp = k_curve_deriv(beta0, p);
                out.push(CheckResult::flag("ell != K^(p)(beta0)", ell != kp));
                let v = (kp - ell) * f64::from(b).powi(p as i32);
                out.push(CheckResult::positive("(K^(p)(beta0) - ell) b^p < 0", -v));
            }
        }
        SequenceKind::Seq3 { b, k } => {
            out.push(finite("parameters finite", &[k]));
            out.push(sign_b(b, true));
            out.push(CheckResult::flag("k != 0", k != 0.0));
            let v = k_curve_deriv(BETA_C, 1) * f64::from(b) - k;
            out.push(CheckResult::positive("K'(beta_c) b - k < 0", -v));
        }
        SequenceKind::Seq4 {
            ell,
            ell_tilde,
            case,
        } => {
            out.push(finite("parameters finite", &[ell, ell_tilde]));
            let ell_c = CriticalConstants::get().ell_c;
            match case {
                Seq4Case::A => out.push(CheckResult::positive("case a: ell > K''(beta_c)", ell - k2c)),
                Seq4Case::B => {
                    out.push(CheckResult::flag(
                        "case b: ell = K''(beta_c)",
                        (ell - k2c).abs() <= PARAM_EQ_TOL,
                    ));
                    let k3c = k_curve_deriv(BETA_C, 3);
                    out.push(CheckResult::positive(
                        "case b: ell_tilde > K'''(beta_c)",
                        ell_tilde - k3c,
                    ));
                }
                Seq4Case::C => {
                    out.push(CheckResult::positive("case c: ell < K''(beta_c)", k2c - ell));
                    out.push(
                        CheckResult::positive("case c: ell > ell_c", ell - ell_c)
                            .with_note(CONJECTURE_NOTE),
                    );
                }
                Seq4Case::D => {
                    out.push(
                        CheckResult::flag("case d: ell = ell_c", (ell - ell_c).abs() <= PARAM_EQ_TOL)
                            .with_note(CONJECTURE_NOTE),
                    );
                    let check = match first_order_third_deriv_estimate(K1_THIRD_DERIV_STEP) {
                        Ok(k1_3) => CheckResult::positive(
                            "case d: ell_tilde > K1'''(beta_c) estimate",
                            ell_tilde - k1_3,
                        ),
                        Err(_) => CheckResult::flag("case d: K1'''(beta_c) estimate available", false),
                    };
                    out.push(check.with_note(
                        "K1'''(beta_c) is a finite-difference estimate of the first-order curve",
                    ));
                }
            }
        }
        SequenceKind::Seq5 { ell } => {
            out.push(finite("parameters finite", &[ell]));
            out.push(CheckResult::positive("ell > K''(beta_c)", ell - k2c));
        }
        SequenceKind::Seq6 { p, ell } => {
            out.push(finite("parameters finite", &[ell]));
            out.push(p_range(p, 3));
            if (3..=MAX_K_DERIV_ORDER).contains(&p) {
                let kp = k_curve_deriv(BETA_C, p);
                out.push(CheckResult::flag("ell != K^(p)(beta_c)", ell != kp));
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                out.push(CheckResult::positive("(K^(p)(beta_c) - ell) (-1)^p < 0", -(kp - ell) * sign));
            }
        }
    }
    out
}

/// `(β_n, K_n)` for the given `n ≥ 1`.
pub fn params_at(spec: &SequenceSpec, n: u64) -> Result<ModelParams> {
    if n == 0 {
        return Err(usage("params_at", "n must be >= 1"));
    }
    let h = (n as f64).powf(-spec.alpha.value());
    let taylor = |beta0: f64, step: f64, p: u32, ell: f64| {
        // K(β₀) + Σ_{j<p} K^(j)(β₀) step^j/j! + ℓ step^p/p!
        let mut k = k_curve(beta0);
        let mut pow = 1.0;
        let mut fact = 1.0;
        for j in 1..p {
            pow *= step;
            fact *= f64::from(j);
            k += k_curve_deriv(beta0, j) * pow / fact;
        }
        k + ell * pow * step / (fact * f64::from(p))
    };
    let (beta, kappa) = match spec.kind {
        SequenceKind::Seq1 { beta, b, k } => (beta + f64::from(b) * h, k_curve(beta) + k * h),
        SequenceKind::Seq2 { beta0, b, p, ell } => {
            let step = f64::from(b) * h;
            (beta0 + step, taylor(beta0, step, p, ell))
        }
        SequenceKind::Seq3 { b, k } => (BETA_C + f64::from(b) * h, k_curve(BETA_C) + k * h),
        SequenceKind::Seq4 { ell, ell_tilde, .. } => (
            BETA_C + h,
            k_curve(BETA_C) + k_curve_deriv(BETA_C, 1) * h + ell * h * h / 2.0
                + ell_tilde * h * h * h / 6.0,
        ),
        SequenceKind::Seq5 { ell } => (BETA_C - h, taylor(BETA_C, -h, 2, ell)),
        SequenceKind::Seq6 { p, ell } => (BETA_C - h, taylor(BETA_C, -h, p, ell)),
    };
    ModelParams::new(beta, kappa).map_err(|e| {
        usage(
            "params_at",
            format!("sequence leaves the parameter domain at n = {n}: {e}"),
        )
    })
}

/// Smallest `n₀` among `1, 2, 4, …, ≤ n_max` from which every sampled point
/// lies in the coexistence region (or on the first-order curve); `None` if
/// the last sample does not.
pub fn coexistence_onset(spec: &SequenceSpec, n_max: u64) -> Option<u64> {
    let mut samples = Vec::new();
    let mut n = 1u64;
    while n <= n_max {
        samples.push(n);
        n = n.checked_mul(2)?;
    }
    let inside = |n: u64| {
        params_at(spec, n)
            .map(|p| {
                matches!(
                    classify(p),
                    PhaseRegion::Coexistence | PhaseRegion::FirstOrderCurve
                )
            })
            .unwrap_or(false)
    };
    let flags: Vec<bool> = samples.iter().map(|&n| inside(n)).collect();
    if !*flags.last()? {
        return None;
    }
    let first_bad_from_end = flags.iter().rposition(|&ok| !ok);
    Some(match first_bad_from_end {
        None => samples[0],
        Some(i) => samples[i + 1],
    })
}

/// `c₂x² + c₄x⁴ + c₆x⁶` with a positive leading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvenPolynomial {
    c2: f64,
    c4: f64,
    c6: f64,
}

impl EvenPolynomial {
    /// Degree 4 or 6 with positive leading coefficient.
    pub fn new(c2: f64, c4: f64, c6: f64) -> Result<Self> {
        let p = Self::coercive(c2, c4, c6)?;
        if p.degree() == 2 {
            return Err(usage("EvenPolynomial", "degree must be 4 or 6"));
        }
        Ok(p)
    }

    /// Any coercive even polynomial of degree 2, 4 or 6.
    pub fn coercive(c2: f64, c4: f64, c6: f64) -> Result<Self> {
        if ![c2, c4, c6].iter().all(|v| v.is_finite()) {
            return Err(usage("EvenPolynomial", "coefficients must be finite"));
        }
        let p = Self { c2, c4, c6 };
        if p.leading() <= 0.0 {
            return Err(usage(
                "EvenPolynomial",
                "leading coefficient must be positive",
            ));
        }
        Ok(p)
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c4(&self) -> f64 {
        self.c4
    }

    pub fn c6(&self) -> f64 {
        self.c6
    }

    pub fn degree(&self) -> u32 {
        if self.c6 != 0.0 {
            6
        } else if self.c4 != 0.0 {
            4
        } else {
            2
        }
    }

    fn leading(&self) -> f64 {
        match self.degree() {
            6 => self.c6,
            4 => self.c4,
            _ => self.c2,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = x * x;
        y * (self.c2 + y * (self.c4 + y * self.c6))
    }

    /// The highest-order monomial alone.
    pub fn leading_term(&self) -> Self {
        match self.degree() {
            6 => Self { c2: 0.0, c4: 0.0, c6: self.c6 },
            4 => Self { c2: 0.0, c4: self.c4, c6: 0.0 },
            _ => *self,
        }
    }
}

impl fmt::Display for EvenPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x^2 + {}x^4 + {}x^6", self.c2, self.c4, self.c6)
    }
}

/// `c₄(β) = (e^β + 2)²(4 − e^β)/192`.
pub fn quartic_coefficient(beta: f64) -> f64 {
    let e = beta.exp();
    (e + 2.0).powi(2) * (4.0 - e) / 192.0
}

/// `c₆ = 9/40` at the tricritical point.
pub const SEXTIC_COEFFICIENT: f64 = 9.0 / 40.0;
/// `4c₄ = 3/4` at the tricritical point.
pub const TRICRITICAL_QUARTIC: f64 = 0.75;

/// Ginzburg–Landau polynomial `g` and the exponents `(α₀, θ)`.
pub fn gl_polynomial(spec: &SequenceSpec) -> Result<(EvenPolynomial, ScalingExponents)> {
    let exps = spec.exponents();
    let fact = |p: u32| (1..=p).map(f64::from).product::<f64>();
    let poly = match spec.kind {
        SequenceKind::Seq1 { beta, b, k } => EvenPolynomial::new(
            beta * (k_curve_deriv(beta, 1) * f64::from(b) - k),
            quartic_coefficient(beta),
            0.0,
        ),
        SequenceKind::Seq2 { beta0, b, p, ell } => EvenPolynomial::new(
            beta0 * (k_curve_deriv(beta0, p) - ell) * f64::from(b).powi(p as i32) / fact(p),
            quartic_coefficient(beta0),
            0.0,
        ),
        SequenceKind::Seq3 { b, k } => EvenPolynomial::new(
            BETA_C * (k_curve_deriv(BETA_C, 1) * f64::from(b) - k),
            0.0,
            SEXTIC_COEFFICIENT,
        ),
        SequenceKind::Seq4 { ell, .. } => EvenPolynomial::new(
            0.5 * BETA_C * (k_curve_deriv(BETA_C, 2) - ell),
            -TRICRITICAL_QUARTIC,
            SEXTIC_COEFFICIENT,
        ),
        SequenceKind::Seq5 { ell } => EvenPolynomial::new(
            0.5 * BETA_C * (k_curve_deriv(BETA_C, 2) - ell),
            TRICRITICAL_QUARTIC,
            SEXTIC_COEFFICIENT,
        ),
        SequenceKind::Seq6 { p, ell } => {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            EvenPolynomial::new(
                BETA_C * (k_curve_deriv(BETA_C, p) - ell) * sign / fact(p),
                TRICRITICAL_QUARTIC,
                0.0,
            )
        }
    }?;
    Ok((poly, exps))
}

const SEQ6_TOP_TERM: &str = "sequence 6 has no coercive top-order limit: \
     n G(x / n^(theta alpha0)) -> 0 for every x";

/// Highest-order term `g̃` of `g`.
pub fn g_tilde(spec: &SequenceSpec) -> Result<EvenPolynomial> {
    if let SequenceKind::Seq6 { .. } = spec.kind {
        return Err(Error::Unsupported {
            op: "g_tilde",
            msg: SEQ6_TOP_TERM.into(),
        });
    }
    Ok(gl_polynomial(spec)?.0.leading_term())
}

/// Shape of the set of global minimizers of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MinimumSet {
    /// `{±x̄}` with `x̄ > 0`.
    PlusMinus,
    /// `{0, ±x̄}`.
    ThreePoint,
    /// `{0}` only.
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Xbar {
    pub value: f64,
    pub minimum_set: MinimumSet,
}

/// Positive global minimizer of `g` (0 when the origin is the only one).
pub fn xbar(g: &EvenPolynomial) -> Xbar {
    let origin = Xbar {
        value: 0.0,
        minimum_set: MinimumSet::Origin,
    };
    // g'(x)/(2x) = c₂ + 2c₄y + 3c₆y², y = x²
    let y = if g.c6 != 0.0 {
        let (a, b, c) = (3.0 * g.c6, 2.0 * g.c4, g.c2);
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return origin;
        }
        // larger root of a positive-leading quadratic
        let sq = disc.sqrt();
        if b <= 0.0 {
            (-b + sq) / (2.0 * a)
        } else {
            2.0 * c / (-b - sq)
        }
    } else if g.c4 != 0.0 {
        -g.c2 / (2.0 * g.c4)
    } else {
        return origin;
    };
    if !(y > 0.0) {
        return origin;
    }
    let x = y.sqrt();
    let v = g.eval(x);
    if v < -MIN_TIE_TOL {
        Xbar {
            value: x,
            minimum_set: MinimumSet::PlusMinus,
        }
    } else if v <= MIN_TIE_TOL {
        Xbar {
            value: x,
            minimum_set: MinimumSet::ThreePoint,
        }
    } else {
        origin
    }
}

/// `∫|x|e^{−p} / ∫e^{−p}` over `ℝ`: `ȳ` when given `g̃`, `z̄` when given `g`.
pub fn limit_constant(poly: &EvenPolynomial, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    let xb = xbar(poly).value;
    let floor = poly.eval(xb).min(0.0);
    let mut cut = xb.max(1.0);
    while poly.eval(cut) - floor < quad.tail_cut {
        cut *= 1.25;
    }
    const PIECES: usize = 32;
    let mut pts: Vec<f64> = (0..=PIECES).map(|i| cut * i as f64 / PIECES as f64).collect();
    if xb > 0.0 {
        pts.push(xb);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let w = |x: f64| (-(poly.eval(x) - floor)).exp();
    let num = integrate(|x| x * w(x), &pts, quad.rel_tol)?;
    let den = integrate(w, &pts, quad.rel_tol)?;
    Ok(num / den)
}

/// `n^{α/α₀} G_{β_n,K_n}(x/n^{θα})`.
pub fn scaled_free_energy(spec: &SequenceSpec, n: u64, x: f64) -> Result<f64> {
    let p = params_at(spec, n)?;
    let e = spec.exponents();
    let (a, nf) = (spec.alpha.value(), n as f64);
    Ok(nf.powf(a / e.alpha0_value()) * free_energy_unchecked(p, x / nf.powf(e.theta * a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupErrorRow {
    pub n: u64,
    pub sup_error: f64,
    pub argmax: f64,
}

/// Uniform distance between the scaled free energy and `g` on `[−R, R]`.
pub fn check_hypothesis_iiia(
    spec: &SequenceSpec,
    radius: f64,
    n_list: &[u64],
) -> Result<Vec<SupErrorRow>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(usage("check_hypothesis_iiia", "radius must be positive"));
    }
    let (g, _) = gl_polynomial(spec)?;
    n_list
        .par_iter()
        .map(|&n| {
            let mut row = SupErrorRow {
                n,
                sup_error: 0.0,
                argmax: 0.0,
            };
            for i in 0..IIIA_GRID_POINTS {
                let x = -radius + 2.0 * radius * i as f64 / (IIIA_GRID_POINTS - 1) as f64;
                let err = (scaled_free_energy(spec, n, x)? - g.eval(x)).abs();
                if err > row.sup_error {
                    row.sup_error = err;
                    row.argmax = x;
                }
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseRow {
    pub n: u64,
    pub x: f64,
    pub scaled: f64,
    pub target: f64,
    pub error: f64,
}

/// `n G_{β_n,K_n}(x/n^{θα₀})` on a grid, for any sequence.
pub fn top_order_scaled(spec: &SequenceSpec, n: u64, x: f64) -> Result<f64> {
    let p = params_at(spec, n)?;
    let e = spec.exponents();
    let nf = n as f64;
    Ok(nf * free_energy_unchecked(p, x / nf.powf(e.theta * e.alpha0_value())))
}

/// Pointwise errors `|n G(x/n^{θα₀}) − g̃(x)|` for `α > α₀`.
pub fn check_hypothesis_v(
    spec: &SequenceSpec,
    x_grid: &[f64],
    n_list: &[u64],
) -> Result<Vec<PointwiseRow>> {
    const OP: &str = "check_hypothesis_v";
    let target = g_tilde(spec).map_err(|e| match e {
        Error::Unsupported { msg, .. } => Error::Unsupported { op: OP, msg },
        other => other,
    })?;
    if spec.regime() != Regime::Above {
        return Err(usage(OP, "alpha must exceed alpha0"));
    }
    let mut rows = Vec::with_capacity(n_list.len() * x_grid.len());
    for &n in n_list {
        for &x in x_grid {
            let scaled = top_order_scaled(spec, n, x)?;
            let t = target.eval(x);
            rows.push(PointwiseRow {
                n,
                x,
                scaled,
                target: t,
                error: (scaled - t).abs(),
            });
        }
    }
    Ok(rows)
}
