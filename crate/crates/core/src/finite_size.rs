//! Exact law of the total spin `S_n` under the canonical ensemble, computed
//! by enumerating the occupation counts `(n₊, n₀, n₋)` in log-space.
//!
//! The energy depends on a configuration only through `n₊ + n₋` and
//! `s = n₊ − n₋`, so
//!
//! ```text
//! log w(s) = βK s²/n + log Σ_{n₊ − n₋ = s} multinomial(n; n₊, n₀, n₋) e^{−β(n₊+n₋)}
//! ```
//!
//! Also here: the Gaussian-smoothing identity (both sides, used as an exact
//! oracle for the law) and a Metropolis cross-estimator for large `n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::landscape::lowest_minimum;
use crate::model::{free_energy_unchecked, ModelParams};
use crate::quadrature::{gaussian_expectation, integrate, QuadratureConfig};

/// Largest `n` enumerated by default. Cost is `O(n²)` time, `O(n)` memory.
pub const DEFAULT_N_MAX: usize = 20_000;

/// Exact law of `S_n` as unnormalized natural-log weights over `s ∈ {−n..n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLawExact {
    n: usize,
    log_weights: Vec<f64>,
    log_z: f64,
}

impl SpinLawExact {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Unnormalized log-weight of `S_n = s`; `−∞` outside `[−n, n]`.
    pub fn log_weight(&self, s: i64) -> f64 {
        self.index(s)
            .map(|i| self.log_weights[i])
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn log_probability(&self, s: i64) -> f64 {
        self.log_weight(s) - self.log_z
    }

    pub fn probability(&self, s: i64) -> f64 {
        self.log_probability(s).exp()
    }

    /// `(s, P(S_n = s))` for `s = −n..=n`.
    pub fn probabilities(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.n as i64;
        self.log_weights
            .iter()
            .enumerate()
            .map(move |(i, &lw)| (i as i64 - n, (lw - self.log_z).exp()))
    }

    fn index(&self, s: i64) -> Option<usize> {
        let n = self.n as i64;
        (-n..=n).contains(&s).then(|| (s + n) as usize)
    }
}

/// Streaming log-sum-exp with a running maximum.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::new();
    values.into_iter().for_each(|v| acc.push(v));
    acc.value()
}

/// `log k!` for `k = 0..=n`, by compensated cumulative summation.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for k in 1..=n {
        let y = (k as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        out.push(sum);
    }
    out
}

/// Exact law of `S_n` under `P_{n,β,K}`, for `n ≤` [`DEFAULT_N_MAX`].
pub fn finite_size_law(n: usize, params: ModelParams) -> Result<SpinLawExact> {
    finite_size_law_with_limit(n, params, DEFAULT_N_MAX)
}

pub fn finite_size_law_with_limit(
    n: usize,
    params: ModelParams,
    n_max: usize,
) -> Result<SpinLawExact> {
    const OP: &str = "finite_size_law";
    if n == 0 {
        return Err(usage(OP, "n must be >= 1"));
    }
    if n > n_max {
        return Err(Error::Resource {
            op: OP,
            msg: format!("n = {n} exceeds n_max = {n_max}; use the Monte Carlo estimator instead"),
        });
    }
    let lf = log_factorials(n);
    let (beta, kappa) = (params.beta(), params.kappa());
    let nf = n as f64;
    let half: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|s| {
            let mut acc = LogSumExp::new();
            for n_plus in s..=(n + s) / 2 {
                let n_minus = n_plus - s;
                let n_zero = n - n_plus - n_minus;
                acc.push(
                    lf[n] - lf[n_plus] - lf[n_zero] - lf[n_minus]
                        - beta * (n_plus + n_minus) as f64,
                );
            }
            let sf = s as f64;
            acc.value() + beta * kappa * sf * sf / nf
        })
        .collect();
    let mut log_weights = Vec::with_capacity(2 * n + 1);
    log_weights.extend(half.iter().rev());
    log_weights.extend(half.iter().skip(1));
    let log_z = log_sum_exp(log_weights.iter().copied());
    Ok(SpinLawExact {
        n,
        log_weights,
        log_z,
    })
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `E |S_n / n^{1−γ}|^power`.
pub fn abs_moment(law: &SpinLawExact, power: f64, gamma: f64) -> f64 {
    let n = law.n as i64;
    let scale = (law.n as f64).powf(1.0 - gamma);
    compensated_sum((1..=n).rev().map(|s| {
        let p = 2.0 * law.probability(s);
        (s as f64 / scale).powf(power) * p
    }))
}

/// `E | |S_n/n| − center |`.
pub fn abs_deviation_moment(law: &SpinLawExact, center: f64) -> f64 {
    let n = law.n as i64;
    let nf = law.n as f64;
    compensated_sum((-n..=n).map(|s| ((s.abs() as f64 / nf) - center).abs() * law.probability(s)))
}

/// `log P{ |S_n / n^{1−γ}| ≥ a }`.
pub fn log_tail_mass(law: &SpinLawExact, gamma: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let n = law.n as i64;
    let scale = (law.n as f64).powf(1.0 - gamma);
    let terms = (1..=n)
        .filter(|&s| s as f64 / scale >= a)
        .map(|s| law.log_probability(s) + std::f64::consts::LN_2);
    log_sum_exp(terms)
}

/// `P{ |S_n / n^{1−γ}| ≥ a }`.
pub fn tail_mass(law: &SpinLawExact, gamma: f64, a: f64) -> f64 {
    log_tail_mass(law, gamma, a).exp().min(1.0)
}

/// A bounded continuous test function, with the locations where it is not
/// smooth so that integrators can split there.
pub trait TestFunction: Sync {
    fn eval(&self, x: f64) -> f64;

    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `min(|x|, cap)`.
#[derive(Debug, Clone, Copy)]
pub struct ClippedAbs {
    pub cap: f64,
}

impl TestFunction for ClippedAbs {
    fn eval(&self, x: f64) -> f64 {
        x.abs().min(self.cap)
    }

    fn kinks(&self) -> Vec<f64> {
        vec![-self.cap, 0.0, self.cap]
    }
}

/// `exp(−((x − center)/width)²)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
}

impl TestFunction for GaussianBump {
    fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-z * z).exp()
    }
}

/// Any smooth bounded closure.
pub struct Smooth<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> TestFunction for Smooth<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

fn check_gamma(op: &'static str, gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(usage(op, format!("gamma_bar must lie in [0, 1), got {gamma}")))
    }
}

/// Width, in standard deviations, beyond which Gaussian mass is dropped.
const GAUSS_SPAN: f64 = 40.0;
/// Lattice points with probability below this are skipped (f is bounded).
const LOG_P_FLOOR: f64 = -60.0;

/// `E f(S_n/n^{1−γ̄} + W_n/n^{1/2−γ̄})` with `W_n ~ N(0, 1/(2βK))` independent
/// of `S_n`, evaluated on the exact law.
pub fn hs_lhs(
    n: usize,
    params: ModelParams,
    gamma_bar: f64,
    f: &dyn TestFunction,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_gamma("hs_lhs", gamma_bar)?;
    quad.validate()?;
    let law = finite_size_law(n, params)?;
    let nf = n as f64;
    let scale = nf.powf(1.0 - gamma_bar);
    let sigma = params.coupling().powf(-0.5) / nf.powf(0.5 - gamma_bar);
    let kinks = f.kinks();
    let ni = n as i64;
    let terms: Vec<f64> = (-ni..=ni)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let lp = law.log_probability(s);
            if lp < LOG_P_FLOOR {
                return Ok(0.0);
            }
            let mu = s as f64 / scale;
            let (lo, hi) = (mu - GAUSS_SPAN * sigma, mu + GAUSS_SPAN * sigma);
            let inner: Vec<f64> = kinks.iter().copied().filter(|&k| k > lo && k < hi).collect();
            let e = if inner.is_empty() {
                gaussian_expectation(|x| f.eval(x), mu, sigma)
            } else {
                let mut pts = vec![lo, mu];
                pts.extend(inner);
                pts.push(hi);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                integrate(
                    |x| {
                        let z = (x - mu) / sigma;
                        f.eval(x) * norm * (-0.5 * z * z).exp()
                    },
                    &pts,
                    quad.rel_tol,
                )?
            };
            Ok(lp.exp() * e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// `∫ f(x) e^{−nG(x/n^{γ̄})} dx / ∫ e^{−nG(x/n^{γ̄})} dx`.
pub fn hs_rhs(
    n: usize,
    params: ModelParams,
    gamma_bar: f64,
    f: &dyn TestFunction,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_gamma("hs_rhs", gamma_bar)?;
    quad.validate()?;
    if n == 0 {
        return Err(usage("hs_rhs", "n must be >= 1"));
    }
    let density = ScaledDensity::new(n, params, gamma_bar, quad.tail_cut);
    let mut pts = density.breakpoints();
    pts.extend(f.kinks().into_iter().filter(|&k| k.abs() < density.cut));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let num = integrate(|x| f.eval(x) * density.weight(x), &pts, quad.rel_tol)?;
    let den = integrate(|x| density.weight(x), &pts, quad.rel_tol)?;
    Ok(num / den)
}

/// Unnormalized density `e^{−n(G(x/n^{γ}) − min G)}` of the smoothed,
/// rescaled total spin, with its truncation point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledDensity {
    params: ModelParams,
    nf: f64,
    x_scale: f64,
    g_min: f64,
    /// Positive mode in the `x` variable (0 when the minimum is at the origin).
    pub mode: f64,
    /// Integration is over `[−cut, cut]`.
    pub cut: f64,
}

impl ScaledDensity {
    pub fn new(n: usize, params: ModelParams, gamma: f64, tail_cut: f64) -> Self {
        let nf = n as f64;
        let x_scale = nf.powf(gamma);
        let (g_min, y_mode) = match lowest_minimum(params, 0.0) {
            Some(m) if m.value < 0.0 => (m.value, m.x),
            _ => (0.0, 0.0),
        };
        // G is increasing on [1, ∞); walk out until the exponent clears tail_cut.
        let mut y = 1.0f64;
        while nf * (free_energy_unchecked(params, y) - g_min) < tail_cut + 10.0 {
            y *= 1.25;
        }
        Self {
            params,
            nf,
            x_scale,
            g_min,
            mode: y_mode * x_scale,
            cut: y * x_scale,
        }
    }

    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        (-self.nf * (free_energy_unchecked(self.params, x / self.x_scale) - self.g_min)).exp()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        const PIECES: usize = 64;
        let mut pts: Vec<f64> = (0..=PIECES)
            .map(|i| -self.cut + 2.0 * self.cut * i as f64 / PIECES as f64)
            .collect();
        pts.extend([0.0, self.mode, -self.mode]);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Monte Carlo estimate of `E|S_n/n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub sweeps: usize,
    pub seed: u64,
}

pub const MC_BATCHES: usize = 20;

/// Single-site Metropolis estimate of `E|S_n/n|`, one sample per sweep of
/// `n` proposals, error bar from 20 batch means.
pub fn mc_estimate(
    n: usize,
    params: ModelParams,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<McEstimate> {
    const OP: &str = "mc_estimate";
    if n == 0 {
        return Err(usage(OP, "n must be >= 1"));
    }
    if sweeps < MC_BATCHES {
        return Err(usage(
            OP,
            format!("sweeps = {sweeps} is fewer than the {MC_BATCHES} batches required"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spins: Vec<i8> = (0..n).map(|_| rng.random_range(-1i8..=1)).collect();
    let mut total: i64 = spins.iter().map(|&s| i64::from(s)).sum();
    let (beta, coupling) = (params.beta(), params.kappa() / n as f64);

    let sweep = |rng: &mut ChaCha8Rng, spins: &mut [i8], total: &mut i64| {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let old = spins[i];
            // uniform choice among the two other values
            let new = ((old + 1 + rng.random_range(1i8..=2)) % 3) - 1;
            let next = *total + i64::from(new - old);
            let d_local = f64::from(new * new - old * old);
            let d_pair = (next * next - *total * *total) as f64;
            let delta_h = d_local - coupling * d_pair;
            if delta_h <= 0.0 || rng.random::<f64>() < (-beta * delta_h).exp() {
                spins[i] = new;
                *total = next;
            }
        }
    };

    for _ in 0..burn_in {
        sweep(&mut rng, &mut spins, &mut total);
    }
    let samples: Vec<f64> = (0..sweeps)
        .map(|_| {
            sweep(&mut rng, &mut spins, &mut total);
            total.abs() as f64 / n as f64
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / sweeps as f64;
    let batch = sweeps / MC_BATCHES;
    let means: Vec<f64> = samples
        .chunks_exact(batch)
        .take(MC_BATCHES)
        .map(|c| c.iter().sum::<f64>() / batch as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / MC_BATCHES as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (MC_BATCHES - 1) as f64;
    Ok(McEstimate {
        mean,
        stderr: (var / MC_BATCHES as f64).sqrt(),
        sweeps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(b: f64, k: f64) -> ModelParams {
        ModelParams::new(b, k).unwrap()
    }

    /// Direct sum over all 3^n configurations of e^{−βH}.
    fn brute_force(n: usize, p: ModelParams) -> Vec<f64> {
        let mut w = vec![0.0; 2 * n + 1];
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let (mut c, mut s, mut sq) = (code, 0i64, 0i64);
            for _ in 0..n {
                let spin = (c % 3) as i64 - 1;
                c /= 3;
                s += spin;
                sq += spin * spin;
            }
            let h = sq as f64 - p.kappa() / n as f64 * (s * s) as f64;
            w[(s + n as i64) as usize] += (-p.beta() * h).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter().map(|x| x / z).collect()
    }

    #[test]
    fn matches_brute_force_small_n() {
        for &(b, k) in &[(1.0, 1.0), (0.7, 1.9), (1.8, 0.6), (2.0, 2.0)] {
            for n in 1..=8 {
                let law = finite_size_law(n, params(b, k)).unwrap();
                let bf = brute_force(n, params(b, k));
                for (s, p) in law.probabilities() {
                    let q = bf[(s + n as i64) as usize];
                    assert!((p - q).abs() < 1e-12, "n={n} s={s} {p} {q}");
                }
            }
        }
    }

    #[test]
    fn enumerated_examples() {
        let law = finite_size_law(1, params(1.0, 1.0)).unwrap();
        for s in -1..=1 {
            assert_abs_diff_eq!(law.probability(s), 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(abs_moment(&law, 1.0, 0.0), 2.0 / 3.0, epsilon = 1e-15);

        let law = finite_size_law(2, params(1.0, 1.0)).unwrap();
        let h = (-0.5f64).exp();
        let expected = (2.0 + 2.0 * h) / (3.0 + 4.0 * h + 2.0 * (-2.0f64).exp());
        assert_abs_diff_eq!(abs_moment(&law, 1.0, 0.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.5640, epsilon = 1e-4);
    }

    #[test]
    fn symmetry_and_normalization() {
        for &n in &[1usize, 2, 3, 10, 100, 1000] {
            let law = finite_size_law(n, params(1.3, 1.4)).unwrap();
            let ni = n as i64;
            for s in 0..=ni {
                assert_eq!(law.log_weight(s), law.log_weight(-s));
                assert!(law.log_weight(s).is_finite());
            }
            let total: f64 = law.probabilities().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} total={total}");
            assert_eq!(law.log_weight(ni + 1), f64::NEG_INFINITY);
        }
    }

    #[test]
    fn moment_inequalities() {
        let law = finite_size_law(300, params(1.0, 1.3)).unwrap();
        let m1 = abs_moment(&law, 1.0, 0.0);
        let m2 = abs_moment(&law, 2.0, 0.0);
        assert!(m1 <= 1.0 && m2 >= m1 * m1);
    }

    #[test]
    fn tail_mass_edges() {
        let law = finite_size_law(100, params(1.0, 1.3)).unwrap();
        assert_eq!(tail_mass(&law, 0.2, 0.0), 1.0);
        assert_eq!(tail_mass(&law, 0.2, 100f64.powf(0.2) * 1.0001), 0.0);
        let mut prev = 1.0;
        for i in 0..50 {
            let t = tail_mass(&law, 0.2, 0.05 * i as f64);
            assert!(t <= prev);
            prev = t;
        }
        // a just above zero excludes only s = 0
        let t = tail_mass(&law, 0.0, 1e-9);
        assert_relative_eq!(t, 1.0 - law.probability(0), max_relative = 1e-12);
    }

    #[test]
    fn n_max_is_enforced() {
        let err = finite_size_law_with_limit(11, params(1.0, 1.0), 10).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
        assert!(finite_size_law(0, params(1.0, 1.0)).is_err());
    }

    #[test]
    fn smoothing_identity_trivial_functions() {
        let q = QuadratureConfig::default();
        let p = params(1.0, 1.5);
        let one = Smooth(|_| 1.0);
        let odd = Smooth(f64::tanh);
        assert_abs_diff_eq!(hs_lhs(40, p, 0.2, &one, &q).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(hs_rhs(40, p, 0.2, &one, &q).unwrap(), 1.0, epsilon = 1e-12);
        assert!(hs_lhs(40, p, 0.2, &odd, &q).unwrap().abs() < 1e-10);
        assert!(hs_rhs(40, p, 0.2, &odd, &q).unwrap().abs() < 1e-10);
        assert!(hs_lhs(40, p, 1.0, &one, &q).is_err());
    }

    #[test]
    fn smoothing_identity_holds() {
        let q = QuadratureConfig::default();
        let p = params(1.0, 1.5);
        let fs: [&dyn TestFunction; 3] = [
            &ClippedAbs { cap: 1.0 },
            &ClippedAbs { cap: 10.0 },
            &GaussianBump {
                center: 0.5,
                width: 1.0,
            },
        ];
        for &n in &[10usize, 50, 200] {
            for &g in &[0.0, 0.2, 0.4] {
                for f in fs {
                    let l = hs_lhs(n, p, g, f, &q).unwrap();
                    let r = hs_rhs(n, p, g, f, &q).unwrap();
                    assert!((l - r).abs() <= 1e-8 * r.abs(), "n={n} g={g} {l} {r}");
                }
            }
        }
    }

    #[test]
    fn mc_is_deterministic_and_validated() {
        let p = params(1.0, 1.5);
        let a = mc_estimate(50, p, 200, 20, 7).unwrap();
        let b = mc_estimate(50, p, 200, 20, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr >= 0.0);
        assert!(mc_estimate(50, p, 19, 0, 7).is_err());
    }

    #[test]
    fn mc_agrees_with_exact_law() {
        let p = params(1.0, 1.5);
        let exact = abs_moment(&finite_size_law(200, p).unwrap(), 1.0, 0.0);
        let est = mc_estimate(200, p, 20_000, 2_000, 12345).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{est:?} exact={exact}");

        let p = params(1.0, 1e-9);
        let exact = abs_moment(&finite_size_law(100, p).unwrap(), 1.0, 0.0);
        let est = mc_estimate(100, p, 20_000, 2_000, 99).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{est:?} exact={exact}");
    }
}
