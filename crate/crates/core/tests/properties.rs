use bclab_core::finite_size::{abs_moment, finite_size_law};
use bclab_core::model::{cumulant, cumulant_deriv, free_energy};
use bclab_core::phase::{first_order_k, second_order_k, BETA_C};
use bclab_core::sequences::{
    check_hypothesis_iiia, limit_constant, params_at, xbar, EvenPolynomial, SequenceKind,
};
use bclab_core::{thermo_magnetization, Alpha, ModelParams, QuadratureConfig, Regime, SequenceSpec};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = SequenceKind> {
    prop_oneof![
        (0.3f64..1.3, 0.5f64..3.0).prop_map(|(beta, k)| SequenceKind::Seq1 { beta, b: 0, k }),
        (0.5f64..3.0).prop_map(|k| SequenceKind::Seq3 { b: 0, k }),
        (0.1f64..3.0).prop_map(|d| SequenceKind::Seq5 {
            ell: bclab_core::phase::second_order_k_deriv(BETA_C, 2).unwrap() + d
        }),
        (3u32..6, 0.1f64..3.0).prop_map(|(p, d)| {
            let kp = bclab_core::phase::second_order_k_deriv(BETA_C, p).unwrap();
            let ell = if p % 2 == 1 { kp - d } else { kp + d };
            SequenceKind::Seq6 { p, ell }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn law_is_symmetric_and_normalized(beta in 0.2f64..3.0, kappa in 0.1f64..3.0, n in 1usize..300) {
        let law = finite_size_law(n, ModelParams::new(beta, kappa).unwrap()).unwrap();
        let total: f64 = law.probabilities().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for s in 0..=n as i64 {
            let (a, b) = (law.probability(s), law.probability(-s));
            prop_assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
        }
        let e = abs_moment(&law, 1.0, 0.0);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn cumulant_is_even_and_convex(beta in 0.05f64..5.0, t in -60.0f64..60.0) {
        let c = cumulant(beta, t).unwrap();
        prop_assert!((c - cumulant(beta, -t).unwrap()).abs() <= 1e-12 * c.abs().max(1.0));
        prop_assert!(c >= 0.0);
        prop_assert!(cumulant_deriv(beta, t, 2).unwrap() >= 0.0);
        let d1 = cumulant_deriv(beta, t, 1).unwrap();
        prop_assert!(d1.abs() <= 1.0 && d1 * t >= 0.0);
    }

    #[test]
    fn magnetization_minimizes_free_energy(beta in 0.2f64..3.0, kappa in 0.1f64..3.0) {
        let p = ModelParams::new(beta, kappa).unwrap();
        let m = thermo_magnetization(p);
        prop_assert!((0.0..1.0).contains(&m));
        let gm = free_energy(p, m).unwrap();
        for i in 0..=200 {
            let x = -1.5 + 0.015 * i as f64;
            prop_assert!(gm <= free_energy(p, x).unwrap() + 1e-9);
        }
    }

    #[test]
    fn first_order_curve_lies_below(beta in (BETA_C + 1e-3)..4.0) {
        let k1 = first_order_k(beta).unwrap();
        prop_assert!(k1 > 0.0 && k1 < second_order_k(beta).unwrap());
    }

    #[test]
    fn quartic_limit_constant_scales(c in 0.05f64..20.0) {
        let q = QuadratureConfig::default();
        let one = limit_constant(&EvenPolynomial::new(0.0, 1.0, 0.0).unwrap(), &q).unwrap();
        let zc = limit_constant(&EvenPolynomial::new(0.0, c, 0.0).unwrap(), &q).unwrap();
        prop_assert!((zc - one * c.powf(-0.25)).abs() < 1e-9 * one);
    }

    #[test]
    fn xbar_is_a_global_minimizer(c2 in -3.0f64..3.0, c4 in -2.0f64..2.0, c6 in 0.01f64..2.0) {
        let g = EvenPolynomial::new(c2, c4, c6).unwrap();
        let x = xbar(&g).value;
        prop_assert!(x >= 0.0);
        for i in 0..=400 {
            let y = -4.0 + 0.02 * i as f64;
            prop_assert!(g.eval(x) <= g.eval(y) + 1e-12);
        }
    }

    #[test]
    fn exponents_are_consistent(kind in kind_strategy(), frac in 0.01f64..0.99) {
        let probe = SequenceSpec::new(0.1, kind).unwrap();
        let e = probe.exponents();
        let a0 = e.alpha0_value();
        prop_assert!(e.theta * a0 > 0.0 && e.theta * a0 < 0.5);
        let alpha = frac * a0;
        prop_assert!(e.kappa(alpha) > e.theta * alpha);
        let spec = probe.with_alpha(alpha).unwrap();
        prop_assert_eq!(spec.regime(), Regime::Below);
        let at = probe.with_alpha(Alpha::Exact(e.alpha0)).unwrap();
        prop_assert_eq!(at.regime(), Regime::At);
    }

    #[test]
    fn sequences_converge_to_their_base_point(kind in kind_strategy(), alpha in 0.05f64..0.9) {
        let spec = SequenceSpec::new(alpha, kind).unwrap();
        let far = params_at(&spec, 1_000_000_000).unwrap();
        let near = params_at(&spec, 1_000).unwrap();
        let base = params_at(&spec, u64::MAX).unwrap();
        prop_assert!((far.beta() - base.beta()).abs() <= (near.beta() - base.beta()).abs());
        prop_assert!((far.kappa() - base.kappa()).abs() <= (near.kappa() - base.kappa()).abs() + 1e-15);
    }
}

#[test]
fn free_energy_error_decreases_on_spot_grid() {
    let specs = [
        SequenceSpec::new(0.3, SequenceKind::Seq1 { beta: 1.0, b: 0, k: 1.0 }).unwrap(),
        SequenceSpec::new(0.5, SequenceKind::Seq3 { b: 0, k: 1.0 }).unwrap(),
        SequenceSpec::new(0.2, SequenceKind::Seq1 { beta: 0.6, b: 1, k: 2.0 }).unwrap(),
    ];
    for spec in specs {
        let rows = check_hypothesis_iiia(&spec, 2.0, &[1_000, 100_000, 10_000_000]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error), "{rows:?}");
    }
}
