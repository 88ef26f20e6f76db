use monodrift_core::noise_model::{NoiseKind, NoiseModel, Sigma};
use monodrift_core::{DiscreteOperator, Grid, OperatorKind};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = NoiseModel<f64>> {
    let kind = prop_oneof![
        Just(NoiseKind::Additive),
        (0.1..3.0f64).prop_map(|s| NoiseKind::Multiplicative(Sigma::Tanh { scale: s })),
        (0.1..3.0f64).prop_map(|b| NoiseKind::Multiplicative(Sigma::Clamp { bound: b })),
    ];
    (4usize..32, 1usize..8, 0.1..2.0f64, kind).prop_map(|(n, k, amp, kind)| {
        NoiseModel::from_fn(
            Grid::new(n, 1.0).unwrap(),
            k,
            |m, x| amp * (m as f64 * std::f64::consts::PI * x).sin() / m as f64,
            kind,
        )
        .unwrap()
    })
}

fn with_states() -> impl Strategy<Value = (NoiseModel<f64>, Vec<f64>, Vec<f64>)> {
    model().prop_flat_map(|nm| {
        let n = nm.grid().n();
        (Just(nm), prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn certified_lipschitz_bound((nm, x, y) in with_states()) {
        let d = nm.hs_distance(0.0, &x, &y);
        let dxy = nm.grid().norm_h(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!(d <= nm.lipschitz() * dxy * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn certified_growth_bound((nm, x, _) in with_states()) {
        let hs = nm.hs_norm(0.0, &x);
        prop_assert!(hs <= nm.growth() * (1.0 + nm.grid().norm_h(&x)) * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn scaling_is_homogeneous((nm, x, _) in with_states(), a in -3.0..3.0f64) {
        let s = nm.scaled(a);
        prop_assert!((s.hs_norm(0.0, &x) - a.abs() * nm.hs_norm(0.0, &x)).abs() <= 1e-12 * (1.0 + nm.hs_norm(0.0, &x)));
    }

    #[test]
    fn smoothing_shrinks_hs_norm((nm, x, _) in with_states(), e in 0.001..1.0f64) {
        let op = DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, *nm.grid()).unwrap();
        let sm = nm.smooth(&op, e).unwrap();
        prop_assert!(sm.hs_norm(0.0, &x) <= nm.hs_norm(0.0, &x) * (1.0 + 1e-12) + 1e-14);
        prop_assert_eq!(sm.epsilon(), e);
    }

    #[test]
    fn increment_is_linear_in_draws((nm, x, _) in with_states(), w in prop::collection::vec(-2.0..2.0f64, 8), a in -2.0..2.0f64) {
        let k = nm.modes();
        let w = &w[..k.min(w.len())];
        if w.len() == k {
            let scaled: Vec<f64> = w.iter().map(|v| a * v).collect();
            let i1 = nm.increment(0.0, &x, w);
            let i2 = nm.increment(0.0, &x, &scaled);
            for (p, q) in i1.iter().zip(&i2) {
                prop_assert!((a * p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
        }
    }
}
