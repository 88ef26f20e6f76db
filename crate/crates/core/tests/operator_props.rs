use monodrift_core::spatial_operator::jensen_check;
use monodrift_core::{Coefficients, DiscreteOperator, Grid, MonotoneGraph, OperatorKind};
use proptest::prelude::*;

fn operator() -> impl Strategy<Value = DiscreteOperator<f64>> {
    let lap = (3usize..40).prop_map(|n| {
        DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, Grid::new(n, 1.0).unwrap()).unwrap()
    });
    let div = (3usize..40, 0.5..2.0f64, -0.5..0.5f64, 0.0..3.0f64).prop_map(|(n, a, b, a0)| {
        let kind = OperatorKind::DivergenceForm(Coefficients::constant(a, b, 0.0, a0));
        DiscreteOperator::assemble(kind, Grid::new(n, 1.0).unwrap()).unwrap()
    });
    let frac = (3usize..24, 0.3..1.0f64).prop_map(|(n, alpha)| {
        DiscreteOperator::assemble(OperatorKind::Fractional { alpha }, Grid::new(n, 1.0).unwrap()).unwrap()
    });
    prop_oneof![lap, div, frac]
}

fn with_vec() -> impl Strategy<Value = (DiscreteOperator<f64>, Vec<f64>, Vec<f64>)> {
    operator().prop_flat_map(|op| {
        let n = op.n();
        (Just(op), prop::collection::vec(0.0..1.0f64, n), prop::collection::vec(-3.0..3.0f64, n))
    })
}

fn delta() -> impl Strategy<Value = f64> {
    (-3.0..1.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn resolvent_is_sub_markovian((op, f, _) in with_vec(), d in delta()) {
        let u = op.resolvent_solve(d, &f).unwrap();
        for v in u {
            prop_assert!(v >= -1e-10 && v <= 1.0 + 1e-10, "{v}");
        }
    }

    #[test]
    fn resolvent_solves_its_system((op, _, f) in with_vec(), d in delta()) {
        let u = op.resolvent_solve(d, &f).unwrap();
        let au = op.apply_vec(&u);
        let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..u.len() {
            prop_assert!((u[i] + d * au[i] - f[i]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn form_is_nonnegative_and_dominates_coercivity((op, _, v) in with_vec()) {
        let c = op.coercivity().c;
        let form = op.form(&v);
        let nv = op.norm_v_sq(&v);
        prop_assert!(form >= c * nv - 1e-9 * (1.0 + nv));
    }

    #[test]
    fn dual_pairing_is_bounded((op, f, v) in with_vec()) {
        let pair = op.grid().inner(&f, &v).abs();
        prop_assert!(pair <= op.norm_vstar(&f) * op.norm_v(&v) * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn resolvent_contracts_h_norm_for_symmetric((op, _, f) in with_vec(), d in delta()) {
        if !matches!(op.kind(), OperatorKind::DivergenceForm(_)) {
            let u = op.resolvent_solve(d, &f).unwrap();
            prop_assert!(op.norm_h(&u) <= op.norm_h(&f) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn jensen_holds_for_catalog((op, _, f) in with_vec(), d in delta()) {
        for g in MonotoneGraph::<f64>::catalog() {
            let excess = jensen_check(&op, d, &g, &f).unwrap();
            prop_assert!(excess <= 1e-10 * (1.0 + f.iter().map(|&x| g.j(x)).fold(0.0, f64::max)), "{} {excess}", g.family());
        }
    }
}
