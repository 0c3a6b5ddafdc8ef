use attrition::refine::{
    bounded_support_selection, equivalence_check, perturbed_family, selection_sweep, PerturbationConfig,
    SelectionConfig, DEFAULT_DELTAS,
};
use attrition::{type_grid, Anchor, TypeDistribution};
use proptest::prelude::*;

fn dist(which: usize) -> TypeDistribution {
    match which {
        0 => TypeDistribution::exponential(1.5).unwrap(),
        1 => TypeDistribution::uniform01(),
        _ => TypeDistribution::pareto(1.0, 2.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn discounting_and_behavioral_odes_agree(which in 0usize..3, delta in 0.05f64..0.99, c in 0.0f64..0.3) {
        let d = dist(which);
        let fam = perturbed_family(d.clone(), PerturbationConfig::Al { delta }, Anchor::C(c)).unwrap();
        let grid = type_grid(&d, fam.theta1(), 128, 1e-4).unwrap();
        let diff = equivalence_check(&d, delta, c, &grid).unwrap();
        prop_assert!(diff < 1e-8, "{diff}");
    }
}

#[test]
fn bounded_support_forces_zero_at_every_delta() {
    let u = TypeDistribution::uniform01();
    for delta in DEFAULT_DELTAS {
        let s = bounded_support_selection(&u, delta).unwrap();
        assert!(s.forced_c.abs() <= 1e-12);
        assert!(s.backward_residual <= 1e-6);
    }
}

#[test]
fn cap_bound_and_finite_thresholds_in_every_cell() {
    let cfg = SelectionConfig { grid: 256, ..Default::default() };
    for d in [dist(0), TypeDistribution::pareto(1.0, 1.0).unwrap()] {
        let x = selection_sweep(&d, &DEFAULT_DELTAS, &[0.1, 0.3], &cfg).unwrap();
        assert_eq!(x.cells.len(), 8);
        for cell in &x.cells {
            assert!(cell.error.is_none(), "{cell:?}");
            let m = cell.m_delta.unwrap();
            let a = cell.a_bar_1.unwrap();
            assert!(m.is_finite() && a.is_finite(), "{cell:?}");
            assert!(a <= m / (1.0 - cell.delta), "{cell:?}");
        }
    }
}
