use olpdhg_core::lp::{to_standard_form, LpProblem};
use olpdhg_core::precond::{
    apply_scaling, l2_rescale, pock_chambolle, ruiz, safeguard_scalars, static_scaling, StaticScaling,
    SAFEGUARD_SPECTRAL_TOL, SAFEGUARD_TARGET, SPECTRAL_MARGIN,
};
use olpdhg_core::sparse::{Axis, NormKind, SparseMatrix, SPECTRAL_MAX_ITERS};
use olpdhg_testkit as tk;
use proptest::prelude::*;

fn max_dev_from_one(a: &SparseMatrix) -> f64 {
    a.axis_norms(Axis::Rows, NormKind::Inf)
        .into_iter()
        .chain(a.axis_norms(Axis::Cols, NormKind::Inf))
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max)
}

fn objective(o: tk::Oracle) -> f64 {
    match o {
        tk::Oracle::Optimal { objective, .. } => objective,
        tk::Oracle::Infeasible => panic!("generated LP should be feasible"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pock_chambolle_is_nonexpansive(seed in any::<u64>(), beta in 0.0f64..=2.0) {
        let mut rng = tk::rng(seed);
        let a = tk::random_matrix(&mut rng, 6, 7, 0.5);
        let pc = pock_chambolle(&a, beta).unwrap();
        let row: Vec<f64> = pc.sigma.iter().map(|s| s.sqrt()).collect();
        let col: Vec<f64> = pc.tau.iter().map(|t| t.sqrt()).collect();
        let scaled = a.scale(&row, &col).unwrap();
        prop_assert!(tk::spectral_norm(&scaled) <= 1.0 + 1e-9);
    }

    #[test]
    fn ruiz_equilibrates(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let a = tk::random_matrix(&mut rng, 20, 20, 0.4);
        let (rec, scaled) = ruiz(&a, 10).unwrap();
        prop_assert!(max_dev_from_one(&scaled) <= 1e-2);
        // the record reproduces the returned matrix
        let again = a.scale(&rec.row, &rec.col).unwrap();
        for ((_, _, x), (_, _, y)) in again.triplets().iter().zip(scaled.triplets()) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn ruiz_deviation_shrinks_with_iterations(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let a = tk::random_matrix(&mut rng, 12, 9, 0.5);
        let dev1 = max_dev_from_one(&ruiz(&a, 1).unwrap().1);
        let dev10 = max_dev_from_one(&ruiz(&a, 10).unwrap().1);
        prop_assert!(dev10 <= dev1 + 1e-12);
    }

    #[test]
    fn safeguard_holds(seed in any::<u64>(), ratio in 0.01f64..100.0) {
        let mut rng = tk::rng(seed);
        let a = tk::random_matrix(&mut rng, 8, 10, 0.5);
        let (_, scaled) = ruiz(&a, 10).unwrap();
        let (t, s) = safeguard_scalars(&scaled, ratio).unwrap();
        let est = scaled.estimate_spectral_norm(SPECTRAL_MAX_ITERS, SAFEGUARD_SPECTRAL_TOL);
        let inflated = SPECTRAL_MARGIN * est;
        prop_assert!((t * s * inflated * inflated - SAFEGUARD_TARGET).abs() < 1e-12);
        prop_assert!(t * s * inflated * inflated < 1.0);
        let truth = tk::spectral_norm(&scaled);
        prop_assert!(t * s * truth * truth < 1.0);
        prop_assert!((t / s - ratio).abs() <= 1e-9 * ratio);
    }

    #[test]
    fn l2_pass_uses_input_norms(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let a = tk::random_matrix(&mut rng, 5, 6, 0.6);
        let (rec, scaled) = l2_rescale(&a);
        for (i, j, v) in scaled.triplets() {
            let rn: f64 = a.row(i).map(|(_, x)| x * x).sum::<f64>().sqrt();
            let cn: f64 = a.col(j).map(|(_, x)| x * x).sum::<f64>().sqrt();
            let expected = a.get(i, j) / (rn.sqrt() * cn.sqrt());
            prop_assert!((v - expected).abs() <= 1e-12 * expected.abs());
            prop_assert!((rec.row[i] - 1.0 / rn.sqrt()).abs() <= 1e-15);
        }
    }

    #[test]
    fn scaling_preserves_optimum(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let p = tk::random_feasible_lp(&mut rng, 3, 6, 0.7);
        let rec = static_scaling(&p.a, StaticScaling::default()).unwrap();
        let sp = apply_scaling(&p, &rec).unwrap();
        let (o1, o2) = match (tk::standard_form_oracle(&p), tk::standard_form_oracle(&sp.problem)) {
            (tk::Oracle::Optimal { objective: a, .. }, tk::Oracle::Optimal { objective: b, x }) => {
                // mapping the scaled optimum back gives a feasible point with the same value
                let back = sp.unscale_primal(&x);
                let r = p.a.matvec(&back).unwrap();
                for (l, rr) in r.iter().zip(&p.b) {
                    prop_assert!((l - rr).abs() <= 1e-7 * (1.0 + rr.abs()));
                }
                prop_assert!(tk::rel_diff(p.objective(&back), a) <= 1e-8);
                (a, b)
            }
            other => panic!("unexpected {other:?}"),
        };
        prop_assert!(tk::rel_diff(o2, o1) <= 1e-8);
    }

    #[test]
    fn standard_form_round_trip(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let gp = tk::random_general_lp(&mut rng, 3, 3);
        let (std, map) = to_standard_form(&gp).unwrap();
        let general = objective(tk::general_form_oracle(&gp));
        match tk::standard_form_oracle(&std) {
            tk::Oracle::Optimal { objective: o, x } => {
                prop_assert!(tk::rel_diff(map.recover_objective(o), general) <= 1e-7);
                let orig = map.recover_solution(&x).unwrap();
                prop_assert!(gp.max_violation(&orig).unwrap() <= 1e-7);
                prop_assert!(tk::rel_diff(gp.objective_value(&orig), general) <= 1e-7);
            }
            tk::Oracle::Infeasible => panic!("standard form lost feasibility"),
        }
    }
}

#[test]
fn pock_chambolle_spec_example() {
    let a = SparseMatrix::from_dense(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
    let pc = pock_chambolle(&a, 1.0).unwrap();
    assert_eq!(pc.tau, vec![0.25, 1.0 / 6.0]);
    assert_eq!(pc.sigma, vec![1.0 / 3.0, 1.0 / 7.0]);
}

#[test]
fn static_scaling_none_is_identity() {
    let p = LpProblem::new(vec![1.0], vec![2.0], SparseMatrix::identity(1)).unwrap();
    let rec = static_scaling(&p.a, StaticScaling::None).unwrap();
    let sp = apply_scaling(&p, &rec).unwrap();
    assert_eq!(sp.problem, p);
}
