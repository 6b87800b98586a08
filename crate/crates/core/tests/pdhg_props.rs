use olpdhg_core::lp::LpProblem;
use olpdhg_core::pdhg::{compute_residuals, pdhg_step, SaddleState};
use olpdhg_core::precond::DiagPreconditioner;
use olpdhg_core::sparse::SparseMatrix;
use olpdhg_testkit as tk;
use proptest::prelude::*;

fn instance(seed: u64) -> (LpProblem, DiagPreconditioner) {
    let mut rng = tk::rng(seed);
    let m = 1 + (seed % 6) as usize;
    let n = m + (seed / 7 % 5) as usize;
    let p = tk::random_feasible_lp(&mut rng, m, n, 0.6);
    let pre = DiagPreconditioner {
        tau: tk::random_vec(&mut rng, n, 0.01, 0.3),
        sigma: tk::random_vec(&mut rng, m, 0.01, 0.3),
    };
    (p, pre)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// With η = ω = 1 the step is bit-identical to a separately coded
    /// plain preconditioned step, iterated from a random start.
    #[test]
    fn unit_weights_match_plain_step(seed in any::<u64>()) {
        let (p, pre) = instance(seed);
        let mut rng = tk::rng(seed ^ 1);
        let x0: Vec<f64> = tk::random_vec(&mut rng, p.num_cols(), 0.0, 1.0);
        let l0 = tk::random_vec(&mut rng, p.num_rows(), -1.0, 1.0);
        let mut st = SaddleState::at(&p, x0.clone(), l0.clone()).unwrap();
        let (mut x, mut l) = (x0, l0);
        for _ in 0..20 {
            let step = pdhg_step(&p, &st, &pre, 1.0, 1.0).unwrap();
            let (xr, lr) = tk::plain_step(&p, &x, &l, &pre.tau, &pre.sigma);
            prop_assert_eq!(&step.x, &xr);
            prop_assert_eq!(&step.lam, &lr);
            st.accept(step);
            x = xr;
            l = lr;
        }
    }

    #[test]
    fn iterates_stay_nonnegative_and_caches_fresh(seed in any::<u64>(), eta in 0.1f64..3.0, omega in 0.1f64..3.0) {
        let (p, pre) = instance(seed);
        let mut st = SaddleState::zeros(&p);
        for _ in 0..30 {
            let step = pdhg_step(&p, &st, &pre, eta, omega).unwrap();
            prop_assert!(step.x.iter().all(|&v| v >= 0.0));
            for (xh, x) in step.x_half.iter().zip(&step.x) {
                prop_assert_eq!(*x, xh.max(0.0));
            }
            st.accept(step);
        }
        let scale = st.x.iter().chain(&st.lam).fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(st.cache_error(&p).unwrap() <= 1e-12 * scale);
    }

    /// The running average equals the η-weighted mean recomputed naively.
    #[test]
    fn running_average_is_weighted_mean(seed in any::<u64>()) {
        let (p, pre) = instance(seed);
        let mut st = SaddleState::zeros(&p);
        let mut rng = tk::rng(seed ^ 3);
        let mut xs: Vec<(f64, Vec<f64>)> = Vec::new();
        for _ in 0..25 {
            let eta = tk::random_vec(&mut rng, 1, 0.2, 1.5)[0];
            let step = pdhg_step(&p, &st, &pre, eta, 1.0).unwrap();
            xs.push((eta, step.x.clone()));
            st.accept(step);
        }
        let total: f64 = xs.iter().map(|(w, _)| w).sum();
        let avg = st.avg.x();
        for j in 0..p.num_cols() {
            let naive: f64 = xs.iter().map(|(w, x)| w * x[j]).sum::<f64>() / total;
            prop_assert!((avg[j] - naive).abs() <= 1e-12 * naive.abs().max(1e-300) || (avg[j] - naive).abs() <= 1e-15);
        }
    }
}

/// At a strictly complementary primal-dual optimum the step is a fixed point.
#[test]
fn strict_complementary_fixed_point() {
    // min x1 + 2 x2 s.t. x1 + x2 = 1: x* = (1, 0), λ* = 1, reduced costs (0, 1)
    let p = LpProblem::new(
        vec![1.0, 2.0],
        vec![1.0],
        SparseMatrix::from_dense(&[&[1.0, 1.0]]).unwrap(),
    )
    .unwrap();
    let st = SaddleState::at(&p, vec![1.0, 0.0], vec![1.0]).unwrap();
    let pre = DiagPreconditioner::uniform(2, 1, 0.4, 0.4);
    let step = pdhg_step(&p, &st, &pre, 1.0, 1.0).unwrap();
    for (a, b) in step.x.iter().zip(&st.x).chain(step.lam.iter().zip(&st.lam)) {
        assert!((a - b).abs() <= 1e-9);
    }
    let r = compute_residuals(&p, &st.x, &st.lam).unwrap();
    assert_eq!(r.kkt(), 0.0);
}

#[test]
fn zero_data_is_fixed_point() {
    let p = LpProblem::new(
        vec![0.0; 3],
        vec![0.0; 2],
        SparseMatrix::from_dense(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]]).unwrap(),
    )
    .unwrap();
    let st = SaddleState::zeros(&p);
    let step = pdhg_step(&p, &st, &DiagPreconditioner::uniform(3, 2, 0.7, 0.2), 1.3, 0.8).unwrap();
    assert_eq!(step.x, vec![0.0; 3]);
    assert_eq!(step.lam, vec![0.0; 2]);
}
