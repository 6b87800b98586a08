use olpdhg_core::sparse::{Axis, NormKind, SparseMatrix, SPECTRAL_MAX_ITERS, SPECTRAL_TOL};
use olpdhg_testkit as tk;
use proptest::prelude::*;

fn matrix(seed: u64) -> SparseMatrix {
    let mut rng = tk::rng(seed);
    let m = 1 + (seed % 9) as usize;
    let n = 1 + (seed / 9 % 9) as usize;
    tk::random_matrix(&mut rng, m, n, 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity(seed in any::<u64>()) {
        let a = matrix(seed);
        let mut rng = tk::rng(seed ^ 0xabcd);
        let x = tk::random_vec(&mut rng, a.ncols(), -1.0, 1.0);
        let y = tk::random_vec(&mut rng, a.nrows(), -1.0, 1.0);
        let ax = a.matvec(&x).unwrap();
        let aty = a.matvec_transpose(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = aty.iter().zip(&x).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn matvec_matches_dense(seed in any::<u64>()) {
        let a = matrix(seed);
        let mut rng = tk::rng(seed.wrapping_add(7));
        let x = tk::random_vec(&mut rng, a.ncols(), -2.0, 2.0);
        let fast = a.matvec(&x).unwrap();
        let slow = tk::dense_matvec(&a, &x);
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!((f - s).abs() <= 1e-12 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn spectral_estimate_brackets_svd(seed in any::<u64>()) {
        let a = matrix(seed);
        let truth = tk::spectral_norm(&a);
        let est = a.estimate_spectral_norm(SPECTRAL_MAX_ITERS, SPECTRAL_TOL);
        prop_assert!(est <= truth * (1.0 + 1e-6));
        // the default tolerance can stop near the second singular value, so
        // the lower bracket is checked once the iteration has converged
        let tight = a.estimate_spectral_norm(100_000, 1e-13);
        prop_assert!(tight <= truth * (1.0 + 1e-6));
        prop_assert!(tight >= (1.0 - 1e-4) * truth, "estimate {} vs {}", tight, truth);
    }

    #[test]
    fn power_two_is_squared_l2(seed in any::<u64>()) {
        let a = matrix(seed);
        for axis in [Axis::Rows, Axis::Cols] {
            let l2 = a.axis_norms(axis, NormKind::L2);
            let p2 = a.axis_norms(axis, NormKind::Power(2.0));
            for (l, p) in l2.iter().zip(&p2) {
                prop_assert!((l * l - p).abs() <= 1e-12 * (1.0 + p));
            }
        }
    }

    #[test]
    fn transpose_round_trip(seed in any::<u64>()) {
        let a = matrix(seed);
        prop_assert_eq!(a.transpose().transpose(), a.clone());
        prop_assert_eq!(a.transpose().to_dense().len(), a.ncols());
    }

    #[test]
    fn triplets_round_trip(seed in any::<u64>()) {
        let a = matrix(seed);
        let b = SparseMatrix::from_triplets(a.nrows(), a.ncols(), &a.triplets()).unwrap();
        prop_assert_eq!(a, b);
    }
}
