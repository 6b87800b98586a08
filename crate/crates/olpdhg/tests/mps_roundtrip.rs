use olpdhg::mps::{parse_mps, write_mps};
use olpdhg_core::lp::to_standard_form;
use olpdhg_testkit as tk;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(seed in any::<u64>(), m in 1usize..6, n in 1usize..7, offset in -5.0f64..5.0) {
        let mut rng = tk::rng(seed);
        let mut gp = tk::random_general_lp(&mut rng, m, n);
        gp.objective_offset = offset;
        let back = parse_mps(&write_mps(&gp)).unwrap();
        prop_assert_eq!(back, gp);
    }

    #[test]
    fn round_trip_keeps_the_optimum(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let gp = tk::random_general_lp(&mut rng, 3, 4);
        let back = parse_mps(&write_mps(&gp)).unwrap();
        let (a, _) = to_standard_form(&gp).unwrap();
        let (b, _) = to_standard_form(&back).unwrap();
        prop_assert_eq!(a, b);
    }
}
