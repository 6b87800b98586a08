use std::path::PathBuf;

use olpdhg::mps::read_mps;
use olpdhg_core::lp::to_standard_form;
use olpdhg_core::pdhg::Status;
use olpdhg_core::solver::{solve, Mode, SolveConfig};

const AFIRO_OPTIMUM: f64 = -464.753_142_86;

fn afiro() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/afiro.mps")
}

#[test]
fn afiro_loads_with_expected_shape() {
    let gp = read_mps(afiro()).unwrap();
    assert_eq!(gp.name, "AFIRO");
    assert_eq!((gp.num_rows(), gp.num_cols()), (27, 32));
    assert_eq!(gp.matrix.nnz(), 83);
}

#[test]
fn afiro_reaches_known_optimum() {
    let gp = read_mps(afiro()).unwrap();
    let (p, map) = to_standard_form(&gp).unwrap();
    for mode in [Mode::Vanilla, Mode::Pdlp] {
        let r = solve(
            &p,
            &SolveConfig {
                mode,
                ..SolveConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.status, Status::Optimal, "{mode:?}");
        let x = map.recover_solution(&r.x).unwrap();
        let obj = gp.objective_value(&x);
        assert!(
            (obj - AFIRO_OPTIMUM).abs() <= 1e-3 * AFIRO_OPTIMUM.abs(),
            "{mode:?}: {obj}"
        );
        assert!(gp.max_violation(&x).unwrap() <= 1e-2);
    }
}
