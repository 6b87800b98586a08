//! Seeded random LPs that are feasible and bounded by construction.

use olpdhg_core::lp::LpProblem;
use olpdhg_core::sparse::SparseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `min cᵀx, Ax = b, x ≥ 0` with `b = Ax₀` for some `x₀ ≥ 0` and
/// `c = Aᵀy₀ + s₀` with `s₀ > 0`, so both primal and dual are feasible.
pub fn feasible_lp(rows: usize, cols: usize, density: f64, seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    let mut row_hit = vec![false; rows];
    let mut col_hit = vec![false; cols];
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                trip.push((i, j, entry(&mut rng)));
                row_hit[i] = true;
                col_hit[j] = true;
            }
        }
    }
    if cols > 0 {
        for (i, _) in row_hit.iter().enumerate().filter(|(_, h)| !**h) {
            trip.push((i, rng.random_range(0..cols), entry(&mut rng)));
        }
    }
    if rows > 0 {
        for (j, _) in col_hit.iter().enumerate().filter(|(_, h)| !**h) {
            trip.push((rng.random_range(0..rows), j, entry(&mut rng)));
        }
    }
    let a = SparseMatrix::from_triplets(rows, cols, &trip).expect("indices are in range");
    let x0: Vec<f64> = (0..cols)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random_range(0.0..2.0)
            }
        })
        .collect();
    let y0: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = a.matvec(&x0).expect("length matches");
    let aty = a.matvec_transpose(&y0).expect("length matches");
    let c = aty.iter().map(|v| v + rng.random_range(0.1..2.0)).collect();
    LpProblem::new(c, b, a).expect("dimensions agree")
}

fn entry(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = rng.random_range(0.1..3.0);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}
