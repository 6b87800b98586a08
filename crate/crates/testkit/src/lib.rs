//! Test oracles and random instance generators shared by the test suites.
//!
//! Everything here is deliberately written without the solver's own
//! kernels: dense loops, `nalgebra` factorizations and brute-force
//! enumeration.

use nalgebra::{DMatrix, DVector};
use olpdhg_core::lp::{GeneralLp, LpProblem, RowSense};
use olpdhg_core::sparse::SparseMatrix;
use rand::Rng;

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_nalgebra(a: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] = v;
    }
    d
}

/// Largest singular value from a full SVD.
pub fn spectral_norm(a: &SparseMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    to_nalgebra(a).singular_values().iter().fold(0.0f64, |m, &s| m.max(s))
}

/// Random `m × n` matrix with roughly `density` of its entries nonzero,
/// values uniform in `[-3, 3]`. Every row and column gets at least one
/// entry.
pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize, density: f64) -> SparseMatrix {
    let mut dense = vec![vec![0.0; n]; m];
    for row in dense.iter_mut() {
        for v in row.iter_mut() {
            if rng.random::<f64>() < density {
                *v = nonzero(rng);
            }
        }
    }
    for (i, row) in dense.iter_mut().enumerate() {
        if row.iter().all(|v| *v == 0.0) && n > 0 {
            row[(i + rng.random_range(0..n)) % n] = nonzero(rng);
        }
    }
    for j in 0..n {
        if m > 0 && dense.iter().all(|r| r[j] == 0.0) {
            let i = rng.random_range(0..m);
            dense[i][j] = nonzero(rng);
        }
    }
    let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
    SparseMatrix::from_dense(&rows).expect("generated entries are finite")
}

fn nonzero<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random_range(-3.0..3.0);
        if v.abs() > 0.1 {
            return v;
        }
    }
}

pub fn random_vec<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Feasible and bounded `min cᵀx, Ax = b, x ≥ 0`: `b = A x₀` with `x₀ ≥ 0`
/// and `c = Aᵀy₀ + s₀` with `s₀ > 0`. Some coordinates of `x₀` are zeroed so
/// the optimum is not always interior to the generating point.
pub fn random_feasible_lp<R: Rng>(rng: &mut R, m: usize, n: usize, density: f64) -> LpProblem {
    let a = random_matrix(rng, m, n, density);
    let x0: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random_range(0.0..2.0)
            }
        })
        .collect();
    let y0 = random_vec(rng, m, -1.0, 1.0);
    let s0 = random_vec(rng, n, 0.1, 2.0);
    let b = dense_matvec(&a, &x0);
    let aty = dense_matvec_t(&a, &y0);
    let c = aty.iter().zip(&s0).map(|(a, s)| a + s).collect();
    LpProblem::new(c, b, a).expect("dimensions agree")
}

/// Dense `Ax` over all entries in row-major order.
pub fn dense_matvec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let d = a.to_dense();
    d.iter()
        .map(|row| {
            let mut s = 0.0;
            for (v, xj) in row.iter().zip(x) {
                s += v * xj;
            }
            s
        })
        .collect()
}

/// Dense `Aᵀy` over all entries, column by column.
pub fn dense_matvec_t(a: &SparseMatrix, y: &[f64]) -> Vec<f64> {
    let d = a.to_dense();
    (0..a.ncols())
        .map(|j| {
            let mut s = 0.0;
            for (row, yi) in d.iter().zip(y) {
                s += row[j] * yi;
            }
            s
        })
        .collect()
}

/// One plain preconditioned step
/// `x⁺ = max(0, x − τ(c − Aᵀλ))`, `λ⁺ = λ + σ(b − A(2x⁺ − x))`.
pub fn plain_step(p: &LpProblem, x: &[f64], lam: &[f64], tau: &[f64], sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let atl = dense_matvec_t(&p.a, lam);
    let mut xn = vec![0.0; x.len()];
    for j in 0..x.len() {
        let v = x[j] - tau[j] * (p.c[j] - atl[j]);
        xn[j] = if v > 0.0 { v } else { 0.0 };
    }
    let z: Vec<f64> = (0..x.len()).map(|j| 2.0 * xn[j] - x[j]).collect();
    let az = dense_matvec(&p.a, &z);
    let mut ln = vec![0.0; lam.len()];
    for i in 0..lam.len() {
        ln[i] = lam[i] + sigma[i] * (p.b[i] - az[i]);
    }
    (xn, ln)
}

/// Result of exhaustive vertex enumeration.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

fn subsets(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for j in start..n {
            if n - j < k - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), &mut f);
}

/// Optimum of `min cᵀx, Ax = b, x ≥ 0` by enumerating basic solutions.
///
/// Rows are first reduced to a maximal independent set (dropping rows that
/// are consistent combinations of others). Assumes the LP is bounded, as
/// the generators guarantee.
pub fn standard_form_oracle(p: &LpProblem) -> Oracle {
    let a = to_nalgebra(&p.a);
    let b = DVector::from_column_slice(&p.b);
    let n = p.num_cols();

    let mut keep: Vec<usize> = Vec::new();
    for i in 0..p.num_rows() {
        let mut trial = keep.clone();
        trial.push(i);
        let sub = a.select_rows(&trial);
        if sub.rank(1e-9) == trial.len() {
            keep = trial;
        }
    }
    let a = a.select_rows(&keep);
    let b = b.select_rows(&keep);
    let m = keep.len();
    if m == 0 {
        // only constraint is x ≥ 0 with c ≥ 0 for boundedness
        let x = vec![0.0; n];
        return if dense_matvec(&p.a, &x)
            .iter()
            .zip(&p.b)
            .all(|(l, r)| (l - r).abs() < 1e-9)
        {
            Oracle::Optimal { objective: 0.0, x }
        } else {
            Oracle::Infeasible
        };
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    subsets(n, m, |cols| {
        let basis = a.select_columns(cols);
        let lu = basis.clone().full_piv_lu();
        if !lu.is_invertible() || basis.determinant().abs() < 1e-10 {
            return;
        }
        let Some(xb) = lu.solve(&b) else { return };
        if xb.iter().any(|v| *v < -1e-9) {
            return;
        }
        let mut x = vec![0.0; n];
        for (k, &j) in cols.iter().enumerate() {
            x[j] = xb[k].max(0.0);
        }
        let obj: f64 = x.iter().zip(&p.c).map(|(x, c)| x * c).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x));
        }
    });
    match best {
        Some((objective, x)) => Oracle::Optimal { objective, x },
        None => Oracle::Infeasible,
    }
}

/// Optimum of a general-form LP with finite bounds on every variable by
/// enumerating vertices: every choice of `n` linearly independent active
/// constraints among rows and bounds.
pub fn general_form_oracle(gp: &GeneralLp) -> Oracle {
    let n = gp.num_cols();
    // each candidate active constraint as (coefficients, rhs)
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    let dense = gp.matrix.to_dense();
    for (i, row) in dense.iter().enumerate() {
        cons.push((row.clone(), gp.rhs[i]));
    }
    // dependent equality rows would make every active set singular; the
    // feasibility check below still sees all of them
    let mut eq_rows: Vec<usize> = Vec::new();
    for i in (0..gp.num_rows()).filter(|&i| gp.senses[i] == RowSense::Eq) {
        let mut trial = eq_rows.clone();
        trial.push(i);
        let sub = DMatrix::from_fn(trial.len(), n, |r, c| dense[trial[r]][c]);
        if sub.rank(1e-9) == trial.len() {
            eq_rows = trial;
        }
    }
    let ineq_rows: Vec<usize> = (0..gp.num_rows()).filter(|&i| gp.senses[i] != RowSense::Eq).collect();
    let mut pool: Vec<usize> = ineq_rows;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if gp.lower[j].is_finite() {
            cons.push((e.clone(), gp.lower[j]));
            pool.push(cons.len() - 1);
        }
        if gp.upper[j].is_finite() {
            cons.push((e, gp.upper[j]));
            pool.push(cons.len() - 1);
        }
    }
    if n < eq_rows.len() {
        return Oracle::Infeasible;
    }
    let free = n - eq_rows.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    subsets(pool.len(), free, |pick| {
        let active: Vec<usize> = eq_rows.iter().copied().chain(pick.iter().map(|&k| pool[k])).collect();
        let mat = DMatrix::from_fn(n, n, |r, c| cons[active[r]].0[c]);
        let rhs = DVector::from_fn(n, |r, _| cons[active[r]].1);
        let lu = mat.full_piv_lu();
        if !lu.is_invertible() {
            return;
        }
        let Some(x) = lu.solve(&rhs) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        match gp.max_violation(&x) {
            Ok(v) if v <= 1e-8 => {}
            _ => return,
        }
        let obj = gp.objective_value(&x);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x));
        }
    });
    match best {
        Some((objective, x)) => Oracle::Optimal { objective, x },
        None => Oracle::Infeasible,
    }
}

/// Small random general-form LP with finite bounds and a known feasible
/// point, mixing all three row senses.
pub fn random_general_lp<R: Rng>(rng: &mut R, m: usize, n: usize) -> GeneralLp {
    let a = random_matrix(rng, m, n, 0.7);
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..0.5)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.5..3.0)).collect();
    let x0: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| rng.random_range(*l..*u))
        .collect();
    let ax0 = dense_matvec(&a, &x0);
    let mut senses = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for v in ax0 {
        match rng.random_range(0..3) {
            0 => {
                senses.push(RowSense::Le);
                rhs.push(v + rng.random_range(0.0..1.0));
            }
            1 => {
                senses.push(RowSense::Ge);
                rhs.push(v - rng.random_range(0.0..1.0));
            }
            _ => {
                senses.push(RowSense::Eq);
                rhs.push(v);
            }
        }
    }
    GeneralLp {
        name: String::from("random"),
        objective: random_vec(rng, n, -2.0, 2.0),
        objective_offset: 0.0,
        matrix: a,
        senses,
        rhs,
        lower,
        upper,
        row_names: (0..m).map(|i| format!("R{i}")).collect(),
        col_names: (0..n).map(|j| format!("C{j}")).collect(),
    }
}

/// Relative difference `|a − b| / max(1, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Worst relative errors between the analytic online gradients and central
/// finite differences of the feedback losses at a random point of a random
/// instance. Coordinates whose projection switches within the stencil are
/// skipped. Returns `(primal, dual, coordinates checked)`.
pub fn gradient_fd_errors(seed: u64) -> (f64, f64, usize) {
    use olpdhg_core::online::{dual_grad, dual_loss, primal_grad, primal_loss};
    use olpdhg_core::pdhg::{pdhg_step, SaddleState};
    use olpdhg_core::precond::DiagPreconditioner;

    const H: f64 = 1e-4;
    let mut rng = rng(seed);
    let m = rng.random_range(1..=6);
    let n = rng.random_range(1..=8);
    let p = random_feasible_lp(&mut rng, m, n, 0.7);
    let x = random_vec(&mut rng, n, 0.0, 2.0);
    let lam = random_vec(&mut rng, m, -1.0, 1.0);
    let tau = random_vec(&mut rng, n, 0.05, 1.0);
    let sigma = random_vec(&mut rng, m, 0.05, 1.0);
    let eta = rng.random_range(0.3..2.0);
    let omega = rng.random_range(0.3..2.0);
    let st = SaddleState::at(&p, x.clone(), lam.clone()).unwrap();
    let step = |t: &[f64], s: &[f64]| {
        let pre = DiagPreconditioner {
            tau: t.to_vec(),
            sigma: s.to_vec(),
        };
        pdhg_step(&p, &st, &pre, eta, omega).unwrap()
    };
    let rel = |fd: f64, g: f64| (fd - g).abs() / g.abs().max(1e-6);

    let base = step(&tau, &sigma);
    let gp = primal_grad(&p, &lam, &base.x_half, eta, omega).unwrap();
    let gd = dual_grad(&p, &x, &base.x, eta, omega).unwrap();
    let (mut ep, mut ed, mut checked) = (0.0f64, 0.0f64, 0);
    for j in 0..n {
        let (mut up, mut dn) = (tau.clone(), tau.clone());
        up[j] += H;
        dn[j] -= H;
        let (su, sd) = (step(&up, &sigma), step(&dn, &sigma));
        let (hu, hd) = (su.x_half[j], sd.x_half[j]);
        if (hu > 0.0) != (hd > 0.0) || hu == 0.0 || hd == 0.0 {
            continue;
        }
        let fd = (primal_loss(&p, &x, &su.x, &lam).unwrap() - primal_loss(&p, &x, &sd.x, &lam).unwrap()) / (2.0 * H);
        ep = ep.max(rel(fd, gp[j]));
        checked += 1;
    }
    for i in 0..m {
        let (mut up, mut dn) = (sigma.clone(), sigma.clone());
        up[i] += H;
        dn[i] -= H;
        let lu = step(&tau, &up).lam;
        let ld = step(&tau, &dn).lam;
        let fd = (dual_loss(&p, &x, &lam, &lu).unwrap() - dual_loss(&p, &x, &lam, &ld).unwrap()) / (2.0 * H);
        ed = ed.max(rel(fd, gd[i]));
        checked += 1;
    }
    (ep, ed, checked)
}
