//! Diagonal preconditioners and static equilibration.
//!
//! Two kinds of objects live here. A [`DiagPreconditioner`] holds the
//! per-coordinate step sizes `T = Diag(τ)`, `Σ = Diag(σ)` used inside the
//! iteration. A [`ScalingRecord`] holds the row/column factors `D_r`, `D_c`
//! of a static rescaling `Ã = D_r A D_c` applied to the data before
//! iterating.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::lp::LpProblem;
use crate::sparse::{Axis, NormKind, SparseMatrix, SPECTRAL_MAX_ITERS};

/// Product `t·s·‖Ã‖²` that [`safeguard_scalars`] targets.
pub const SAFEGUARD_TARGET: f64 = 0.99;
/// Inflation applied to the power-iteration norm estimate before use.
pub const SPECTRAL_MARGIN: f64 = 1.01;
/// Stopping tolerance of the norm estimate behind [`safeguard_scalars`].
/// Tighter than the estimator's default: power iteration from the all-ones
/// vector can linger near the second singular value, and with a loose
/// tolerance it stops there, well inside the 1% margin.
pub const SAFEGUARD_SPECTRAL_TOL: f64 = 1e-8;
/// Ruiz steps used by default preprocessing.
pub const DEFAULT_RUIZ_ITERS: usize = 10;

/// Nonnegative diagonal primal (`tau`, length n) and dual (`sigma`,
/// length m) step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagPreconditioner {
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DiagPreconditioner {
    pub fn identity(n: usize, m: usize) -> Self {
        Self::uniform(n, m, 1.0, 1.0)
    }

    pub fn uniform(n: usize, m: usize, t: f64, s: f64) -> Self {
        DiagPreconditioner {
            tau: vec![t; n],
            sigma: vec![s; m],
        }
    }

    pub fn check_dims(&self, p: &LpProblem) -> Result<()> {
        check_len("primal preconditioner", p.num_cols(), self.tau.len())?;
        check_len("dual preconditioner", p.num_rows(), self.sigma.len())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.tau.iter().chain(&self.sigma).all(|&v| v >= 0.0)
    }
}

/// Row and column factors of a static rescaling `Ã = D_r A D_c`, plus the
/// scalar step sizes `t`, `s` picked for the scaled matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    /// Diagonal of `D_r` (length m).
    pub row: Vec<f64>,
    /// Diagonal of `D_c` (length n).
    pub col: Vec<f64>,
    pub t: f64,
    pub s: f64,
}

impl ScalingRecord {
    pub fn identity(m: usize, n: usize) -> Self {
        ScalingRecord {
            row: vec![1.0; m],
            col: vec![1.0; n],
            t: 1.0,
            s: 1.0,
        }
    }

    /// Cumulative dual diagonal, `σ = D_r²`.
    pub fn sigma(&self) -> Vec<f64> {
        self.row.iter().map(|d| d * d).collect()
    }

    /// Cumulative primal diagonal, `τ = D_c²`.
    pub fn tau(&self) -> Vec<f64> {
        self.col.iter().map(|d| d * d).collect()
    }

    /// Record for applying `self` first and `then` second.
    pub fn compose(&self, then: &ScalingRecord) -> Result<ScalingRecord> {
        check_len("composed row scaling", self.row.len(), then.row.len())?;
        check_len("composed column scaling", self.col.len(), then.col.len())?;
        Ok(ScalingRecord {
            row: self.row.iter().zip(&then.row).map(|(a, b)| a * b).collect(),
            col: self.col.iter().zip(&then.col).map(|(a, b)| a * b).collect(),
            t: then.t,
            s: then.s,
        })
    }
}

/// Closed-form diagonal step sizes parameterised by `beta ∈ [0, 2]`:
/// `τ_j = 1 / Σ_i |A_ij|^(2-β)` and `σ_i = 1 / Σ_j |A_ij|^β`.
///
/// Empty rows or columns have a zero denominator and get 0.
pub fn pock_chambolle(a: &SparseMatrix, beta: f64) -> Result<DiagPreconditioner> {
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
        });
    }
    let invert = |d: f64| if d > 0.0 { 1.0 / d } else { 0.0 };
    let tau = a
        .axis_norms(Axis::Cols, NormKind::Power(2.0 - beta))
        .into_iter()
        .map(invert)
        .collect();
    let sigma = a
        .axis_norms(Axis::Rows, NormKind::Power(beta))
        .into_iter()
        .map(invert)
        .collect();
    Ok(DiagPreconditioner { tau, sigma })
}

/// Ruiz equilibration for `iters` steps.
///
/// Each step divides every column of the current scaled matrix by the square
/// root of its infinity norm and every row by the square root of its
/// infinity norm, both measured on the same matrix. The cumulative diagonals
/// `τ`, `σ` satisfy `Ã = Σ^{1/2} A T^{1/2}` and are stored as
/// `D_c = √τ`, `D_r = √σ`.
pub fn ruiz(a: &SparseMatrix, iters: usize) -> Result<(ScalingRecord, SparseMatrix)> {
    if iters == 0 {
        return Err(Error::InvalidParameter {
            name: "ruiz iterations",
            value: 0.0,
        });
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut rec = ScalingRecord::identity(m, n);
    let mut scaled = a.clone();
    let mut warned = false;
    for _ in 0..iters {
        let row_max = scaled.axis_norms(Axis::Rows, NormKind::Inf);
        let col_max = scaled.axis_norms(Axis::Cols, NormKind::Inf);
        if !warned && row_max.iter().chain(&col_max).any(|&v| v == 0.0) {
            log::warn!("ruiz: empty row or column, its scaling is left unchanged");
            warned = true;
        }
        let row_step: Vec<f64> = row_max.iter().map(|&v| inv_sqrt_or_one(v)).collect();
        let col_step: Vec<f64> = col_max.iter().map(|&v| inv_sqrt_or_one(v)).collect();
        scaled = scaled.scale(&row_step, &col_step)?;
        rec.row.iter_mut().zip(&row_step).for_each(|(r, f)| *r *= f);
        rec.col.iter_mut().zip(&col_step).for_each(|(c, f)| *c *= f);
    }
    Ok((rec, scaled))
}

/// One simultaneous pass dividing each row and each column by the square
/// root of its l2 norm, both norms taken on the input matrix.
pub fn l2_rescale(a: &SparseMatrix) -> (ScalingRecord, SparseMatrix) {
    let row_norm = a.axis_norms(Axis::Rows, NormKind::L2);
    let col_norm = a.axis_norms(Axis::Cols, NormKind::L2);
    if row_norm.iter().chain(&col_norm).any(|&v| v == 0.0) {
        log::warn!("l2 rescaling: empty row or column left untouched");
    }
    let row: Vec<f64> = row_norm.iter().map(|&v| inv_sqrt_or_one(v)).collect();
    let col: Vec<f64> = col_norm.iter().map(|&v| inv_sqrt_or_one(v)).collect();
    let scaled = a.scale(&row, &col).expect("factor lengths come from the matrix");
    (
        ScalingRecord {
            row,
            col,
            t: 1.0,
            s: 1.0,
        },
        scaled,
    )
}

fn inv_sqrt_or_one(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / libm::sqrt(v)
    } else {
        1.0
    }
}

/// Scalars `t`, `s` with `t / s = ratio` and
/// `t·s·(1.01·‖Ã‖₂)² = 0.99`, where `‖Ã‖₂` comes from power iteration.
pub fn safeguard_scalars(a_scaled: &SparseMatrix, ratio: f64) -> Result<(f64, f64)> {
    let norm = a_scaled.estimate_spectral_norm(SPECTRAL_MAX_ITERS, SAFEGUARD_SPECTRAL_TOL);
    safeguard_from_norm(norm, ratio)
}

/// As [`safeguard_scalars`] for an already estimated norm.
pub fn safeguard_from_norm(norm_estimate: f64, ratio: f64) -> Result<(f64, f64)> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidParameter {
            name: "step ratio",
            value: ratio,
        });
    }
    if norm_estimate == 0.0 {
        return Ok((1.0, 1.0));
    }
    let inflated = SPECTRAL_MARGIN * norm_estimate;
    let s = libm::sqrt(SAFEGUARD_TARGET / ratio) / inflated;
    Ok((ratio * s, s))
}

/// A problem rescaled as `Ã = D_r A D_c`, `b̃ = D_r b`, `c̃ = D_c c`, with the
/// factors kept so points can be mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProblem {
    pub problem: LpProblem,
    pub record: ScalingRecord,
}

impl ScaledProblem {
    /// `x = D_c x̃`
    pub fn unscale_primal(&self, x_scaled: &[f64]) -> Vec<f64> {
        x_scaled.iter().zip(&self.record.col).map(|(x, d)| x * d).collect()
    }

    /// `λ = D_r λ̃`
    pub fn unscale_dual(&self, lam_scaled: &[f64]) -> Vec<f64> {
        lam_scaled.iter().zip(&self.record.row).map(|(l, d)| l * d).collect()
    }

    pub fn scale_primal(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.record.col).map(|(x, d)| x / d).collect()
    }

    pub fn scale_dual(&self, lam: &[f64]) -> Vec<f64> {
        lam.iter().zip(&self.record.row).map(|(l, d)| l / d).collect()
    }
}

pub fn apply_scaling(p: &LpProblem, rec: &ScalingRecord) -> Result<ScaledProblem> {
    check_len("row scaling", p.num_rows(), rec.row.len())?;
    check_len("column scaling", p.num_cols(), rec.col.len())?;
    if rec.row.iter().chain(&rec.col).any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "scaling factor",
            value: rec
                .row
                .iter()
                .chain(&rec.col)
                .copied()
                .find(|d| !(*d > 0.0) || !d.is_finite())
                .unwrap_or(f64::NAN),
        });
    }
    let a = p.a.scale(&rec.row, &rec.col)?;
    let b = p.b.iter().zip(&rec.row).map(|(b, d)| b * d).collect();
    let c = p.c.iter().zip(&rec.col).map(|(c, d)| c * d).collect();
    Ok(ScaledProblem {
        problem: LpProblem::new(c, b, a)?,
        record: rec.clone(),
    })
}

/// Static preprocessing applied before iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum StaticScaling {
    None,
    Ruiz {
        iters: usize,
    },
    /// Ruiz followed by one l2 pass.
    RuizL2 {
        iters: usize,
    },
    /// Pock–Chambolle diagonals used as data scaling (`D_c = √τ`, `D_r = √σ`).
    PockChambolle {
        beta: f64,
    },
}

impl Default for StaticScaling {
    fn default() -> Self {
        StaticScaling::RuizL2 {
            iters: DEFAULT_RUIZ_ITERS,
        }
    }
}

/// Row/column factors for `choice`; `t` and `s` are left at 1.
pub fn static_scaling(a: &SparseMatrix, choice: StaticScaling) -> Result<ScalingRecord> {
    let (m, n) = (a.nrows(), a.ncols());
    match choice {
        StaticScaling::None => Ok(ScalingRecord::identity(m, n)),
        StaticScaling::Ruiz { iters } => Ok(ruiz(a, iters)?.0),
        StaticScaling::RuizL2 { iters } => {
            let (r, scaled) = ruiz(a, iters)?;
            let (l2, _) = l2_rescale(&scaled);
            r.compose(&l2)
        }
        StaticScaling::PockChambolle { beta } => {
            let pc = pock_chambolle(a, beta)?;
            let root = |v: &f64| if *v > 0.0 { libm::sqrt(*v) } else { 1.0 };
            Ok(ScalingRecord {
                row: pc.sigma.iter().map(root).collect(),
                col: pc.tau.iter().map(root).collect(),
                t: 1.0,
                s: 1.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pock_chambolle_examples() {
        let a = SparseMatrix::from_dense(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let pc = pock_chambolle(&a, 1.0).unwrap();
        assert_eq!(pc.tau, vec![1.0 / 4.0, 1.0 / 6.0]);
        assert_eq!(pc.sigma, vec![1.0 / 3.0, 1.0 / 7.0]);

        for beta in [0.0, 0.5, 1.0, 2.0] {
            let pc = pock_chambolle(&SparseMatrix::identity(4), beta).unwrap();
            assert_eq!(pc, DiagPreconditioner::identity(4, 4));
        }

        let pc = pock_chambolle(&SparseMatrix::from_dense(&[&[2.0]]).unwrap(), 0.0).unwrap();
        assert_eq!(pc.tau, vec![0.25]);
        assert_eq!(pc.sigma, vec![1.0]);
    }

    #[test]
    fn pock_chambolle_rejects_beta_and_zeroes_empty_lines() {
        let a = SparseMatrix::from_dense(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert!(pock_chambolle(&a, 2.5).is_err());
        assert!(pock_chambolle(&a, -0.1).is_err());
        let pc = pock_chambolle(&a, 1.0).unwrap();
        assert_eq!(pc.tau, vec![1.0, 0.0]);
        assert_eq!(pc.sigma, vec![1.0, 0.0]);
    }

    #[test]
    fn ruiz_single_step_by_hand() {
        let a = SparseMatrix::from_dense(&[&[4.0, 0.0], &[0.0, 1.0]]).unwrap();
        let (rec, scaled) = ruiz(&a, 1).unwrap();
        assert_eq!(rec.tau(), vec![0.25, 1.0]);
        assert_eq!(rec.sigma(), vec![0.25, 1.0]);
        assert_eq!(scaled.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn ruiz_fixed_point() {
        let a = SparseMatrix::from_dense(&[&[1.0, -0.5], &[0.25, -1.0]]).unwrap();
        let (rec, scaled) = ruiz(&a, 10).unwrap();
        assert_eq!(rec, ScalingRecord::identity(2, 2));
        assert_eq!(scaled, a);
    }

    #[test]
    fn ruiz_leaves_empty_row_alone() {
        let a = SparseMatrix::from_dense(&[&[4.0, 1.0], &[0.0, 0.0]]).unwrap();
        let (rec, _) = ruiz(&a, 3).unwrap();
        assert_eq!(rec.row[1], 1.0);
        assert!(ruiz(&a, 0).is_err());
    }

    #[test]
    fn l2_examples() {
        let (rec, scaled) = l2_rescale(&SparseMatrix::identity(3));
        assert_eq!(rec, ScalingRecord::identity(3, 3));
        assert_eq!(scaled, SparseMatrix::identity(3));

        // row norm 5, column norms 3 and 4, all taken on the input
        let a = SparseMatrix::from_dense(&[&[3.0, 4.0]]).unwrap();
        let (rec, scaled) = l2_rescale(&a);
        let r = 1.0 / libm::sqrt(5.0);
        let expect = [3.0 * r / libm::sqrt(3.0), 4.0 * r / libm::sqrt(4.0)];
        assert_eq!(rec.row, vec![r]);
        for (got, want) in scaled.row(0).map(|(_, v)| v).zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }

        let z = SparseMatrix::from_dense(&[&[2.0, 0.0], &[0.0, 0.0]]).unwrap();
        let (rec, _) = l2_rescale(&z);
        assert_eq!(rec.row[1], 1.0);
        assert_eq!(rec.col[1], 1.0);
    }

    #[test]
    fn safeguard_closed_form() {
        let (t, s) = safeguard_from_norm(1.0, 1.0).unwrap();
        let expect = libm::sqrt(0.99) / 1.01;
        assert!((t - expect).abs() < 1e-15 && (s - expect).abs() < 1e-15);
        assert!((t * s * 1.01 * 1.01 - 0.99).abs() < 1e-15);

        let (t, s) = safeguard_scalars(&SparseMatrix::identity(4), 1.0).unwrap();
        assert!((t - expect).abs() < 1e-12 && (s - expect).abs() < 1e-12);

        let (t, s) = safeguard_from_norm(2.5, 4.0).unwrap();
        assert!((t / s - 4.0).abs() < 1e-15);
        assert!(t * s * (1.01 * 2.5) * (1.01 * 2.5) < 1.0);

        assert_eq!(safeguard_scalars(&SparseMatrix::zeros(2, 2), 1.0).unwrap(), (1.0, 1.0));
        assert!(safeguard_from_norm(1.0, 0.0).is_err());
    }

    #[test]
    fn apply_scaling_examples() {
        let a = SparseMatrix::from_dense(&[&[2.0]]).unwrap();
        let p = LpProblem::new(vec![4.0], vec![2.0], a).unwrap();
        let same = apply_scaling(&p, &ScalingRecord::identity(1, 1)).unwrap();
        assert_eq!(same.problem, p);

        let rec = ScalingRecord {
            row: vec![0.5],
            col: vec![1.0],
            t: 1.0,
            s: 1.0,
        };
        let sp = apply_scaling(&p, &rec).unwrap();
        assert_eq!(sp.problem.a.to_dense(), vec![vec![1.0]]);
        assert_eq!(sp.problem.b, vec![1.0]);
        assert_eq!(sp.problem.c, vec![4.0]);
        assert_eq!(sp.unscale_dual(&[3.0]), vec![1.5]);
        assert_eq!(sp.scale_dual(&[1.5]), vec![3.0]);

        let bad = ScalingRecord {
            row: vec![0.0],
            col: vec![1.0],
            t: 1.0,
            s: 1.0,
        };
        assert!(apply_scaling(&p, &bad).is_err());
        assert!(apply_scaling(&p, &ScalingRecord::identity(2, 1)).is_err());
    }

    #[test]
    fn static_choices_compose() {
        let a = SparseMatrix::from_dense(&[&[4.0, 1.0], &[0.5, 2.0]]).unwrap();
        let rec = static_scaling(&a, StaticScaling::default()).unwrap();
        let (r, scaled) = ruiz(&a, DEFAULT_RUIZ_ITERS).unwrap();
        let (l2, _) = l2_rescale(&scaled);
        for i in 0..2 {
            assert_eq!(rec.row[i], r.row[i] * l2.row[i]);
            assert_eq!(rec.col[i], r.col[i] * l2.col[i]);
        }
        assert_eq!(
            static_scaling(&a, StaticScaling::None).unwrap(),
            ScalingRecord::identity(2, 2)
        );
    }
}
