//! Problem data: general-form LPs as read from files, the standard form
//! `min cᵀx s.t. Ax = b, x ≥ 0` that the solver iterates on, and the
//! reduction between them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMatrix;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RowSense {
    /// `aᵀx ≤ b`
    Le,
    /// `aᵀx = b`
    Eq,
    /// `aᵀx ≥ b`
    Ge,
}

/// An LP with inequality rows and arbitrary variable bounds:
///
/// ```text
/// min  cᵀx + offset
/// s.t. aᵢᵀx (≤ | = | ≥) bᵢ
///      l ≤ x ≤ u
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralLp {
    pub name: String,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub matrix: SparseMatrix,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

impl GeneralLp {
    /// Checks the shape and bound invariants.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.matrix.nrows(), self.matrix.ncols());
        check_len("objective", n, self.objective.len())?;
        check_len("row senses", m, self.senses.len())?;
        check_len("rhs", m, self.rhs.len())?;
        check_len("lower bounds", n, self.lower.len())?;
        check_len("upper bounds", n, self.upper.len())?;
        if !self.row_names.is_empty() {
            check_len("row names", m, self.row_names.len())?;
        }
        if !self.col_names.is_empty() {
            check_len("column names", n, self.col_names.len())?;
        }
        if !vecops::all_finite(&self.objective) || !vecops::all_finite(&self.rhs) {
            return Err(Error::NonFinite {
                context: "objective or rhs",
            });
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::InfeasibleBounds {
                    var: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// Wraps a standard-form problem: all rows equalities, all bounds `[0, ∞)`.
    pub fn from_standard(p: &LpProblem) -> Self {
        let (m, n) = (p.num_rows(), p.num_cols());
        GeneralLp {
            name: String::new(),
            objective: p.c.clone(),
            objective_offset: 0.0,
            matrix: p.a.clone(),
            senses: vec![RowSense::Eq; m],
            rhs: p.b.clone(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            row_names: Vec::new(),
            col_names: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        vecops::dot(&self.objective, x) + self.objective_offset
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matrix.matvec(x)?;
        let mut worst: f64 = 0.0;
        for ((&v, &b), sense) in ax.iter().zip(&self.rhs).zip(&self.senses) {
            let viol = match sense {
                RowSense::Le => (v - b).max(0.0),
                RowSense::Eq => (v - b).abs(),
                RowSense::Ge => (b - v).max(0.0),
            };
            worst = worst.max(viol);
        }
        for ((&xj, &l), &u) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - xj).max(xj - u);
        }
        Ok(worst)
    }
}

/// Standard-form LP `min cᵀx s.t. Ax = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub a: SparseMatrix,
}

impl LpProblem {
    pub fn new(c: Vec<f64>, b: Vec<f64>, a: SparseMatrix) -> Result<Self> {
        check_len("cost vector", a.ncols(), c.len())?;
        check_len("rhs vector", a.nrows(), b.len())?;
        if !vecops::all_finite(&c) || !vecops::all_finite(&b) {
            return Err(Error::NonFinite { context: "cost or rhs" });
        }
        Ok(LpProblem { c, b, a })
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        vecops::dot(&self.c, x)
    }
}

/// How one original variable is represented in the standard form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarTransform {
    /// `x = shift + x_std[col]`.
    Shift { col: usize, shift: f64 },
    /// `x = upper - x_std[col]`, used when only an upper bound is finite.
    Reflect { col: usize, upper: f64 },
    /// `x = x_std[pos] - x_std[neg]` for a free variable.
    Split { pos: usize, neg: usize },
}

/// Bookkeeping needed to map standard-form points back to the original
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    pub vars: Vec<VarTransform>,
    /// Slack or surplus column introduced for each original row, if any.
    pub row_slacks: Vec<Option<usize>>,
    /// `(original variable, standard-form row)` for every upper-bound row.
    pub bound_rows: Vec<(usize, usize)>,
    /// Constant added to the standard-form objective to recover the original one.
    pub objective_offset: f64,
    pub num_std_cols: usize,
}

impl VarMap {
    pub fn identity(n: usize) -> Self {
        VarMap {
            vars: (0..n).map(|col| VarTransform::Shift { col, shift: 0.0 }).collect(),
            row_slacks: Vec::new(),
            bound_rows: Vec::new(),
            objective_offset: 0.0,
            num_std_cols: n,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.objective_offset == 0.0
            && self.num_std_cols == self.vars.len()
            && self.bound_rows.is_empty()
            && self.row_slacks.iter().all(Option::is_none)
            && self
                .vars
                .iter()
                .enumerate()
                .all(|(j, t)| *t == VarTransform::Shift { col: j, shift: 0.0 })
    }

    pub fn num_original_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn recover_solution(&self, x_std: &[f64]) -> Result<Vec<f64>> {
        check_len("standard-form solution", self.num_std_cols, x_std.len())?;
        Ok(self
            .vars
            .iter()
            .map(|t| match *t {
                VarTransform::Shift { col, shift } => shift + x_std[col],
                VarTransform::Reflect { col, upper } => upper - x_std[col],
                VarTransform::Split { pos, neg } => x_std[pos] - x_std[neg],
            })
            .collect())
    }

    pub fn recover_objective(&self, std_objective: f64) -> f64 {
        std_objective + self.objective_offset
    }
}

/// Free-function form of [`VarMap::recover_solution`].
pub fn recover_solution(map: &VarMap, x_std: &[f64]) -> Result<Vec<f64>> {
    map.recover_solution(x_std)
}

/// Reduces a general LP to standard form.
///
/// Columns are laid out as: one column per original variable (in order),
/// then negative parts of free variables, then row slacks, then upper-bound
/// slacks. Rows are the original rows followed by one row per variable with
/// two finite bounds.
pub fn to_standard_form(gp: &GeneralLp) -> Result<(LpProblem, VarMap)> {
    gp.validate()?;
    let m = gp.num_rows();
    let n = gp.num_cols();

    let mut vars = Vec::with_capacity(n);
    let mut c = vec![0.0; n];
    let mut b = gp.rhs.clone();
    let mut offset = gp.objective_offset;
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(gp.matrix.nnz() + m);
    let mut next_col = n;
    let mut neg_parts = Vec::new();
    let mut needs_bound_row = Vec::new();

    for j in 0..n {
        let (l, u, cj) = (gp.lower[j], gp.upper[j], gp.objective[j]);
        let transform = if l.is_finite() {
            VarTransform::Shift { col: j, shift: l }
        } else if u.is_finite() {
            VarTransform::Reflect { col: j, upper: u }
        } else {
            let neg = next_col;
            next_col += 1;
            neg_parts.push((j, neg));
            VarTransform::Split { pos: j, neg }
        };
        match transform {
            VarTransform::Shift { shift, .. } => {
                c[j] = cj;
                offset += cj * shift;
                for (i, a) in gp.matrix.col(j) {
                    trip.push((i, j, a));
                    b[i] -= a * shift;
                }
                if u.is_finite() {
                    needs_bound_row.push((j, u - l));
                }
            }
            VarTransform::Reflect { upper, .. } => {
                c[j] = -cj;
                offset += cj * upper;
                for (i, a) in gp.matrix.col(j) {
                    trip.push((i, j, -a));
                    b[i] -= a * upper;
                }
            }
            VarTransform::Split { .. } => {
                c[j] = cj;
                for (i, a) in gp.matrix.col(j) {
                    trip.push((i, j, a));
                }
            }
        }
        vars.push(transform);
    }
    for &(j, neg) in &neg_parts {
        debug_assert_eq!(neg, c.len());
        c.push(-gp.objective[j]);
        for (i, a) in gp.matrix.col(j) {
            trip.push((i, neg, -a));
        }
    }

    let mut row_slacks = vec![None; m];
    for (i, sense) in gp.senses.iter().enumerate() {
        let coef = match sense {
            RowSense::Le => 1.0,
            RowSense::Ge => -1.0,
            RowSense::Eq => continue,
        };
        trip.push((i, next_col, coef));
        c.push(0.0);
        row_slacks[i] = Some(next_col);
        next_col += 1;
    }

    let mut bound_rows = Vec::with_capacity(needs_bound_row.len());
    let mut row = m;
    for (j, width) in needs_bound_row {
        // x'_j + s = u - l
        trip.push((row, j, 1.0));
        trip.push((row, next_col, 1.0));
        c.push(0.0);
        b.push(width);
        bound_rows.push((j, row));
        next_col += 1;
        row += 1;
    }

    let a = SparseMatrix::from_triplets(row, next_col, &trip)?;
    let problem = LpProblem::new(c, b, a)?;
    let map = VarMap {
        vars,
        row_slacks,
        bound_rows,
        objective_offset: offset,
        num_std_cols: next_col,
    };
    Ok((problem, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn single_var(lower: f64, upper: f64, sense: RowSense, coef: f64, rhs: f64, cost: f64) -> GeneralLp {
        GeneralLp {
            name: "t".to_string(),
            objective: vec![cost],
            objective_offset: 0.0,
            matrix: SparseMatrix::from_dense(&[&[coef]]).unwrap(),
            senses: vec![sense],
            rhs: vec![rhs],
            lower: vec![lower],
            upper: vec![upper],
            row_names: Vec::new(),
            col_names: Vec::new(),
        }
    }

    #[test]
    fn le_row_gains_slack() {
        // min x s.t. x <= 4, x >= 0
        let gp = single_var(0.0, f64::INFINITY, RowSense::Le, 1.0, 4.0, 1.0);
        let (p, map) = to_standard_form(&gp).unwrap();
        assert_eq!(p.num_cols(), 2);
        assert_eq!(p.c, vec![1.0, 0.0]);
        assert_eq!(p.b, vec![4.0]);
        assert_eq!(p.a.to_dense(), vec![vec![1.0, 1.0]]);
        assert_eq!(map.row_slacks, vec![Some(1)]);
    }

    #[test]
    fn standard_input_is_a_fixed_point() {
        let a = SparseMatrix::from_dense(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, -1.0]]).unwrap();
        let p = LpProblem::new(vec![1.0, -1.0, 2.0], vec![3.0, 1.0], a).unwrap();
        let (q, map) = to_standard_form(&GeneralLp::from_standard(&p)).unwrap();
        assert_eq!(q, p);
        assert!(map.is_identity());
        // and again
        let (r, _) = to_standard_form(&GeneralLp::from_standard(&q)).unwrap();
        assert_eq!(r, p);
    }

    #[test]
    fn free_variable_is_split() {
        let gp = single_var(f64::NEG_INFINITY, f64::INFINITY, RowSense::Eq, 1.0, 1.0, 3.0);
        let (p, map) = to_standard_form(&gp).unwrap();
        assert_eq!(p.c, vec![3.0, -3.0]);
        assert_eq!(p.a.to_dense(), vec![vec![1.0, -1.0]]);
        assert_eq!(map.vars[0], VarTransform::Split { pos: 0, neg: 1 });
    }

    #[test]
    fn bounds_shift_reflect_and_rows() {
        // x in [2, 5], cost 1, row x >= 3
        let gp = single_var(2.0, 5.0, RowSense::Ge, 1.0, 3.0, 1.0);
        let (p, map) = to_standard_form(&gp).unwrap();
        // columns: x', surplus, bound slack; rows: original, bound
        assert_eq!(p.num_cols(), 3);
        assert_eq!(p.num_rows(), 2);
        assert_eq!(p.b, vec![1.0, 3.0]);
        assert_eq!(p.a.to_dense(), vec![vec![1.0, -1.0, 0.0], vec![1.0, 0.0, 1.0]]);
        assert_eq!(map.objective_offset, 2.0);

        let gp = single_var(f64::NEG_INFINITY, 5.0, RowSense::Le, 2.0, 4.0, 1.0);
        let (p, map) = to_standard_form(&gp).unwrap();
        // x = 5 - x', so 2(5 - x') <= 4  ->  -2x' + s = -6
        assert_eq!(p.b, vec![-6.0]);
        assert_eq!(p.a.get(0, 0), -2.0);
        assert_eq!(p.c[0], -1.0);
        assert_eq!(map.recover_solution(&[3.0, 0.0]).unwrap(), vec![2.0]);
        assert_eq!(map.recover_objective(p.objective(&[3.0, 0.0])), 2.0);
    }

    #[test]
    fn infeasible_bounds_rejected() {
        let gp = single_var(3.0, 1.0, RowSense::Eq, 1.0, 1.0, 1.0);
        assert!(matches!(
            to_standard_form(&gp),
            Err(Error::InfeasibleBounds { var: 0, .. })
        ));
    }

    #[test]
    fn recover_examples() {
        assert_eq!(
            VarMap::identity(3).recover_solution(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let split = VarMap {
            vars: vec![VarTransform::Split { pos: 0, neg: 1 }],
            row_slacks: Vec::new(),
            bound_rows: Vec::new(),
            objective_offset: 0.0,
            num_std_cols: 2,
        };
        assert_eq!(split.recover_solution(&[2.0, 0.5]).unwrap(), vec![1.5]);
        let shifted = VarMap {
            vars: vec![VarTransform::Shift { col: 0, shift: 3.0 }],
            row_slacks: Vec::new(),
            bound_rows: Vec::new(),
            objective_offset: 0.0,
            num_std_cols: 1,
        };
        assert_eq!(shifted.recover_solution(&[0.0]).unwrap(), vec![3.0]);
        assert!(shifted.recover_solution(&[0.0, 1.0]).is_err());
    }
}
