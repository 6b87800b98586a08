//! The preconditioned PDHG iteration for
//! `min_{x ≥ 0} max_λ L(x, λ) = cᵀx − λᵀAx + bᵀλ`.
//!
//! One step with preconditioners `T = Diag(τ)`, `Σ = Diag(σ)`, step size `η`
//! and primal weight `ω` is
//!
//! ```text
//! x⁺ = proj_{≥0}(x − (η/ω) T (c − Aᵀλ))
//! λ⁺ = λ + ηω Σ (b − A(2x⁺ − x))
//! ```
//!
//! With `η = ω = 1` this is the plain preconditioned iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::lp::LpProblem;
use crate::precond::DiagPreconditioner;
use crate::vecops;

/// Weighted running sums of iterates (and their matrix products) since the
/// last restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverage {
    pub x_sum: Vec<f64>,
    pub lam_sum: Vec<f64>,
    pub ax_sum: Vec<f64>,
    pub atl_sum: Vec<f64>,
    pub weight: f64,
}

impl RunningAverage {
    pub fn new(n: usize, m: usize) -> Self {
        RunningAverage {
            x_sum: vec![0.0; n],
            lam_sum: vec![0.0; m],
            ax_sum: vec![0.0; m],
            atl_sum: vec![0.0; n],
            weight: 0.0,
        }
    }

    pub fn reset(&mut self) {
        for v in [&mut self.x_sum, &mut self.lam_sum, &mut self.ax_sum, &mut self.atl_sum] {
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        self.weight = 0.0;
    }

    fn add(&mut self, w: f64, x: &[f64], lam: &[f64], ax: &[f64], atl: &[f64]) {
        axpy(&mut self.x_sum, w, x);
        axpy(&mut self.lam_sum, w, lam);
        axpy(&mut self.ax_sum, w, ax);
        axpy(&mut self.atl_sum, w, atl);
        self.weight += w;
    }

    pub fn is_empty(&self) -> bool {
        self.weight == 0.0
    }

    pub fn x(&self) -> Vec<f64> {
        self.mean(&self.x_sum)
    }

    pub fn lam(&self) -> Vec<f64> {
        self.mean(&self.lam_sum)
    }

    pub fn ax(&self) -> Vec<f64> {
        self.mean(&self.ax_sum)
    }

    pub fn atl(&self) -> Vec<f64> {
        self.mean(&self.atl_sum)
    }

    fn mean(&self, sum: &[f64]) -> Vec<f64> {
        if self.weight == 0.0 {
            return sum.to_vec();
        }
        sum.iter().map(|s| s / self.weight).collect()
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Current primal/dual iterate with cached `Ax`, `Aᵀλ` and the running
/// average since the last restart.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    pub x: Vec<f64>,
    pub lam: Vec<f64>,
    /// Number of accepted steps so far.
    pub k: usize,
    pub ax: Vec<f64>,
    pub atl: Vec<f64>,
    pub avg: RunningAverage,
}

impl SaddleState {
    /// `(x, λ) = (0, 0)`.
    pub fn zeros(p: &LpProblem) -> Self {
        let (m, n) = (p.num_rows(), p.num_cols());
        SaddleState {
            x: vec![0.0; n],
            lam: vec![0.0; m],
            k: 0,
            ax: vec![0.0; m],
            atl: vec![0.0; n],
            avg: RunningAverage::new(n, m),
        }
    }

    /// State at a given point, computing both products fresh.
    pub fn at(p: &LpProblem, x: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        let ax = p.a.matvec(&x)?;
        let atl = p.a.matvec_transpose(&lam)?;
        Ok(SaddleState {
            avg: RunningAverage::new(x.len(), lam.len()),
            x,
            lam,
            k: 0,
            ax,
            atl,
        })
    }

    /// Moves to the result of `step`, adding the new iterate to the running
    /// average with weight `step.eta`.
    pub fn accept(&mut self, step: PdhgStep) {
        self.avg.add(step.eta, &step.x, &step.lam, &step.ax, &step.atl);
        self.x = step.x;
        self.lam = step.lam;
        self.ax = step.ax;
        self.atl = step.atl;
        self.k += 1;
    }

    /// Largest relative gap between the cached products and fresh ones.
    pub fn cache_error(&self, p: &LpProblem) -> Result<f64> {
        let ax = p.a.matvec(&self.x)?;
        let atl = p.a.matvec_transpose(&self.lam)?;
        let rel = |cached: &[f64], fresh: &[f64]| {
            let scale = vecops::norm(fresh).max(1.0);
            libm::sqrt(vecops::dist_sq(cached, fresh)) / scale
        };
        Ok(rel(&self.ax, &ax).max(rel(&self.atl, &atl)))
    }
}

/// Result of one PDHG step, before it is accepted into a [`SaddleState`].
#[derive(Debug, Clone, PartialEq)]
pub struct PdhgStep {
    pub x: Vec<f64>,
    pub lam: Vec<f64>,
    /// Pre-projection point `x − (η/ω) T (c − Aᵀλ)`.
    pub x_half: Vec<f64>,
    /// `A(2x⁺ − x)`
    pub a_extrap: Vec<f64>,
    /// `A x⁺`, derived as `(A(2x⁺ − x) + Ax) / 2`.
    pub ax: Vec<f64>,
    /// `Aᵀ λ⁺`
    pub atl: Vec<f64>,
    pub eta: f64,
    pub omega: f64,
}

/// `L(x, λ) = cᵀx − λᵀAx + bᵀλ`.
pub fn evaluate_lagrangian(p: &LpProblem, x: &[f64], lam: &[f64]) -> Result<f64> {
    check_len("lagrangian primal point", p.num_cols(), x.len())?;
    check_len("lagrangian dual point", p.num_rows(), lam.len())?;
    if !vecops::all_finite(x) || !vecops::all_finite(lam) {
        return Err(Error::NonFinite {
            context: "lagrangian arguments",
        });
    }
    let ax = p.a.matvec(x)?;
    Ok(vecops::dot(&p.c, x) - vecops::dot(lam, &ax) + vecops::dot(&p.b, lam))
}

/// One preconditioned PDHG step from `st`.
pub fn pdhg_step(p: &LpProblem, st: &SaddleState, pre: &DiagPreconditioner, eta: f64, omega: f64) -> Result<PdhgStep> {
    pre.check_dims(p)?;
    check_len("state primal", p.num_cols(), st.x.len())?;
    check_len("state dual", p.num_rows(), st.lam.len())?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
        });
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter {
            name: "omega",
            value: omega,
        });
    }
    let primal_scale = eta / omega;
    let dual_scale = eta * omega;

    let x_half: Vec<f64> =
        st.x.iter()
            .zip(&pre.tau)
            .zip(p.c.iter().zip(&st.atl))
            .map(|((&x, &t), (&c, &atl))| x - (primal_scale * t) * (c - atl))
            .collect();
    let x: Vec<f64> = x_half.iter().map(|&v| v.max(0.0)).collect();
    let extrap: Vec<f64> = x.iter().zip(&st.x).map(|(&xn, &xo)| 2.0 * xn - xo).collect();
    let mut a_extrap = vec![0.0; p.num_rows()];
    p.a.matvec_into(&extrap, &mut a_extrap);

    let lam: Vec<f64> = st
        .lam
        .iter()
        .zip(&pre.sigma)
        .zip(p.b.iter().zip(&a_extrap))
        .map(|((&l, &s), (&b, &az))| l + (dual_scale * s) * (b - az))
        .collect();
    let mut atl = vec![0.0; p.num_cols()];
    p.a.matvec_transpose_into(&lam, &mut atl);
    let ax: Vec<f64> = a_extrap.iter().zip(&st.ax).map(|(z, o)| 0.5 * (z + o)).collect();

    if !vecops::all_finite(&x_half) || !vecops::all_finite(&lam) || !vecops::all_finite(&atl) {
        return Err(Error::NonFinite { context: "pdhg step" });
    }
    Ok(PdhgStep {
        x,
        lam,
        x_half,
        a_extrap,
        ax,
        atl,
        eta,
        omega,
    })
}

/// Absolute and relative optimality measures of a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residuals {
    /// `‖Ax − b‖`
    pub primal_res: f64,
    /// `‖(Aᵀλ − c)₊‖`
    pub dual_res: f64,
    /// `|cᵀx − bᵀλ|`
    pub gap: f64,
    pub rel_primal: f64,
    pub rel_dual: f64,
    pub rel_gap: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
}

impl Residuals {
    /// Euclidean norm of the three relative residuals.
    pub fn kkt(&self) -> f64 {
        libm::sqrt(self.rel_primal * self.rel_primal + self.rel_dual * self.rel_dual + self.rel_gap * self.rel_gap)
    }

    pub fn max_relative(&self) -> f64 {
        self.rel_primal.max(self.rel_dual).max(self.rel_gap)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.primal_res,
            self.dual_res,
            self.gap,
            self.rel_primal,
            self.rel_dual,
            self.rel_gap,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Builds residuals from already computed products `ax = Ax`,
    /// `atl = Aᵀλ`.
    pub fn from_products(
        p: &LpProblem,
        x: &[f64],
        lam: &[f64],
        ax: &[f64],
        atl: &[f64],
        norm_b: f64,
        norm_c: f64,
    ) -> Self {
        let primal_res = libm::sqrt(vecops::dist_sq(ax, &p.b));
        let dual_res = libm::sqrt(
            atl.iter()
                .zip(&p.c)
                .map(|(a, c)| {
                    let v = (a - c).max(0.0);
                    v * v
                })
                .sum(),
        );
        let primal_obj = vecops::dot(&p.c, x);
        let dual_obj = vecops::dot(&p.b, lam);
        let gap = (primal_obj - dual_obj).abs();
        Residuals {
            primal_res,
            dual_res,
            gap,
            rel_primal: primal_res / (1.0 + norm_b),
            rel_dual: dual_res / (1.0 + norm_c),
            rel_gap: gap / (1.0 + primal_obj.abs() + dual_obj.abs()),
            primal_obj,
            dual_obj,
        }
    }
}

pub fn compute_residuals(p: &LpProblem, x: &[f64], lam: &[f64]) -> Result<Residuals> {
    let ax = p.a.matvec(x)?;
    let atl = p.a.matvec_transpose(lam)?;
    Ok(Residuals::from_products(
        p,
        x,
        lam,
        &ax,
        &atl,
        vecops::norm(&p.b),
        vecops::norm(&p.c),
    ))
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Status {
    Optimal,
    IterationLimit,
    TimeLimit,
    NumericalError,
    /// The instance could not be read. Never produced by the solver itself.
    LoadError,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "OPTIMAL",
            Status::IterationLimit => "ITERATION_LIMIT",
            Status::TimeLimit => "TIME_LIMIT",
            Status::NumericalError => "NUMERICAL_ERROR",
            Status::LoadError => "LOAD_ERROR",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        Some(match s {
            "OPTIMAL" => Status::Optimal,
            "ITERATION_LIMIT" => Status::IterationLimit,
            "TIME_LIMIT" => Status::TimeLimit,
            "NUMERICAL_ERROR" => Status::NumericalError,
            "LOAD_ERROR" => Status::LoadError,
            _ => return None,
        })
    }
}

impl core::fmt::Display for Status {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Limits consulted by [`check_termination`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub tolerance: f64,
    pub iteration_limit: usize,
    pub time_limit: f64,
}

/// `Some(status)` when the solve should stop, `None` to continue.
///
/// Optimality takes precedence over the limits, so a point that meets the
/// tolerance exactly at the iteration limit is reported as optimal.
pub fn check_termination(r: &Residuals, limits: &Limits, iterations: usize, elapsed_seconds: f64) -> Option<Status> {
    let rel = [r.rel_primal, r.rel_dual, r.rel_gap];
    if rel.iter().any(|v| v.is_nan()) {
        return Some(Status::NumericalError);
    }
    if rel.iter().all(|&v| v <= limits.tolerance) {
        return Some(Status::Optimal);
    }
    if iterations >= limits.iteration_limit {
        return Some(Status::IterationLimit);
    }
    if elapsed_seconds >= limits.time_limit {
        return Some(Status::TimeLimit);
    }
    None
}
