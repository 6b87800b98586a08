//! Online learning of the diagonal preconditioners.
//!
//! After each PDHG step the primal and dual preconditioners receive the
//! change in the Lagrangian caused by their half of the step as a loss:
//!
//! ```text
//! ℓᵖ(T) = L(x⁺(T), λ) − L(x, λ)
//! ℓᵈ(Σ) = L(x, λ) − L(x, λ⁺(Σ))
//! ```
//!
//! Restricted to diagonals the gradients are coordinate-wise products of
//! residual vectors, so an update costs a few vector operations:
//!
//! ```text
//! ∇ℓᵖ = −(η/ω) (c − Aᵀλ)² ∘ 𝕀(x^{k+½} ≥ 0)
//! ∇ℓᵈ = −ηω (b − Ax) ∘ (b − A(2x⁺ − x))
//! ```
//!
//! Preconditioners then take a projected (onto the nonnegative orthant)
//! online gradient step, scheduled by AdaGrad or a fixed rate, once every
//! `phi` iterations.

use alloc::vec::Vec;

use crate::error::{check_len, Result};
use crate::lp::LpProblem;
use crate::pdhg::{evaluate_lagrangian, pdhg_step, PdhgStep, SaddleState};
use crate::precond::DiagPreconditioner;
use crate::vecops;

/// Squared norms below this are treated as zero when normalising.
pub const NORMALIZE_GUARD: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scheduler {
    /// Per-coordinate step `α / √(G + ε)` with `G` the summed squared gradients.
    Adagrad,
    /// Constant step `α`.
    Fixed,
}

/// Primal point at which the dual feedback loss is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DualAnchor {
    /// `x^k`; the gradient is `−ηω (b − Ax^k) ∘ (b − A(2x⁺ − x^k))`.
    Current,
    /// `x^{k+1}`; the first factor becomes `b − Ax^{k+1}`.
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OnlineConfig {
    /// Online learning rate `α`. Zero disables learning.
    pub lr: f64,
    /// Update once every `phi` iterations.
    pub phi: usize,
    /// Divide the gradients by `‖c − Aᵀλ‖²` and `‖b − Ax‖²`.
    pub normalize: bool,
    pub scheduler: Scheduler,
    pub adagrad_epsilon: f64,
    /// Optional upper clamp on every preconditioner entry.
    pub upper_cap: Option<f64>,
    pub dual_anchor: DualAnchor,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            lr: 1e-2,
            phi: 20,
            normalize: true,
            scheduler: Scheduler::Adagrad,
            adagrad_epsilon: 1e-10,
            upper_cap: None,
            dual_anchor: DualAnchor::Current,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error::InvalidParameter;
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(InvalidParameter {
                name: "online learning rate",
                value: self.lr,
            });
        }
        if self.phi == 0 {
            return Err(InvalidParameter {
                name: "online update frequency",
                value: 0.0,
            });
        }
        if !(self.adagrad_epsilon > 0.0) {
            return Err(InvalidParameter {
                name: "adagrad epsilon",
                value: self.adagrad_epsilon,
            });
        }
        if let Some(cap) = self.upper_cap {
            if !(cap > 0.0) {
                return Err(InvalidParameter {
                    name: "preconditioner cap",
                    value: cap,
                });
            }
        }
        Ok(())
    }

    /// Whether iteration `k` performs a preconditioner update.
    pub fn updates_at(&self, k: usize) -> bool {
        k.is_multiple_of(self.phi)
    }
}

/// `ℓᵖ = L(x⁺, λ) − L(x, λ)`.
pub fn primal_loss(p: &LpProblem, x: &[f64], x_next: &[f64], lam: &[f64]) -> Result<f64> {
    Ok(evaluate_lagrangian(p, x_next, lam)? - evaluate_lagrangian(p, x, lam)?)
}

/// `ℓᵈ = L(x_anchor, λ) − L(x_anchor, λ⁺)`; pass `x^k` or `x^{k+1}` as the
/// anchor.
pub fn dual_loss(p: &LpProblem, x_anchor: &[f64], lam: &[f64], lam_next: &[f64]) -> Result<f64> {
    Ok(evaluate_lagrangian(p, x_anchor, lam)? - evaluate_lagrangian(p, x_anchor, lam_next)?)
}

/// Diagonal of `∇ℓᵖ` given the pre-projection point of the same step.
///
/// The indicator counts `x^{k+½}_j = 0` as active.
pub fn primal_grad(p: &LpProblem, lam: &[f64], x_half: &[f64], eta: f64, omega: f64) -> Result<Vec<f64>> {
    check_len("primal gradient pre-projection point", p.num_cols(), x_half.len())?;
    let atl = p.a.matvec_transpose(lam)?;
    let reduced: Vec<f64> = p.c.iter().zip(&atl).map(|(c, a)| c - a).collect();
    Ok(primal_grad_from_residual(&reduced, x_half, eta, omega))
}

/// [`primal_grad`] with `c − Aᵀλ` supplied.
pub fn primal_grad_from_residual(c_minus_atl: &[f64], x_half: &[f64], eta: f64, omega: f64) -> Vec<f64> {
    let scale = eta / omega;
    c_minus_atl
        .iter()
        .zip(x_half)
        .map(|(&g, &xh)| if xh >= 0.0 { -scale * g * g } else { 0.0 })
        .collect()
}

/// Diagonal of `∇ℓᵈ = −ηω (b − Ax^k) ∘ (b − A(2x^{k+1} − x^k))`.
pub fn dual_grad(p: &LpProblem, x: &[f64], x_next: &[f64], eta: f64, omega: f64) -> Result<Vec<f64>> {
    check_len("dual gradient next point", x.len(), x_next.len())?;
    let ax = p.a.matvec(x)?;
    let extrap: Vec<f64> = x_next.iter().zip(x).map(|(n, o)| 2.0 * n - o).collect();
    let az = p.a.matvec(&extrap)?;
    let r_anchor: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r_extrap: Vec<f64> = p.b.iter().zip(&az).map(|(b, a)| b - a).collect();
    Ok(dual_grad_from_residuals(&r_anchor, &r_extrap, eta, omega))
}

/// [`dual_grad`] with the two residual vectors supplied.
pub fn dual_grad_from_residuals(b_minus_ax: &[f64], b_minus_a_extrap: &[f64], eta: f64, omega: f64) -> Vec<f64> {
    let scale = eta * omega;
    b_minus_ax
        .iter()
        .zip(b_minus_a_extrap)
        .map(|(r0, r1)| -scale * r0 * r1)
        .collect()
}

/// Divides the gradients by `‖c − Aᵀλ‖²` and `‖b − Ax‖²`. A squared norm
/// below [`NORMALIZE_GUARD`] zeroes the corresponding gradient.
pub fn normalize(g_primal: &[f64], g_dual: &[f64], c_minus_atl: &[f64], b_minus_ax: &[f64]) -> (Vec<f64>, Vec<f64>) {
    fn divide(g: &[f64], denom: f64) -> Vec<f64> {
        if denom < NORMALIZE_GUARD {
            g.iter().map(|_| 0.0).collect()
        } else {
            g.iter().map(|v| v / denom).collect()
        }
    }
    (
        divide(g_primal, vecops::norm_sq(c_minus_atl)),
        divide(g_dual, vecops::norm_sq(b_minus_ax)),
    )
}

/// AdaGrad state plus configuration for one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineLearner {
    pub config: OnlineConfig,
    /// Summed squared primal gradients.
    pub g_tau: Vec<f64>,
    /// Summed squared dual gradients.
    pub g_sigma: Vec<f64>,
    /// Number of updates applied.
    pub updates: usize,
    /// Number of updates skipped because of non-finite gradients.
    pub skipped: usize,
}

impl OnlineLearner {
    pub fn new(config: OnlineConfig, n: usize, m: usize) -> Result<Self> {
        config.validate()?;
        Ok(OnlineLearner {
            config,
            g_tau: alloc::vec![0.0; n],
            g_sigma: alloc::vec![0.0; m],
            updates: 0,
            skipped: 0,
        })
    }

    /// Projected online gradient step on both preconditioners.
    ///
    /// A non-finite gradient skips the whole update: the preconditioner and
    /// the accumulators are returned untouched.
    pub fn ogd_update(
        &mut self,
        pre: &DiagPreconditioner,
        g_tau: &[f64],
        g_sigma: &[f64],
    ) -> Result<DiagPreconditioner> {
        check_len("primal online gradient", pre.tau.len(), g_tau.len())?;
        check_len("dual online gradient", pre.sigma.len(), g_sigma.len())?;
        if !vecops::all_finite(g_tau) || !vecops::all_finite(g_sigma) {
            log::warn!("online preconditioning: non-finite gradient, update skipped");
            self.skipped += 1;
            return Ok(pre.clone());
        }
        let cfg = self.config;
        let mut out = pre.clone();
        descend(&mut out.tau, g_tau, &mut self.g_tau, &cfg);
        descend(&mut out.sigma, g_sigma, &mut self.g_sigma, &cfg);
        self.updates += 1;
        Ok(out)
    }

    /// Gated update after `step` was taken from `st` with `pre` at global
    /// iteration `k`. Returns `None` when `k` is not an update iteration.
    pub fn observe(
        &mut self,
        p: &LpProblem,
        st: &SaddleState,
        step: &PdhgStep,
        pre: &DiagPreconditioner,
        k: usize,
    ) -> Result<Option<DiagPreconditioner>> {
        if !self.config.updates_at(k) {
            return Ok(None);
        }
        let c_minus_atl: Vec<f64> = p.c.iter().zip(&st.atl).map(|(c, a)| c - a).collect();
        let b_minus_ax: Vec<f64> = p.b.iter().zip(&st.ax).map(|(b, a)| b - a).collect();
        let b_minus_extrap: Vec<f64> = p.b.iter().zip(&step.a_extrap).map(|(b, a)| b - a).collect();

        let g_tau = primal_grad_from_residual(&c_minus_atl, &step.x_half, step.eta, step.omega);
        let g_sigma = match self.config.dual_anchor {
            DualAnchor::Current => dual_grad_from_residuals(&b_minus_ax, &b_minus_extrap, step.eta, step.omega),
            DualAnchor::Next => {
                let b_minus_axn: Vec<f64> = p.b.iter().zip(&step.ax).map(|(b, a)| b - a).collect();
                dual_grad_from_residuals(&b_minus_axn, &b_minus_extrap, step.eta, step.omega)
            }
        };
        let (g_tau, g_sigma) = if self.config.normalize {
            normalize(&g_tau, &g_sigma, &c_minus_atl, &b_minus_ax)
        } else {
            (g_tau, g_sigma)
        };
        self.ogd_update(pre, &g_tau, &g_sigma).map(Some)
    }
}

fn descend(values: &mut [f64], grad: &[f64], acc: &mut [f64], cfg: &OnlineConfig) {
    for ((v, &g), a) in values.iter_mut().zip(grad).zip(acc.iter_mut()) {
        let step = match cfg.scheduler {
            Scheduler::Adagrad => {
                *a += g * g;
                cfg.lr / libm::sqrt(*a + cfg.adagrad_epsilon)
            }
            Scheduler::Fixed => cfg.lr,
        };
        let mut next = (*v - step * g).max(0.0);
        if let Some(cap) = cfg.upper_cap {
            next = next.min(cap);
        }
        *v = next;
    }
}

/// Free-function form of [`OnlineLearner::ogd_update`].
pub fn ogd_update(
    learner: &mut OnlineLearner,
    pre: &DiagPreconditioner,
    g_tau: &[f64],
    g_sigma: &[f64],
) -> Result<DiagPreconditioner> {
    learner.ogd_update(pre, g_tau, g_sigma)
}

/// One PDHG step followed by the gated preconditioner update.
pub fn online_step(
    p: &LpProblem,
    st: &SaddleState,
    pre: &DiagPreconditioner,
    learner: &mut OnlineLearner,
    eta: f64,
    omega: f64,
    k: usize,
) -> Result<(SaddleState, DiagPreconditioner)> {
    let step = pdhg_step(p, st, pre, eta, omega)?;
    let next_pre = learner.observe(p, st, &step, pre, k)?.unwrap_or_else(|| pre.clone());
    let mut next = st.clone();
    next.accept(step);
    Ok((next, next_pre))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use alloc::vec;

    fn unit_problem() -> LpProblem {
        LpProblem::new(vec![1.0], vec![1.0], SparseMatrix::identity(1)).unwrap()
    }

    fn fixed(lr: f64, phi: usize) -> OnlineConfig {
        OnlineConfig {
            lr,
            phi,
            normalize: false,
            scheduler: Scheduler::Fixed,
            ..OnlineConfig::default()
        }
    }

    #[test]
    fn loss_examples() {
        let p = unit_problem();
        assert_eq!(primal_loss(&p, &[2.0], &[2.0], &[0.3]).unwrap(), 0.0);
        assert_eq!(primal_loss(&p, &[2.0], &[1.0], &[0.0]).unwrap(), -1.0);
        // c = Aᵀλ: the Lagrangian does not depend on x
        assert_eq!(primal_loss(&p, &[2.0], &[7.0], &[1.0]).unwrap(), 0.0);

        assert_eq!(dual_loss(&p, &[0.0], &[0.4], &[0.4]).unwrap(), 0.0);
        assert_eq!(dual_loss(&p, &[0.0], &[0.0], &[0.5]).unwrap(), -0.5);
        // Ax = b
        assert_eq!(dual_loss(&p, &[1.0], &[0.0], &[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn primal_grad_examples() {
        let p = unit_problem();
        assert_eq!(primal_grad(&p, &[1.0], &[0.3], 1.0, 1.0).unwrap(), vec![-0.0]);
        assert_eq!(primal_grad(&p, &[0.0], &[-0.5], 1.0, 1.0).unwrap(), vec![0.0]);
        assert_eq!(primal_grad(&p, &[2.0], &[1.5], 1.0, 1.0).unwrap(), vec![-1.0]);
        // indicator includes zero
        assert_eq!(primal_grad(&p, &[2.0], &[0.0], 1.0, 1.0).unwrap(), vec![-1.0]);
        assert!(primal_grad(&p, &[2.0], &[0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn dual_grad_examples() {
        let p = unit_problem();
        assert_eq!(dual_grad(&p, &[1.0], &[1.0], 1.0, 1.0).unwrap(), vec![-0.0]);
        assert_eq!(dual_grad(&p, &[0.0], &[0.0], 1.0, 1.0).unwrap(), vec![-1.0]);
        let g = dual_grad(&p, &[3.0], &[3.0], 0.5, 2.0).unwrap();
        assert_eq!(g, vec![-4.0]);
        assert!(dual_grad(&p, &[0.0], &[0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        let (gp, gd) = normalize(&[-1.0, -2.0], &[3.0], &[2.0, 0.0], &[1.0]);
        assert_eq!(gp, vec![-0.25, -0.5]);
        assert_eq!(gd, vec![3.0]);
        let (gp, gd) = normalize(&[-1.0], &[5.0], &[0.0], &[0.0]);
        assert_eq!(gp, vec![0.0]);
        assert_eq!(gd, vec![0.0]);
    }

    #[test]
    fn ogd_examples() {
        let pre = DiagPreconditioner {
            tau: vec![1.0],
            sigma: vec![0.1],
        };
        let mut learner = OnlineLearner::new(fixed(0.1, 1), 1, 1).unwrap();
        let out = learner.ogd_update(&pre, &[-2.0], &[2.0]).unwrap();
        assert!((out.tau[0] - 1.2).abs() < 1e-15);
        assert_eq!(out.sigma, vec![0.0]);

        let mut ada = OnlineLearner::new(
            OnlineConfig {
                scheduler: Scheduler::Adagrad,
                ..fixed(0.1, 1)
            },
            1,
            1,
        )
        .unwrap();
        let same = ada.ogd_update(&pre, &[0.0], &[0.0]).unwrap();
        assert_eq!(same, pre);
        assert_eq!(ada.g_tau, vec![0.0]);
        let out = ada.ogd_update(&pre, &[-2.0], &[0.0]).unwrap();
        assert_eq!(ada.g_tau, vec![4.0]);
        assert!((out.tau[0] - (1.0 + 0.1 * 2.0 / libm::sqrt(4.0 + 1e-10))).abs() < 1e-15);

        let before = ada.clone();
        let kept = ada.ogd_update(&pre, &[f64::NAN], &[0.0]).unwrap();
        assert_eq!(kept, pre);
        assert_eq!(ada.g_tau, before.g_tau);
        assert_eq!(ada.skipped, 1);
    }

    #[test]
    fn upper_cap_clamps() {
        let cfg = OnlineConfig {
            upper_cap: Some(1.1),
            ..fixed(0.1, 1)
        };
        let mut learner = OnlineLearner::new(cfg, 1, 1).unwrap();
        let pre = DiagPreconditioner::identity(1, 1);
        let out = learner.ogd_update(&pre, &[-5.0], &[0.0]).unwrap();
        assert_eq!(out.tau, vec![1.1]);
    }

    #[test]
    fn gate_skips_off_iterations() {
        let p = unit_problem();
        let st = SaddleState::zeros(&p);
        let pre = DiagPreconditioner::uniform(1, 1, 0.5, 0.5);
        let mut learner = OnlineLearner::new(fixed(0.1, 20), 1, 1).unwrap();
        let (_, out) = online_step(&p, &st, &pre, &mut learner, 1.0, 1.0, 7).unwrap();
        assert_eq!(out, pre);
        assert_eq!(learner.updates, 0);
    }

    #[test]
    fn one_step_matches_hand_composition() {
        // x = 0, λ = 0, T = Σ = 0.5: x^{½} = -0.5 so the primal gradient is 0;
        // the dual gradient is -(1)(1) = -1, so σ = 0.5 + 0.1 = 0.6.
        let p = unit_problem();
        let st = SaddleState::zeros(&p);
        let pre = DiagPreconditioner::uniform(1, 1, 0.5, 0.5);
        let mut learner = OnlineLearner::new(fixed(0.1, 1), 1, 1).unwrap();
        let (next, out) = online_step(&p, &st, &pre, &mut learner, 1.0, 1.0, 0).unwrap();
        assert_eq!(next.x, vec![0.0]);
        assert_eq!(next.lam, vec![0.5]);
        assert_eq!(out.tau, vec![0.5]);
        assert!((out.sigma[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(OnlineConfig {
            phi: 0,
            ..OnlineConfig::default()
        }
        .validate()
        .is_err());
        assert!(OnlineConfig {
            lr: -1.0,
            ..OnlineConfig::default()
        }
        .validate()
        .is_err());
        assert!(OnlineConfig {
            lr: 0.0,
            ..OnlineConfig::default()
        }
        .validate()
        .is_ok());
        assert!(OnlineConfig::default().updates_at(40));
        assert!(!OnlineConfig::default().updates_at(7));
    }
}
