//! Adaptive step size, primal weight and adaptive restarts.
//!
//! The step-size rule and restart criteria follow the published PDLP
//! scheme. Step-size norms are measured in the geometry of the current
//! diagonal preconditioners, so the rule keeps working while `T` and `Σ`
//! are being learned.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lp::LpProblem;
use crate::pdhg::{pdhg_step, PdhgStep, SaddleState};
use crate::precond::DiagPreconditioner;
use crate::vecops;

pub const DEFAULT_REDUCTION_EXPONENT: f64 = 0.3;
pub const DEFAULT_GROWTH_EXPONENT: f64 = 0.6;
pub const DEFAULT_MAX_RETRIES: usize = 60;
/// Norms below this are treated as zero by the primal weight rules.
pub const WEIGHT_GUARD: f64 = 1e-12;

/// Holds `η` and `ω` between iterations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepController {
    pub eta: f64,
    pub omega: f64,
    pub reduction_exponent: f64,
    pub growth_exponent: f64,
    pub max_retries: usize,
    /// Trial steps computed so far, accepted or not.
    pub attempts: usize,
    /// Trial steps rejected so far.
    pub rejections: usize,
    /// Iterations where the retry budget ran out and the last trial was kept.
    pub forced_accepts: usize,
}

impl StepController {
    pub fn new(eta: f64, omega: f64) -> Result<Self> {
        check_positive("eta", eta)?;
        check_positive("omega", omega)?;
        Ok(StepController {
            eta,
            omega,
            reduction_exponent: DEFAULT_REDUCTION_EXPONENT,
            growth_exponent: DEFAULT_GROWTH_EXPONENT,
            max_retries: DEFAULT_MAX_RETRIES,
            attempts: 0,
            rejections: 0,
            forced_accepts: 0,
        })
    }

    /// `min((1 − kk^{−0.3}) η̄, (1 + kk^{−0.6}) η)` with `kk = k + 2` for
    /// the 0-based iteration `k`.
    pub fn next_eta(&self, bound: f64, k: usize) -> f64 {
        let kk = (k + 2) as f64;
        let shrink = (1.0 - libm::pow(kk, -self.reduction_exponent)) * bound;
        let grow = (1.0 + libm::pow(kk, -self.growth_exponent)) * self.eta;
        shrink.min(grow)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value: v })
    }
}

/// `η̄ = (ω‖Δx‖²_{T⁻¹} + ‖Δλ‖²_{Σ⁻¹}/ω) / (2|Δλᵀ A Δx|)`.
///
/// Coordinates whose preconditioner entry is zero cannot move and are left
/// out of the weighted norms. Returns `+∞` when the interaction term is
/// zero.
pub fn step_bound(st: &SaddleState, step: &PdhgStep, pre: &DiagPreconditioner) -> f64 {
    let weighted = |new: &[f64], old: &[f64], d: &[f64]| -> f64 {
        new.iter()
            .zip(old)
            .zip(d)
            .filter(|(_, &w)| w > 0.0)
            .map(|((a, b), w)| {
                let v = a - b;
                v * v / w
            })
            .sum()
    };
    let dx = weighted(&step.x, &st.x, &pre.tau);
    let dl = weighted(&step.lam, &st.lam, &pre.sigma);
    let interaction: f64 = step
        .lam
        .iter()
        .zip(&st.lam)
        .zip(step.ax.iter().zip(&st.ax))
        .map(|((ln, lo), (an, ao))| (ln - lo) * (an - ao))
        .sum();
    let interaction = interaction.abs();
    if interaction == 0.0 {
        return f64::INFINITY;
    }
    (step.omega * dx + dl / step.omega) / (2.0 * interaction)
}

/// Takes trial steps until one satisfies `η ≤ η̄`, updating `ctrl.eta` for
/// the next iteration. After `max_retries` rejections the last trial is
/// accepted with a warning.
pub fn adaptive_stepsize(
    p: &LpProblem,
    st: &SaddleState,
    pre: &DiagPreconditioner,
    ctrl: &mut StepController,
) -> Result<PdhgStep> {
    check_positive("eta", ctrl.eta)?;
    let mut retries = 0;
    loop {
        let step = pdhg_step(p, st, pre, ctrl.eta, ctrl.omega)?;
        ctrl.attempts += 1;
        let bound = step_bound(st, &step, pre);
        let accepted = step.eta <= bound;
        let next = ctrl.next_eta(bound, st.k);
        if accepted || retries >= ctrl.max_retries {
            if !accepted {
                log::warn!(
                    "step size still above its bound after {} retries at iteration {}",
                    retries,
                    st.k
                );
                ctrl.forced_accepts += 1;
            }
            if next > 0.0 && next.is_finite() {
                ctrl.eta = next;
            }
            return Ok(step);
        }
        ctrl.rejections += 1;
        retries += 1;
        if !(next > 0.0) || !next.is_finite() {
            return Err(Error::NonFinite {
                context: "adaptive step size",
            });
        }
        ctrl.eta = next;
    }
}

/// `ω = ‖c‖ / ‖b‖` when both norms exceed 1e-12, else 1.
pub fn primal_weight_init(p: &LpProblem) -> f64 {
    let nc = vecops::norm(&p.c);
    let nb = vecops::norm(&p.b);
    if nc > WEIGHT_GUARD && nb > WEIGHT_GUARD {
        nc / nb
    } else {
        1.0
    }
}

/// `1 / max_i ‖A_i‖_∞`, or 1 for an all-zero matrix.
pub fn initial_step_size(p: &LpProblem) -> f64 {
    let m =
        p.a.axis_norms(crate::sparse::Axis::Rows, crate::sparse::NormKind::Inf)
            .into_iter()
            .fold(0.0f64, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

/// `ω ← exp(½ log(‖Δλ‖/‖Δx‖) + ½ log ω)`, unchanged unless both movements
/// exceed 1e-12.
pub fn update_primal_weight(omega: f64, dx_norm: f64, dlam_norm: f64) -> f64 {
    if dx_norm > WEIGHT_GUARD && dlam_norm > WEIGHT_GUARD {
        libm::exp(0.5 * libm::log(dlam_norm / dx_norm) + 0.5 * libm::log(omega))
    } else {
        omega
    }
}

/// `sqrt(ω‖Ax − b‖² + ‖(Aᵀλ − c)₊‖²/ω + (cᵀx − bᵀλ)²)` from cached products.
pub fn weighted_kkt(p: &LpProblem, x: &[f64], lam: &[f64], ax: &[f64], atl: &[f64], omega: f64) -> f64 {
    let primal = vecops::dist_sq(ax, &p.b);
    let dual: f64 = atl
        .iter()
        .zip(&p.c)
        .map(|(a, c)| {
            let v = (a - c).max(0.0);
            v * v
        })
        .sum();
    let gap = vecops::dot(&p.c, x) - vecops::dot(&p.b, lam);
    libm::sqrt(omega * primal + dual / omega + gap * gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RestartParams {
    pub sufficient: f64,
    pub necessary: f64,
    pub artificial: f64,
}

impl Default for RestartParams {
    fn default() -> Self {
        RestartParams {
            sufficient: 0.2,
            necessary: 0.8,
            artificial: 0.36,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RestartDecision {
    None,
    ToAverage,
    ToCurrent,
}

/// Bookkeeping between restarts. The running average itself lives in
/// [`SaddleState::avg`].
#[derive(Debug, Clone, PartialEq)]
pub struct RestartState {
    pub x_last: Vec<f64>,
    pub lam_last: Vec<f64>,
    /// Metric at the last restart point.
    pub metric_last: f64,
    /// Best candidate metric at the previous check in this period.
    pub metric_prev: f64,
    pub last_restart_k: usize,
    pub count: usize,
    pub params: RestartParams,
}

impl RestartState {
    /// Starts the first period at `st`.
    pub fn new(p: &LpProblem, st: &SaddleState, omega: f64, params: RestartParams) -> Self {
        let metric = weighted_kkt(p, &st.x, &st.lam, &st.ax, &st.atl, omega);
        RestartState {
            x_last: st.x.clone(),
            lam_last: st.lam.clone(),
            metric_last: metric,
            metric_prev: f64::INFINITY,
            last_restart_k: st.k,
            count: 0,
            params,
        }
    }

    pub fn period(&self, st: &SaddleState) -> usize {
        st.k - self.last_restart_k
    }
}

/// Candidate metrics at the current iterate and the running average.
pub fn candidate_metrics(p: &LpProblem, st: &SaddleState, omega: f64) -> (f64, Option<f64>) {
    let cur = weighted_kkt(p, &st.x, &st.lam, &st.ax, &st.atl, omega);
    let avg = if st.avg.is_empty() {
        None
    } else {
        Some(weighted_kkt(
            p,
            &st.avg.x(),
            &st.avg.lam(),
            &st.avg.ax(),
            &st.avg.atl(),
            omega,
        ))
    };
    (cur, avg)
}

/// Decides whether to restart at `st`, whose `k` is the total number of
/// iterations so far.
pub fn restart_check(rst: &mut RestartState, p: &LpProblem, st: &SaddleState, omega: f64) -> RestartDecision {
    let period = rst.period(st);
    if period <= 1 {
        return RestartDecision::None;
    }
    let (cur, avg) = candidate_metrics(p, st, omega);
    let (candidate, target) = match avg {
        Some(a) if a < cur => (a, RestartDecision::ToAverage),
        _ => (cur, RestartDecision::ToCurrent),
    };
    decide(rst, candidate, target, period, st.k)
}

/// Threshold logic of [`restart_check`] for an already evaluated candidate.
pub fn decide(
    rst: &mut RestartState,
    candidate: f64,
    target: RestartDecision,
    period: usize,
    total: usize,
) -> RestartDecision {
    let prm = rst.params;
    let sufficient = candidate <= prm.sufficient * rst.metric_last;
    let stalled = candidate <= prm.necessary * rst.metric_last && candidate > rst.metric_prev;
    let artificial = period as f64 >= prm.artificial * total as f64;
    rst.metric_prev = candidate;
    if sufficient || stalled || artificial {
        target
    } else {
        RestartDecision::None
    }
}

/// Norms of the move from the last restart point to the new one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub dx: f64,
    pub dlam: f64,
}

/// Moves `st` to the chosen candidate and clears the running average. The
/// preconditioner comes back untouched. When `adapt_weight` is set `omega`
/// is updated from the movement before the new reference metric is taken.
pub fn apply_restart(
    rst: &mut RestartState,
    p: &LpProblem,
    st: &SaddleState,
    pre: &DiagPreconditioner,
    decision: RestartDecision,
    omega: &mut f64,
    adapt_weight: bool,
) -> Result<(SaddleState, DiagPreconditioner, Movement)> {
    let mut next = st.clone();
    match decision {
        RestartDecision::None => return Ok((next, pre.clone(), Movement { dx: 0.0, dlam: 0.0 })),
        RestartDecision::ToCurrent => {}
        RestartDecision::ToAverage => {
            next.x = st.avg.x();
            next.lam = st.avg.lam();
            next.ax = p.a.matvec(&next.x)?;
            next.atl = p.a.matvec_transpose(&next.lam)?;
        }
    }
    next.avg.reset();
    let movement = Movement {
        dx: libm::sqrt(vecops::dist_sq(&next.x, &rst.x_last)),
        dlam: libm::sqrt(vecops::dist_sq(&next.lam, &rst.lam_last)),
    };
    if adapt_weight {
        *omega = update_primal_weight(*omega, movement.dx, movement.dlam);
    }
    rst.x_last.clone_from(&next.x);
    rst.lam_last.clone_from(&next.lam);
    rst.metric_last = weighted_kkt(p, &next.x, &next.lam, &next.ax, &next.atl, *omega);
    rst.metric_prev = f64::INFINITY;
    rst.last_restart_k = next.k;
    rst.count += 1;
    Ok((next, pre.clone(), movement))
}
