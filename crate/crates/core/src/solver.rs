//! The outer solve loop: static preprocessing, PDHG iterations with
//! optional online preconditioning and PDLP machinery, residual checks and
//! mapping the answer back to the caller's units.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lp::LpProblem;
use crate::online::{OnlineConfig, OnlineLearner};
use crate::pdhg::{check_termination, compute_residuals, pdhg_step, Limits, Residuals, SaddleState, Status};
use crate::pdlp::{
    adaptive_stepsize, apply_restart, initial_step_size, primal_weight_init, restart_check, RestartDecision,
    RestartParams, RestartState, StepController,
};
use crate::precond::{
    apply_scaling, safeguard_scalars, static_scaling, DiagPreconditioner, ScaledProblem, StaticScaling,
};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Mode {
    /// Fixed steps `η = √(ts)`, `ω = √(t/s)` from the safeguard, no restarts.
    #[default]
    Vanilla,
    /// Adaptive step size, primal weight and adaptive restarts.
    Pdlp,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveConfig {
    pub tolerance: f64,
    pub iteration_limit: usize,
    pub time_limit: f64,
    pub mode: Mode,
    pub scaling: StaticScaling,
    pub online: Option<OnlineConfig>,
    pub check_stride: usize,
    pub trace_stride: usize,
    /// Ratio `t / s` of the vanilla safeguard scalars.
    pub step_ratio: f64,
    /// Adaptive restarts in pdlp mode.
    pub restarts: bool,
    /// Re-estimate the primal weight at restarts.
    pub adapt_primal_weight: bool,
    /// Pdlp mode: use this `η` throughout instead of the adaptive rule.
    pub fixed_stepsize: Option<f64>,
    /// Pdlp mode: use this `ω` instead of `‖c‖/‖b‖`.
    pub fixed_primal_weight: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tolerance: 1e-4,
            iteration_limit: 50_000,
            time_limit: 600.0,
            mode: Mode::Vanilla,
            scaling: StaticScaling::default(),
            online: None,
            check_stride: 40,
            trace_stride: 10,
            step_ratio: 1.0,
            restarts: true,
            adapt_primal_weight: true,
            fixed_stepsize: None,
            fixed_primal_weight: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| Err(Error::InvalidParameter { name, value });
        if !(self.tolerance > 0.0) {
            return bad("tolerance", self.tolerance);
        }
        if self.iteration_limit == 0 {
            return bad("iteration limit", 0.0);
        }
        if !(self.time_limit > 0.0) {
            return bad("time limit", self.time_limit);
        }
        if self.check_stride == 0 {
            return bad("check stride", 0.0);
        }
        if self.trace_stride == 0 {
            return bad("trace stride", 0.0);
        }
        if !(self.step_ratio > 0.0) || !self.step_ratio.is_finite() {
            return bad("step ratio", self.step_ratio);
        }
        for (name, v) in [
            ("fixed step size", self.fixed_stepsize),
            ("fixed primal weight", self.fixed_primal_weight),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(name, v);
                }
            }
        }
        if let Some(o) = &self.online {
            o.validate()?;
        }
        Ok(())
    }
}

/// Wall-clock source; the core crate has no clock of its own.
pub trait Clock {
    fn elapsed_seconds(&self) -> f64;
}

/// A clock that never advances, so time limits never fire.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

/// Hooks into the solve loop, mainly for tests and diagnostics.
pub trait SolveObserver {
    /// Called after the step taken at 0-based iteration `k` has been
    /// accepted; `pre` is the preconditioner for the next step.
    fn after_step(&mut self, _k: usize, _st: &SaddleState, _pre: &DiagPreconditioner) {}

    /// Called around every restart.
    fn on_restart(
        &mut self,
        _k: usize,
        _decision: RestartDecision,
        _before: &DiagPreconditioner,
        _after: &DiagPreconditioner,
    ) {
    }
}

impl SolveObserver for () {}

/// One sampled row of the convergence trace, in original units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub iter: usize,
    pub rel_primal: f64,
    pub rel_dual: f64,
    pub rel_gap: f64,
    pub kkt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    /// Trial PDHG steps including rejected ones.
    pub step_attempts: usize,
    pub trace: Vec<TracePoint>,
    /// Filled in by callers that own a clock.
    pub wall_seconds: f64,
    pub x: Vec<f64>,
    pub lam: Vec<f64>,
    pub residuals: Residuals,
    pub objective: f64,
    pub restarts: usize,
    pub eta: f64,
    pub omega: f64,
    /// Learned preconditioner on the scaled problem at exit.
    pub preconditioner: DiagPreconditioner,
    /// Online updates applied.
    pub online_updates: usize,
}

pub fn solve(p: &LpProblem, cfg: &SolveConfig) -> Result<SolveReport> {
    solve_observed(p, cfg, &NoClock, &mut ())
}

pub fn solve_with_clock(p: &LpProblem, cfg: &SolveConfig, clock: &dyn Clock) -> Result<SolveReport> {
    solve_observed(p, cfg, clock, &mut ())
}

/// Scaled problem and the step parameters each mode starts from.
struct Setup {
    scaled: ScaledProblem,
    eta: f64,
    omega: f64,
    adaptive: bool,
    restarts: bool,
}

fn setup(p: &LpProblem, cfg: &SolveConfig) -> Result<Setup> {
    let rec = static_scaling(&p.a, cfg.scaling)?;
    let scaled = apply_scaling(p, &rec)?;
    let w = &scaled.problem;
    Ok(match cfg.mode {
        Mode::Vanilla => {
            let (t, s) = safeguard_scalars(&w.a, cfg.step_ratio)?;
            Setup {
                eta: libm::sqrt(t * s),
                omega: libm::sqrt(t / s),
                scaled,
                adaptive: false,
                restarts: false,
            }
        }
        Mode::Pdlp => Setup {
            eta: cfg.fixed_stepsize.unwrap_or_else(|| initial_step_size(w)),
            omega: cfg.fixed_primal_weight.unwrap_or_else(|| primal_weight_init(w)),
            adaptive: cfg.fixed_stepsize.is_none(),
            restarts: cfg.restarts,
            scaled,
        },
    })
}

/// Original-unit residuals from the scaled products:
/// `Ax = D_r⁻¹ Ãx̃`, `Aᵀλ = D_c⁻¹ Ãᵀλ̃`.
fn cached_residuals(p: &LpProblem, sp: &ScaledProblem, st: &SaddleState, norm_b: f64, norm_c: f64) -> Residuals {
    let x = sp.unscale_primal(&st.x);
    let lam = sp.unscale_dual(&st.lam);
    let ax: Vec<f64> = st.ax.iter().zip(&sp.record.row).map(|(v, d)| v / d).collect();
    let atl: Vec<f64> = st.atl.iter().zip(&sp.record.col).map(|(v, d)| v / d).collect();
    Residuals::from_products(p, &x, &lam, &ax, &atl, norm_b, norm_c)
}

struct Candidate {
    x: Vec<f64>,
    lam: Vec<f64>,
    residuals: Residuals,
}

/// Fresh original-unit residuals at the current iterate and the average;
/// the one with the smaller KKT norm comes first.
fn evaluate_candidates(p: &LpProblem, sp: &ScaledProblem, st: &SaddleState) -> Result<(Candidate, Option<Candidate>)> {
    let eval = |xs: &[f64], ls: &[f64]| -> Result<Candidate> {
        let x = sp.unscale_primal(xs);
        let lam = sp.unscale_dual(ls);
        let residuals = compute_residuals(p, &x, &lam)?;
        Ok(Candidate { x, lam, residuals })
    };
    let cur = eval(&st.x, &st.lam)?;
    if st.avg.is_empty() {
        return Ok((cur, None));
    }
    let avg = eval(&st.avg.x(), &st.avg.lam())?;
    let better = |a: &Candidate, b: &Candidate| {
        let (ka, kb) = (a.residuals.kkt(), b.residuals.kkt());
        ka < kb || kb.is_nan()
    };
    if better(&avg, &cur) {
        Ok((avg, Some(cur)))
    } else {
        Ok((cur, Some(avg)))
    }
}

pub fn solve_observed(
    p: &LpProblem,
    cfg: &SolveConfig,
    clock: &dyn Clock,
    observer: &mut dyn SolveObserver,
) -> Result<SolveReport> {
    cfg.validate()?;
    let Setup {
        scaled,
        eta,
        omega,
        adaptive,
        restarts,
    } = setup(p, cfg)?;
    let w = &scaled.problem;
    let (m, n) = (w.num_rows(), w.num_cols());
    let norm_b = vecops::norm(&p.b);
    let norm_c = vecops::norm(&p.c);
    let limits = Limits {
        tolerance: cfg.tolerance,
        iteration_limit: cfg.iteration_limit,
        time_limit: cfg.time_limit,
    };

    let mut st = SaddleState::zeros(w);
    let mut pre = DiagPreconditioner::identity(n, m);
    let mut learner = match &cfg.online {
        Some(o) => Some(OnlineLearner::new(*o, n, m)?),
        None => None,
    };
    let mut ctrl = StepController::new(eta, omega)?;
    let mut rst = RestartState::new(w, &st, ctrl.omega, RestartParams::default());
    let mut trace = Vec::new();
    let mut attempts = 0usize;

    let (status, best) = loop {
        let k = st.k;
        let step = if adaptive {
            let before = ctrl.attempts;
            let r = adaptive_stepsize(w, &st, &pre, &mut ctrl);
            attempts += ctrl.attempts - before;
            r
        } else {
            attempts += 1;
            pdhg_step(w, &st, &pre, ctrl.eta, ctrl.omega)
        };
        let step = match step {
            Ok(s) => s,
            Err(Error::NonFinite { .. }) => {
                log::warn!("non-finite values at iteration {}", k);
                break (Status::NumericalError, None);
            }
            Err(e) => return Err(e),
        };
        let next_pre = match learner.as_mut() {
            Some(l) => l.observe(w, &st, &step, &pre, k)?,
            None => None,
        };
        st.accept(step);
        if let Some(np) = next_pre {
            pre = np;
        }
        observer.after_step(k, &st, &pre);
        let done = st.k;

        if done.is_multiple_of(cfg.trace_stride) {
            let r = cached_residuals(p, &scaled, &st, norm_b, norm_c);
            trace.push(TracePoint {
                iter: done,
                rel_primal: r.rel_primal,
                rel_dual: r.rel_dual,
                rel_gap: r.rel_gap,
                kkt: r.kkt(),
            });
        }

        let at_limit = done >= cfg.iteration_limit;
        if done.is_multiple_of(cfg.check_stride) || at_limit {
            let (first, second) = evaluate_candidates(p, &scaled, &st)?;
            let elapsed = clock.elapsed_seconds();
            let mut verdict = check_termination(&first.residuals, &limits, done, elapsed);
            if verdict != Some(Status::Optimal) {
                if let Some(s) = &second {
                    if check_termination(&s.residuals, &limits, done, elapsed) == Some(Status::Optimal) {
                        break (Status::Optimal, second);
                    }
                }
            }
            if verdict == Some(Status::NumericalError) && second.as_ref().is_some_and(|s| s.residuals.is_finite()) {
                verdict = check_termination(&second.as_ref().unwrap().residuals, &limits, done, elapsed);
            }
            if let Some(s) = verdict {
                break (s, Some(first));
            }

            if restarts {
                let decision = restart_check(&mut rst, w, &st, ctrl.omega);
                if decision != RestartDecision::None {
                    let before = pre.clone();
                    let (next, kept, _) = apply_restart(
                        &mut rst,
                        w,
                        &st,
                        &pre,
                        decision,
                        &mut ctrl.omega,
                        cfg.adapt_primal_weight && cfg.fixed_primal_weight.is_none(),
                    )?;
                    st = next;
                    pre = kept;
                    observer.on_restart(done, decision, &before, &pre);
                }
            }
        }
    };

    let best = match best {
        Some(c) => c,
        None => {
            let x = scaled.unscale_primal(&st.x);
            let lam = scaled.unscale_dual(&st.lam);
            let residuals = cached_residuals(p, &scaled, &st, norm_b, norm_c);
            Candidate { x, lam, residuals }
        }
    };
    Ok(SolveReport {
        status,
        iterations: st.k,
        step_attempts: attempts,
        trace,
        wall_seconds: clock.elapsed_seconds(),
        objective: p.objective(&best.x),
        x: best.x,
        lam: best.lam,
        residuals: best.residuals,
        restarts: rst.count,
        eta: ctrl.eta,
        omega: ctrl.omega,
        preconditioner: pre,
        online_updates: learner.map_or(0, |l| l.updates),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use alloc::vec;

    fn unit_problem() -> LpProblem {
        LpProblem::new(vec![1.0], vec![1.0], SparseMatrix::identity(1)).unwrap()
    }

    #[test]
    fn unit_problem_vanilla() {
        let r = solve(&unit_problem(), &SolveConfig::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-3);
        assert!(!r.trace.is_empty());
    }

    #[test]
    fn unit_problem_pdlp() {
        let cfg = SolveConfig {
            mode: Mode::Pdlp,
            ..SolveConfig::default()
        };
        let r = solve(&unit_problem(), &cfg).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn iteration_limit_reported() {
        let p = LpProblem::new(
            vec![1.0, 1.0],
            vec![1.0, 3.0],
            SparseMatrix::from_dense(&[&[1.0, 2.0], &[3.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let cfg = SolveConfig {
            iteration_limit: 7,
            tolerance: 1e-12,
            trace_stride: 1,
            ..SolveConfig::default()
        };
        let r = solve(&p, &cfg).unwrap();
        assert_eq!(r.status, Status::IterationLimit);
        assert_eq!(r.iterations, 7);
        assert_eq!(r.trace.len(), 7);
    }

    #[test]
    fn config_validation() {
        let bad = SolveConfig {
            tolerance: 0.0,
            ..SolveConfig::default()
        };
        assert!(solve(&unit_problem(), &bad).is_err());
        let bad = SolveConfig {
            iteration_limit: 0,
            ..SolveConfig::default()
        };
        assert!(solve(&unit_problem(), &bad).is_err());
    }

    #[test]
    fn zero_lr_online_matches_plain() {
        let p = LpProblem::new(
            vec![1.0, 2.0],
            vec![1.0, 2.0],
            SparseMatrix::from_dense(&[&[1.0, 3.0], &[2.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let plain = solve(&p, &SolveConfig::default()).unwrap();
        let cfg = SolveConfig {
            online: Some(OnlineConfig {
                lr: 0.0,
                ..OnlineConfig::default()
            }),
            ..SolveConfig::default()
        };
        let online = solve(&p, &cfg).unwrap();
        assert_eq!(plain.x, online.x);
        assert_eq!(plain.iterations, online.iterations);
    }
}
