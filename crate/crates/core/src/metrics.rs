//! Benchmark summaries: shifted geometric means, per-variant aggregates
//! over the instances every variant solved, and improvement counts against
//! a baseline.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pdhg::Status;

/// Shift used for iteration counts.
pub const SGM_SHIFT: f64 = 10.0;
/// Times are clamped below at this value before taking geometric means.
pub const MIN_TIME: f64 = 1e-3;

/// `(∏(vᵢ + shift))^{1/N} − shift`, evaluated in log space.
pub fn sgm(values: &[f64], shift: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            context: "shifted geometric mean",
        });
    }
    if !(shift >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "shift",
            value: shift,
        });
    }
    let mut acc = 0.0;
    for &v in values {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter {
                name: "shifted geometric mean input",
                value: v,
            });
        }
        if v + shift == 0.0 {
            return Ok(0.0 - shift);
        }
        acc += libm::log(v + shift);
    }
    Ok(libm::exp(acc / values.len() as f64) - shift)
}

/// Plain geometric mean of positive values.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            context: "geometric mean",
        });
    }
    if let Some(&v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "geometric mean input",
            value: v,
        });
    }
    sgm(values, 0.0)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Outcome of one instance under one variant, after learning-rate
/// selection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceResult {
    pub instance: String,
    pub variant: String,
    pub status: Status,
    pub iterations: usize,
    /// Time of the chosen run.
    pub wall_seconds: f64,
    /// Time of every run in the learning-rate grid together.
    pub grid_seconds: f64,
    pub rel_primal: f64,
    pub rel_dual: f64,
    pub rel_gap: f64,
    pub objective: f64,
    /// Chosen learning rate; 0 when online preconditioning is off.
    pub lr: f64,
}

impl InstanceResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariantSummary {
    pub variant: String,
    /// Instances attempted, load errors excluded.
    pub attempted: usize,
    pub num_optimal: usize,
    pub iter_sgm10: Option<f64>,
    pub iter_mean: Option<f64>,
    pub time_gm: Option<f64>,
    pub time_mean: Option<f64>,
    pub grid_time_gm: Option<f64>,
    pub grid_time_mean: Option<f64>,
    pub improved: usize,
    pub worsened: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregateReport {
    pub baseline: String,
    /// Instances on which every variant is OPTIMAL, sorted.
    pub common_optimal: Vec<String>,
    pub variants: Vec<VariantSummary>,
}

/// Improvement counts of `variant` against `baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub improved: usize,
    pub worsened: usize,
    pub common_optimal: usize,
    pub baseline_optimal: usize,
    pub variant_optimal: usize,
}

fn attempted(results: &[InstanceResult]) -> impl Iterator<Item = &InstanceResult> {
    results.iter().filter(|r| r.status != Status::LoadError)
}

fn instance_set(results: &[InstanceResult]) -> BTreeSet<&str> {
    results.iter().map(|r| r.instance.as_str()).collect()
}

fn check_same_instances(baseline: &[InstanceResult], variant: &[InstanceResult]) -> Result<()> {
    let a = instance_set(baseline);
    let b = instance_set(variant);
    if a == b {
        return Ok(());
    }
    Err(Error::InstanceMismatch {
        only_in_baseline: a.difference(&b).map(|s| String::from(*s)).collect(),
        only_in_variant: b.difference(&a).map(|s| String::from(*s)).collect(),
    })
}

fn find<'a>(results: &'a [InstanceResult], name: &str) -> Option<&'a InstanceResult> {
    results.iter().find(|r| r.instance == name)
}

/// Counts instances where the variant needs fewer (more) iterations than
/// the baseline, over instances both solve to optimality.
pub fn compare(baseline: &[InstanceResult], variant: &[InstanceResult]) -> Result<Comparison> {
    check_same_instances(baseline, variant)?;
    let mut out = Comparison {
        improved: 0,
        worsened: 0,
        common_optimal: 0,
        baseline_optimal: attempted(baseline).filter(|r| r.is_optimal()).count(),
        variant_optimal: attempted(variant).filter(|r| r.is_optimal()).count(),
    };
    for b in attempted(baseline).filter(|r| r.is_optimal()) {
        let Some(v) = find(variant, &b.instance) else { continue };
        if !v.is_optimal() {
            continue;
        }
        out.common_optimal += 1;
        if v.iterations < b.iterations {
            out.improved += 1;
        } else if v.iterations > b.iterations {
            out.worsened += 1;
        }
    }
    Ok(out)
}

/// Summaries for every variant. `runs` holds `(variant, results)` pairs;
/// `baseline` names the one the others are compared to.
pub fn aggregate(runs: &[(String, Vec<InstanceResult>)], baseline: &str) -> Result<AggregateReport> {
    let Some((_, base)) = runs.iter().find(|(name, _)| name == baseline) else {
        return Err(Error::EmptyInput {
            context: "baseline variant results",
        });
    };
    for (_, res) in runs {
        check_same_instances(base, res)?;
    }
    let common: Vec<String> = instance_set(base)
        .into_iter()
        .filter(|inst| {
            runs.iter()
                .all(|(_, res)| find(res, inst).is_some_and(|r| r.is_optimal()))
        })
        .map(String::from)
        .collect();

    let mut variants = Vec::with_capacity(runs.len());
    for (name, res) in runs {
        let cmp = compare(base, res)?;
        let chosen: Vec<&InstanceResult> = common.iter().filter_map(|i| find(res, i)).collect();
        let iters: Vec<f64> = chosen.iter().map(|r| r.iterations as f64).collect();
        let times: Vec<f64> = chosen.iter().map(|r| r.wall_seconds.max(MIN_TIME)).collect();
        let grid: Vec<f64> = chosen.iter().map(|r| r.grid_seconds.max(MIN_TIME)).collect();
        variants.push(VariantSummary {
            variant: name.clone(),
            attempted: attempted(res).count(),
            num_optimal: cmp.variant_optimal,
            iter_sgm10: sgm(&iters, SGM_SHIFT).ok(),
            iter_mean: mean(&iters),
            time_gm: geometric_mean(&times).ok(),
            time_mean: mean(&times),
            grid_time_gm: geometric_mean(&grid).ok(),
            grid_time_mean: mean(&grid),
            improved: cmp.improved,
            worsened: cmp.worsened,
        });
    }
    Ok(AggregateReport {
        baseline: String::from(baseline),
        common_optimal: common,
        variants,
    })
}

/// Convergence behaviour of an online-preconditioned run relative to the
/// plain run on the same instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ConvergenceClass {
    /// Both runs are optimal.
    BothOptimal,
    /// The plain run hits the iteration limit, the online run is optimal.
    Rescued,
    /// Both runs hit the iteration limit.
    BothLimit,
    Other,
}

pub fn classify(plain: Status, online: Status) -> ConvergenceClass {
    match (plain, online) {
        (Status::Optimal, Status::Optimal) => ConvergenceClass::BothOptimal,
        (Status::IterationLimit, Status::Optimal) => ConvergenceClass::Rescued,
        (Status::IterationLimit, Status::IterationLimit) => ConvergenceClass::BothLimit,
        _ => ConvergenceClass::Other,
    }
}
