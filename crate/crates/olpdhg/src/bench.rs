//! Benchmark harness: runs every instance under every variant, picks the
//! best learning rate per instance, and writes CSV/JSON reports plus
//! convergence traces.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use olpdhg_core::lp::{to_standard_form, GeneralLp, LpProblem, VarMap};
use olpdhg_core::metrics::{aggregate, classify, AggregateReport, ConvergenceClass, InstanceResult};
use olpdhg_core::online::{DualAnchor, OnlineConfig, Scheduler};
use olpdhg_core::pdhg::Status;
use olpdhg_core::precond::StaticScaling;
use olpdhg_core::solver::{solve_with_clock, Clock, Mode, SolveConfig, SolveReport, TracePoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate;
use crate::mps::{instance_name, read_mps};
use crate::trace::write_trace_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub tolerance: f64,
    pub iteration_limit: usize,
    pub time_limit: f64,
    /// Variant the others are compared to; the first variant if unset.
    pub baseline: Option<String>,
    pub check_stride: usize,
    pub trace_stride: usize,
    /// Worker threads; rayon's default when unset.
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        let d = SolveConfig::default();
        Settings {
            tolerance: d.tolerance,
            iteration_limit: d.iteration_limit,
            time_limit: d.time_limit,
            baseline: None,
            check_stride: d.check_stride,
            trace_stride: d.trace_stride,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: Option<String>,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_density")]
    pub density: f64,
    pub seed: u64,
}

fn default_density() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantSpec {
    pub name: String,
    pub mode: Mode,
    /// Learning-rate grid; 0 means no online preconditioning.
    pub lr: Vec<f64>,
    pub normalize: bool,
    pub phi: usize,
    pub scheduler: Scheduler,
    pub scaling: StaticScaling,
    pub restarts: bool,
    pub upper_cap: Option<f64>,
    pub dual_anchor: DualAnchor,
}

impl Default for VariantSpec {
    fn default() -> Self {
        VariantSpec {
            name: String::new(),
            mode: Mode::Vanilla,
            lr: vec![0.0],
            normalize: true,
            phi: 1,
            scheduler: Scheduler::Adagrad,
            scaling: StaticScaling::default(),
            restarts: true,
            upper_cap: None,
            dual_anchor: DualAnchor::Current,
        }
    }
}

impl VariantSpec {
    pub fn solve_config(&self, settings: &Settings, lr: f64) -> SolveConfig {
        let online = (lr > 0.0).then(|| OnlineConfig {
            lr,
            phi: self.phi,
            normalize: self.normalize,
            scheduler: self.scheduler,
            upper_cap: self.upper_cap,
            dual_anchor: self.dual_anchor,
            ..OnlineConfig::default()
        });
        SolveConfig {
            tolerance: settings.tolerance,
            iteration_limit: settings.iteration_limit,
            time_limit: settings.time_limit,
            mode: self.mode,
            scaling: self.scaling,
            online,
            check_stride: settings.check_stride,
            trace_stride: settings.trace_stride,
            restarts: self.restarts,
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default, rename = "instance")]
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub generated: Vec<GeneratedSpec>,
    #[serde(rename = "variant")]
    pub variants: Vec<VariantSpec>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let m: Manifest = toml::from_str(text)?;
        m.check()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn check(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.variants.is_empty(), "manifest lists no variants");
        for (k, v) in self.variants.iter().enumerate() {
            anyhow::ensure!(!v.name.is_empty(), "variant {k} has no name");
            anyhow::ensure!(
                self.variants[..k].iter().all(|o| o.name != v.name),
                "duplicate variant name '{}'",
                v.name
            );
            anyhow::ensure!(!v.lr.is_empty(), "variant '{}' has an empty lr grid", v.name);
            anyhow::ensure!(
                v.lr.iter().all(|l| *l >= 0.0 && l.is_finite()),
                "variant '{}' has a negative or non-finite lr",
                v.name
            );
            anyhow::ensure!(v.phi >= 1, "variant '{}' has phi = 0", v.name);
        }
        if let Some(b) = &self.settings.baseline {
            anyhow::ensure!(
                self.variants.iter().any(|v| &v.name == b),
                "baseline '{b}' is not a variant"
            );
        }
        Ok(())
    }

    pub fn baseline(&self) -> &str {
        self.settings.baseline.as_deref().unwrap_or(&self.variants[0].name)
    }
}

struct InstantClock(Instant);

impl Clock for InstantClock {
    fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// A loaded instance, or the reason it could not be loaded.
pub struct Loaded {
    pub name: String,
    pub problem: Result<(GeneralLp, LpProblem, VarMap), String>,
}

pub fn load_instances(manifest: &Manifest, base_dir: &Path) -> Vec<Loaded> {
    let mut out: Vec<Loaded> = manifest
        .instances
        .iter()
        .map(|spec| {
            let path = if spec.path.is_absolute() {
                spec.path.clone()
            } else {
                base_dir.join(&spec.path)
            };
            let name = spec.name.clone().unwrap_or_else(|| instance_name(&path));
            let problem = read_mps(&path).map_err(|e| e.to_string()).and_then(|gp| {
                to_standard_form(&gp)
                    .map(|(p, m)| (gp, p, m))
                    .map_err(|e| e.to_string())
            });
            if let Err(e) = &problem {
                log::warn!("instance {name}: {e}");
            }
            Loaded { name, problem }
        })
        .collect();
    for g in &manifest.generated {
        let p = generate::feasible_lp(g.rows, g.cols, g.density, g.seed);
        let gp = GeneralLp::from_standard(&p);
        let map = VarMap::identity(p.num_cols());
        out.push(Loaded {
            name: g.name.clone(),
            problem: Ok((gp, p, map)),
        });
    }
    out
}

/// One solve within a learning-rate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub instance: String,
    pub variant: String,
    pub lr: f64,
    pub status: Status,
    pub iterations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub instance: String,
    pub variant: String,
    pub class: ConvergenceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub aggregate: AggregateReport,
    /// Behaviour of each variant relative to the baseline, per instance.
    pub classes: Vec<ClassRow>,
}

pub struct SuiteOutput {
    pub results: Vec<InstanceResult>,
    pub grid: Vec<GridRun>,
    /// `(instance, variant, trace of the chosen run)`.
    pub traces: Vec<(String, String, Vec<TracePoint>)>,
    pub summary: BenchSummary,
}

/// Preference order for picking a run out of a grid: OPTIMAL first, then
/// fewer iterations, then the smaller learning rate.
pub fn select_best<T>(runs: &[(f64, T)], key: impl Fn(&T) -> (Status, usize)) -> Option<&(f64, T)> {
    runs.iter().min_by(|(la, a), (lb, b)| {
        let (sa, ia) = key(a);
        let (sb, ib) = key(b);
        (sa != Status::Optimal)
            .cmp(&(sb != Status::Optimal))
            .then(ia.cmp(&ib))
            .then(la.total_cmp(lb))
    })
}

fn load_error(instance: &str, variant: &str) -> InstanceResult {
    InstanceResult {
        instance: instance.to_string(),
        variant: variant.to_string(),
        status: Status::LoadError,
        iterations: 0,
        wall_seconds: 0.0,
        grid_seconds: 0.0,
        rel_primal: f64::NAN,
        rel_dual: f64::NAN,
        rel_gap: f64::NAN,
        objective: f64::NAN,
        lr: 0.0,
    }
}

fn run_job(
    inst: &Loaded,
    variant: &VariantSpec,
    settings: &Settings,
) -> (InstanceResult, Vec<GridRun>, Vec<TracePoint>) {
    let (gp, p, map) = match &inst.problem {
        Ok(v) => v,
        Err(_) => return (load_error(&inst.name, &variant.name), Vec::new(), Vec::new()),
    };
    let mut runs: Vec<(f64, SolveReport)> = Vec::new();
    let mut grid = Vec::new();
    let mut grid_seconds = 0.0;
    for &lr in &variant.lr {
        let cfg = variant.solve_config(settings, lr);
        let clock = InstantClock(Instant::now());
        let mut report = match solve_with_clock(p, &cfg, &clock) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{} / {} lr={lr}: {e}", inst.name, variant.name);
                continue;
            }
        };
        report.wall_seconds = clock.elapsed_seconds();
        grid_seconds += report.wall_seconds;
        log::info!(
            "{} / {} lr={lr}: {} after {} iterations",
            inst.name,
            variant.name,
            report.status,
            report.iterations
        );
        grid.push(GridRun {
            instance: inst.name.clone(),
            variant: variant.name.clone(),
            lr,
            status: report.status,
            iterations: report.iterations,
            wall_seconds: report.wall_seconds,
        });
        runs.push((lr, report));
    }
    let Some((lr, best)) = select_best(&runs, |r| (r.status, r.iterations)) else {
        let mut r = load_error(&inst.name, &variant.name);
        r.status = Status::NumericalError;
        return (r, grid, Vec::new());
    };
    let objective = map
        .recover_solution(&best.x)
        .map(|x| gp.objective_value(&x))
        .unwrap_or(f64::NAN);
    let result = InstanceResult {
        instance: inst.name.clone(),
        variant: variant.name.clone(),
        status: best.status,
        iterations: best.iterations,
        wall_seconds: best.wall_seconds,
        grid_seconds,
        rel_primal: best.residuals.rel_primal,
        rel_dual: best.residuals.rel_dual,
        rel_gap: best.residuals.rel_gap,
        objective,
        lr: *lr,
    };
    (result, grid, best.trace.clone())
}

/// Runs the whole manifest. Instance × variant pairs run in parallel; the
/// output order follows the manifest regardless.
pub fn run_suite(manifest: &Manifest, base_dir: &Path) -> anyhow::Result<SuiteOutput> {
    let instances = load_instances(manifest, base_dir);
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..manifest.variants.len()).map(move |v| (i, v)))
        .collect();
    let work = || -> Vec<_> {
        jobs.par_iter()
            .map(|&(i, v)| run_job(&instances[i], &manifest.variants[v], &manifest.settings))
            .collect()
    };
    let done = match manifest.settings.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(work),
        None => work(),
    };

    let mut results = Vec::with_capacity(done.len());
    let mut grid = Vec::new();
    let mut traces = Vec::new();
    for (r, g, t) in done {
        grid.extend(g);
        if r.status != Status::LoadError {
            traces.push((r.instance.clone(), r.variant.clone(), t));
        }
        results.push(r);
    }

    let baseline = manifest.baseline();
    let by_variant: Vec<(String, Vec<InstanceResult>)> = manifest
        .variants
        .iter()
        .map(|v| {
            let rs = results.iter().filter(|r| r.variant == v.name).cloned().collect();
            (v.name.clone(), rs)
        })
        .collect();
    let aggregate = aggregate(&by_variant, baseline)?;
    let mut classes = Vec::new();
    for inst in &instances {
        let Some(base) = results
            .iter()
            .find(|r| r.instance == inst.name && r.variant == baseline)
        else {
            continue;
        };
        for r in results
            .iter()
            .filter(|r| r.instance == inst.name && r.variant != baseline)
        {
            classes.push(ClassRow {
                instance: inst.name.clone(),
                variant: r.variant.clone(),
                class: classify(base.status, r.status),
            });
        }
    }
    Ok(SuiteOutput {
        results,
        grid,
        traces,
        summary: BenchSummary { aggregate, classes },
    })
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn trace_path(out_dir: &Path, instance: &str, variant: &str) -> PathBuf {
    out_dir
        .join("traces")
        .join(format!("{}_{}.csv", file_safe(instance), file_safe(variant)))
}

/// Writes `results.csv`, `grid.csv`, `aggregate.json` and
/// `traces/<instance>_<variant>.csv` under `out_dir`.
pub fn write_report(out_dir: &Path, out: &SuiteOutput) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir.join("traces"))?;
    let mut w = csv::Writer::from_path(out_dir.join("results.csv"))?;
    for r in &out.results {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out_dir.join("grid.csv"))?;
    for g in &out.grid {
        w.serialize(g)?;
    }
    w.flush()?;
    fs::write(
        out_dir.join("aggregate.json"),
        serde_json::to_string_pretty(&out.summary)? + "\n",
    )?;
    for (inst, var, t) in &out.traces {
        write_trace_file(&trace_path(out_dir, inst, var), t)?;
    }
    Ok(())
}
