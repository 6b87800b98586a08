//! Command line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use olpdhg_core::lp::to_standard_form;
use olpdhg_core::online::{OnlineConfig, Scheduler};
use olpdhg_core::pdhg::Status;
use olpdhg_core::precond::{StaticScaling, DEFAULT_RUIZ_ITERS};
use olpdhg_core::solver::{solve_with_clock, Clock, Mode, SolveConfig};

use crate::bench::{run_suite, write_report, Manifest};
use crate::mps::read_mps;
use crate::trace::write_trace_file;

pub const EXIT_OK: i32 = 0;
pub const EXIT_LIMIT: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "olpdhg",
    version,
    about = "PDHG linear programming solver with online preconditioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Vanilla,
    Pdlp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Adagrad,
    Fixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScalingArg {
    None,
    Ruiz,
    RuizL2,
    PockChambolle,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one MPS file (optionally gzip-compressed).
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "vanilla")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 50_000)]
        iter_limit: usize,
        /// Seconds.
        #[arg(long, default_value_t = 600.0)]
        time_limit: f64,
        /// Online learning rate; 0 turns online preconditioning off.
        #[arg(long, default_value_t = 0.0)]
        online_lr: f64,
        /// Update the preconditioners every this many iterations.
        #[arg(long, default_value_t = 20)]
        online_phi: usize,
        /// Normalise the online losses.
        #[arg(long)]
        online_normalize: bool,
        #[arg(long, value_enum, default_value = "adagrad")]
        online_scheduler: SchedulerArg,
        #[arg(long, value_enum, default_value = "ruiz-l2")]
        scaling: ScalingArg,
        /// Disable adaptive restarts (pdlp mode).
        #[arg(long)]
        no_restarts: bool,
        /// Constant step size instead of the adaptive rule (pdlp mode).
        #[arg(long)]
        fixed_stepsize: Option<f64>,
        /// Write the convergence trace to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a benchmark manifest and write a report directory.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Optimal => EXIT_OK,
        Status::IterationLimit | Status::TimeLimit => EXIT_LIMIT,
        Status::NumericalError => EXIT_NUMERICAL,
        Status::LoadError => EXIT_INPUT,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Solve {
            file,
            mode,
            tol,
            iter_limit,
            time_limit,
            online_lr,
            online_phi,
            online_normalize,
            online_scheduler,
            scaling,
            no_restarts,
            fixed_stepsize,
            trace,
        } => {
            let online = (online_lr > 0.0).then(|| OnlineConfig {
                lr: online_lr,
                phi: online_phi,
                normalize: online_normalize,
                scheduler: match online_scheduler {
                    SchedulerArg::Adagrad => Scheduler::Adagrad,
                    SchedulerArg::Fixed => Scheduler::Fixed,
                },
                ..OnlineConfig::default()
            });
            let cfg = SolveConfig {
                tolerance: tol,
                iteration_limit: iter_limit,
                time_limit,
                mode: match mode {
                    ModeArg::Vanilla => Mode::Vanilla,
                    ModeArg::Pdlp => Mode::Pdlp,
                },
                scaling: match scaling {
                    ScalingArg::None => StaticScaling::None,
                    ScalingArg::Ruiz => StaticScaling::Ruiz {
                        iters: DEFAULT_RUIZ_ITERS,
                    },
                    ScalingArg::RuizL2 => StaticScaling::RuizL2 {
                        iters: DEFAULT_RUIZ_ITERS,
                    },
                    ScalingArg::PockChambolle => StaticScaling::PockChambolle { beta: 1.0 },
                },
                online,
                restarts: !no_restarts,
                fixed_stepsize,
                ..SolveConfig::default()
            };
            solve_command(&file, &cfg, trace.as_deref())
        }
        Command::Bench { manifest, out } => bench_command(&manifest, &out),
    }
}

fn solve_command(file: &std::path::Path, cfg: &SolveConfig, trace: Option<&std::path::Path>) -> i32 {
    let gp = match read_mps(file) {
        Ok(gp) => gp,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let (p, map) = match to_standard_form(&gp) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let clock = WallClock(Instant::now());
    let report = match solve_with_clock(&p, cfg, &clock) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let seconds = clock.elapsed_seconds();
    let objective = map
        .recover_solution(&report.x)
        .map(|x| gp.objective_value(&x))
        .unwrap_or(f64::NAN);
    println!("instance     {}", gp.name);
    println!(
        "size         {} rows, {} cols (standard form {} x {})",
        gp.num_rows(),
        gp.num_cols(),
        p.num_rows(),
        p.num_cols()
    );
    println!("status       {}", report.status);
    println!("iterations   {}", report.iterations);
    println!("objective    {objective:.10e}");
    println!(
        "rel. resid.  primal {:.3e}  dual {:.3e}  gap {:.3e}",
        report.residuals.rel_primal, report.residuals.rel_dual, report.residuals.rel_gap
    );
    println!("restarts     {}", report.restarts);
    println!("seconds      {seconds:.3}");
    if let Some(path) = trace {
        if let Err(e) = write_trace_file(path, &report.trace) {
            eprintln!("error: writing trace: {e}");
            return EXIT_INPUT;
        }
    }
    exit_code(report.status)
}

fn bench_command(manifest: &std::path::Path, out: &std::path::Path) -> i32 {
    let m = match Manifest::load(manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let base = manifest.parent().unwrap_or(std::path::Path::new("."));
    let output = match run_suite(&m, base) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = write_report(out, &output) {
        eprintln!("error: writing report: {e:#}");
        return EXIT_INPUT;
    }
    for v in &output.summary.aggregate.variants {
        println!(
            "{:<16} #opt {:>3}/{:<3} iter sgm10 {:>10} time gm {:>9} imp/wors {}/{}",
            v.variant,
            v.num_optimal,
            v.attempted,
            v.iter_sgm10.map_or("-".into(), |x| format!("{x:.1}")),
            v.time_gm.map_or("-".into(), |x| format!("{x:.3}")),
            v.improved,
            v.worsened
        );
    }
    println!("report written to {}", out.display());
    EXIT_OK
}
