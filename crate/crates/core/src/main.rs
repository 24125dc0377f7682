use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::Rng;

use saddle::error::{Error, Result};
use saddle::harness::{self, ExecOptions, PlotKind, TraceFormat};
use saddle::problems::{fd_check, PROBLEM_NAMES};
use saddle::rng::{stream, StreamPurpose};
use saddle::{OptimizerKind, ProblemSpec, SaddleVector};

#[derive(Parser)]
#[command(name = "saddle", version, about = "Saddle-point optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config over all its seeds and write traces plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        /// grad_norms, mvi or rate
        #[arg(long)]
        plot: Option<String>,
    },
    /// List built-in problems and optimizers.
    List,
    /// Finite-difference check of a problem's field at random points.
    Check {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run a config for several iteration counts and fit the rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<harness::RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    harness::parse_config(&text)
}

fn cli_arg<T: std::str::FromStr<Err = Error>>(flag: &str, value: &str) -> Result<T> {
    value.parse().map_err(|e: Error| Error::Config {
        path: flag.to_string(),
        message: e.to_string(),
    })
}

fn check(name: &str, points: usize, seed: u64) -> Result<bool> {
    let p = ProblemSpec::by_name(name).map_err(|e| Error::Config {
        path: "--problem".into(),
        message: e.to_string(),
    })?;
    let mut rng = stream(seed, 0, StreamPurpose::Probe);
    let (mut worst_rel, mut worst_abs, mut failed) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..points {
        let z: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = fd_check(&p, &SaddleVector::new(z, p.n1())?, 1e-5)?;
        worst_rel = worst_rel.max(r.max_rel_err);
        worst_abs = worst_abs.max(r.max_abs_err);
        failed += usize::from(!r.pass);
    }
    println!(
        "{name}: {}/{points} points pass, max rel err {worst_rel:.3e}, max abs err {worst_abs:.3e}",
        points - failed
    );
    Ok(failed == 0)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, format, plot } => {
            let cfg = load(&config)?;
            let opts = ExecOptions {
                out_dir: out,
                format: cli_arg::<TraceFormat>("--format", &format)?,
                plot: plot.map(|k| cli_arg::<PlotKind>("--plot", &k)).transpose()?,
            };
            let summary = harness::execute(&cfg, &opts)?;
            for r in &summary.runs {
                for w in &r.warnings {
                    eprintln!("warning (seed {}): {w}", r.seed);
                }
            }
            println!(
                "{} on {}: {} seed(s), N = {}, final |V| mean {:.6e}, avg |V|^2 mean {:.6e}",
                summary.optimizer,
                summary.problem,
                summary.runs.len(),
                summary.n_iters,
                summary.final_norm_v.mean,
                summary.final_avg_sq_norm.mean
            );
        }
        Command::List => {
            println!("problems:");
            for name in PROBLEM_NAMES {
                println!("  {name}");
            }
            println!("optimizers:");
            for k in OptimizerKind::ALL {
                println!("  {k}");
            }
        }
        Command::Check { problem, points, seed } => {
            if !check(&problem, points, seed)? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep { config, ns, out } => {
            let cfg = load(&config)?;
            let report = harness::sweep(&cfg, &ns, &ExecOptions { out_dir: out, ..Default::default() })?;
            for p in &report.points {
                println!("N = {:>8}  avg |V|^2 = {:.6e}", p.n_iters, p.avg_sq_norm);
            }
            match report.fit {
                Some(f) => println!("slope {:.4}, intercept {:.4}, r2 {:.4}", f.slope, f.intercept, f.r2),
                None => println!("slope n/a (need at least three distinct N)"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
