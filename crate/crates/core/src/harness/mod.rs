//! Experiment orchestration: run a config over its seeds (in parallel),
//! write traces, summaries and plots.

pub mod config;
pub mod plot;
pub mod trace;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{parse_config, ProblemConfig, RunConfig};
pub use plot::{emit_plot, LabeledTrace, PlotKind};
pub use trace::{read_trace, write_trace, TraceFormat, TraceMeta, CSV_HEADER};

use crate::diagnostics::{lemma_audit, rate_fit, AuditStatus, RateFit, TraceRow};
use crate::error::{Error, Result};
use crate::optimizers::{run, RunOptions, RunResult};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "SADDLE_WORKERS";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecOptions {
    /// Overrides the config's `output` directory.
    pub out_dir: Option<PathBuf>,
    pub format: TraceFormat,
    pub plot: Option<PlotKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut sum, mut min, mut max) = (0usize, 0.0, f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        Self {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub trace: PathBuf,
    pub selected_index: usize,
    pub max_norm_seen: f64,
    pub momentum_max_norm: f64,
    pub evaluations: u64,
    pub samples: u64,
    pub lemma_audit: AuditStatus,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub problem: String,
    pub optimizer: String,
    pub n_iters: usize,
    pub final_norm_v: Stats,
    pub final_norm_vx: Stats,
    pub final_avg_sq_norm: Stats,
    pub runs: Vec<SeedSummary>,
}

/// Thread count from [`WORKERS_ENV`], or rayon's default when unset.
pub fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count()? {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// One run per seed, in seed order. Results do not depend on scheduling.
pub fn run_seeds(cfg: &RunConfig) -> Result<Vec<(u64, RunResult)>> {
    cfg.validate()?;
    let p = cfg.problem_spec()?;
    let z0 = cfg.z0_vector()?;
    pool()?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let opts = RunOptions {
                    n_iters: cfg.n_iters,
                    seed,
                    run_id: 0,
                    record_trajectory: cfg.record_trajectory,
                    trace_every: cfg.trace_every,
                    probe_reference: cfg.probe_reference.clone(),
                };
                run(cfg.optimizer, &p, &cfg.noise, &cfg.schedules, &z0, &opts).map(|r| (seed, r))
            })
            .collect()
    })
}

fn check_audits(results: &[(u64, RunResult)]) -> Result<()> {
    for (seed, r) in results {
        if r.monotonicity.violations > 0 {
            return Err(Error::Audit(format!(
                "seed {seed}: preconditioner decreased {} times (worst drop {:e})",
                r.monotonicity.violations, r.monotonicity.worst
            )));
        }
    }
    Ok(())
}

fn final_row(r: &RunResult) -> &TraceRow {
    r.trace.last().expect("runs have at least one row")
}

fn out_dir(cfg: &RunConfig, opts: &ExecOptions) -> Result<PathBuf> {
    let dir = opts.out_dir.clone().unwrap_or_else(|| cfg.output.clone());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs every seed, writes `trace_seed{S}.{csv,jsonl}` (+ metadata),
/// `summary.json` and the optional plot into the output directory.
pub fn execute(cfg: &RunConfig, opts: &ExecOptions) -> Result<Summary> {
    let results = run_seeds(cfg)?;
    check_audits(&results)?;
    let p = cfg.problem_spec()?;
    let dir = out_dir(cfg, opts)?;
    let hash = cfg.hash();

    let mut runs = Vec::with_capacity(results.len());
    for (seed, r) in &results {
        let path = dir.join(format!("trace_seed{seed}.{}", opts.format.extension()));
        write_trace(&r.trace, &path, opts.format, &TraceMeta::new(hash.clone(), *seed))?;
        runs.push(SeedSummary {
            seed: *seed,
            trace: path,
            selected_index: r.selected_index,
            max_norm_seen: r.max_norm_seen,
            momentum_max_norm: r.momentum_max_norm,
            evaluations: r.evaluations,
            samples: r.samples,
            lemma_audit: lemma_audit(r, &p).status,
            warnings: r.warnings.clone(),
        });
    }
    let summary = Summary {
        config_hash: hash,
        problem: p.name().to_string(),
        optimizer: cfg.optimizer.to_string(),
        n_iters: cfg.n_iters,
        final_norm_v: Stats::of(results.iter().map(|(_, r)| final_row(r).norm_v)),
        final_norm_vx: Stats::of(results.iter().map(|(_, r)| final_row(r).norm_vx)),
        final_avg_sq_norm: Stats::of(results.iter().map(|(_, r)| final_row(r).avg_sq_norm)),
        runs,
    };
    write_json(&dir.join("summary.json"), &summary)?;

    if let Some(kind) = opts.plot {
        let traces: Vec<LabeledTrace> = results
            .into_iter()
            .map(|(seed, r)| LabeledTrace {
                label: format!("seed {seed}"),
                rows: r.trace,
            })
            .collect();
        emit_plot(&traces, kind, &dir.join(format!("plot_{}.svg", kind.name())))?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_iters: usize,
    /// Final `avg_sq_norm`, averaged over seeds.
    pub avg_sq_norm: f64,
    pub final_norm_v: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub points: Vec<SweepPoint>,
    /// Log-log fit of `avg_sq_norm` against `N` (needs three or more `N`).
    pub fit: Option<RateFit>,
}

/// Re-runs the config for every `N` in `ns`; writes `sweep.json` and a
/// rate plot into the output directory.
pub fn sweep(cfg: &RunConfig, ns: &[usize], opts: &ExecOptions) -> Result<SweepReport> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::config("ns", "expected a list of positive iteration counts"));
    }
    let mut points = Vec::with_capacity(ns.len());
    let mut traces = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut c = cfg.clone();
        c.n_iters = n;
        let results = run_seeds(&c)?;
        check_audits(&results)?;
        let finals: Vec<TraceRow> = results.iter().map(|(_, r)| *final_row(r)).collect();
        let avg = Stats::of(finals.iter().map(|r| r.avg_sq_norm)).mean;
        points.push(SweepPoint {
            n_iters: n,
            avg_sq_norm: avg,
            final_norm_v: Stats::of(finals.iter().map(|r| r.norm_v)),
        });
        traces.push(LabeledTrace {
            label: format!("N={n}"),
            rows: vec![TraceRow {
                avg_sq_norm: avg,
                ..finals[0]
            }],
        });
    }
    let fit_points: Vec<(f64, f64)> = points.iter().map(|p| (p.n_iters as f64, p.avg_sq_norm)).collect();
    let report = SweepReport {
        config_hash: cfg.hash(),
        points,
        fit: rate_fit(&fit_points).ok(),
    };
    let dir = out_dir(cfg, opts)?;
    write_json(&dir.join("sweep.json"), &report)?;
    if traces.len() > 1 {
        emit_plot(&traces, PlotKind::Rate, &dir.join("plot_rate.svg"))?;
    }
    Ok(report)
}
