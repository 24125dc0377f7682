//! Experiment configuration files.
//!
//! Configs are JSON. Hyper-parameters sit at the top level next to the
//! problem and optimizer; several fields accept a shorthand:
//!
//! ```json
//! {"problem": "bilinear", "optimizer": "amsgrad_eg", "eta": 0.1,
//!  "N": 100, "z0": [1, 0], "seeds": [7]}
//! ```
//!
//! Serializing a parsed config yields the fully expanded form, which parses
//! back to an equal value.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::ProbeReference;
use crate::error::{Error, Result};
use crate::optimizers::OptimizerKind;
use crate::problems::{FeasibleSet, NoiseModel, ProblemSpec, PROBLEM_NAMES};
use crate::schedule::{BatchSchedule, Beta1Schedule, DualDecay, ScheduleSpec};
use crate::vector::SaddleVector;

/// Problem name plus its optional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    /// Bilinear coupling matrix, as rows.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    /// Block sizes of the quadratic saddle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible: Option<FeasibleSet>,
    /// Shorthand for a centred ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Overrides (or supplies) the analytic solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
}

impl ProblemConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            matrix: None,
            a: None,
            b: None,
            n1: None,
            n2: None,
            feasible: None,
            radius: None,
            reference: None,
        }
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let at = |field: &str| format!("problem.{field}");
        let wrap = |field: &str, e: Error| Error::config(at(field), e.to_string());
        let only_for = |field: &str, set: bool, allowed: &str| -> Result<()> {
            if set && self.name != allowed {
                return Err(Error::config(
                    at(field),
                    format!("not a parameter of problem `{}`", self.name),
                ));
            }
            Ok(())
        };
        if !PROBLEM_NAMES.contains(&self.name.as_str()) {
            return Err(Error::config(
                at("name"),
                format!(
                    "unknown problem `{}`, expected one of {}",
                    self.name,
                    PROBLEM_NAMES.join(", ")
                ),
            ));
        }
        only_for("A", self.matrix.is_some(), "bilinear")?;
        only_for("a", self.a.is_some(), "bilinear")?;
        only_for("b", self.b.is_some(), "bilinear")?;
        only_for("n1", self.n1.is_some(), "quadratic_saddle")?;
        only_for("n2", self.n2.is_some(), "quadratic_saddle")?;

        let mut p = match self.name.as_str() {
            "bilinear" => {
                let matrix = self.matrix.clone().unwrap_or_else(|| vec![vec![1.0]]);
                let n1 = matrix.len();
                let n2 = matrix.first().map_or(0, Vec::len);
                let a = self.a.clone().unwrap_or_else(|| vec![0.0; n1]);
                let b = self.b.clone().unwrap_or_else(|| vec![0.0; n2]);
                ProblemSpec::bilinear(&matrix, a, b).map_err(|e| wrap("A", e))?
            }
            "quadratic_saddle" => {
                ProblemSpec::quadratic_saddle(self.n1.unwrap_or(1), self.n2.unwrap_or(1))
                    .map_err(|e| wrap("n1", e))?
            }
            other => ProblemSpec::by_name(other).map_err(|e| wrap("name", e))?,
        };
        let feasible = match (&self.feasible, self.radius) {
            (Some(_), Some(_)) => {
                return Err(Error::config(at("radius"), "give either `feasible` or `radius`"))
            }
            (Some(f), None) => Some(f.clone()),
            (None, Some(r)) => Some(FeasibleSet::ball(r)),
            (None, None) => None,
        };
        if let Some(f) = feasible {
            p = p.with_feasible(f).map_err(|e| wrap("feasible", e))?;
        }
        if let Some(r) = &self.reference {
            let r = SaddleVector::new(r.clone(), p.n1()).map_err(|e| wrap("reference", e))?;
            p = p.with_reference(r).map_err(|e| wrap("reference", e))?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerKind,
    pub schedules: ScheduleSpec,
    pub noise: NoiseModel,
    pub z0: Vec<f64>,
    pub n_iters: usize,
    pub seeds: Vec<u64>,
    pub record_trajectory: bool,
    pub probe_reference: ProbeReference,
    pub output: PathBuf,
    pub trace_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ProblemField {
    Name(String),
    Full(ProblemConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Beta1Field {
    Value(f64),
    Named(Beta1Name),
    Full(Beta1Schedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Beta1Name {
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum BatchField {
    Size(usize),
    Named(BatchName),
    Full(BatchSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BatchName {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseField {
    Named(NoiseName),
    Full(NoiseModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NoiseName {
    None,
}

/// On-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    problem: ProblemField,
    optimizer: OptimizerKind,
    eta: f64,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    beta1: Option<Beta1Field>,
    #[serde(default = "default_beta2")]
    beta2: f64,
    #[serde(default)]
    dual_decay: Option<DualDecay>,
    #[serde(default)]
    batch: Option<BatchField>,
    #[serde(default)]
    noise: Option<NoiseField>,
    z0: Vec<f64>,
    #[serde(rename = "N")]
    n_iters: usize,
    seeds: Vec<u64>,
    #[serde(default)]
    record_trajectory: bool,
    #[serde(default)]
    probe_reference: ProbeReference,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default = "default_trace_every")]
    trace_every: usize,
}

fn default_delta() -> f64 {
    ScheduleSpec::default().delta
}

fn default_beta2() -> f64 {
    ScheduleSpec::default().beta2
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_trace_every() -> usize {
    1
}

impl RunConfig {
    /// Minimal config with every default applied.
    pub fn new(problem: ProblemConfig, optimizer: OptimizerKind, eta: f64, z0: Vec<f64>, n_iters: usize) -> Self {
        Self {
            problem,
            optimizer,
            schedules: ScheduleSpec {
                eta,
                ..ScheduleSpec::default()
            },
            noise: NoiseModel::None,
            z0,
            n_iters,
            seeds: vec![0],
            record_trajectory: false,
            probe_reference: ProbeReference::default(),
            output: default_output(),
            trace_every: 1,
        }
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        self.problem.build()
    }

    pub fn z0_vector(&self) -> Result<SaddleVector> {
        let p = self.problem_spec()?;
        if self.z0.len() != p.dim() {
            return Err(Error::config(
                "z0",
                format!("expected {} coordinates for `{}`, got {}", p.dim(), p.name(), self.z0.len()),
            ));
        }
        SaddleVector::new(self.z0.clone(), p.n1()).map_err(|e| Error::config("z0", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problem_spec()?;
        self.z0_vector()?;
        if self.n_iters == 0 {
            return Err(Error::config("N", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        if self.trace_every == 0 {
            return Err(Error::config("trace_every", "must be at least 1"));
        }
        self.schedules
            .validate()
            .map_err(|e| Error::config("schedules", e.to_string()))?;
        self.noise.validate().map_err(|e| Error::config("noise", e.to_string()))?;
        if self.optimizer.is_adagrad() && !matches!(self.schedules.batch, BatchSchedule::Constant { .. }) {
            return Err(Error::config(
                "batch",
                format!("{} requires a constant batch size", self.optimizer),
            ));
        }
        if self.schedules.dual_decay.is_some() && !self.optimizer.supports_dual_decay() {
            return Err(Error::config(
                "dual_decay",
                format!("{} has no dual-rate decay", self.optimizer),
            ));
        }
        match &self.probe_reference {
            ProbeReference::Analytic | ProbeReference::OneSided if p.reference().is_none() => {
                return Err(Error::config(
                    "probe_reference",
                    format!("problem `{}` has no analytic reference; use `final` or a literal", p.name()),
                ))
            }
            ProbeReference::Literal(v) if v.len() != p.dim() => {
                return Err(Error::config(
                    "probe_reference",
                    format!("literal reference needs {} coordinates", p.dim()),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical JSON: every field explicit.
    pub fn to_json(&self) -> String {
        let file = ConfigFile {
            problem: ProblemField::Full(self.problem.clone()),
            optimizer: self.optimizer,
            eta: self.schedules.eta,
            delta: self.schedules.delta,
            beta1: Some(Beta1Field::Full(self.schedules.beta1)),
            beta2: self.schedules.beta2,
            dual_decay: self.schedules.dual_decay,
            batch: Some(BatchField::Full(self.schedules.batch)),
            noise: Some(NoiseField::Full(self.noise)),
            z0: self.z0.clone(),
            n_iters: self.n_iters,
            seeds: self.seeds.clone(),
            record_trajectory: self.record_trajectory,
            probe_reference: self.probe_reference.clone(),
            output: self.output.clone(),
            trace_every: self.trace_every,
        };
        serde_json::to_string_pretty(&file).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;

    let problem = match file.problem {
        ProblemField::Name(name) => ProblemConfig::named(&name),
        ProblemField::Full(p) => p,
    };
    let beta1 = match file.beta1 {
        None => ScheduleSpec::default().beta1,
        Some(Beta1Field::Value(value)) => Beta1Schedule::Constant { value },
        Some(Beta1Field::Named(Beta1Name::Harmonic)) => Beta1Schedule::Harmonic,
        Some(Beta1Field::Full(s)) => s,
    };
    let batch = match file.batch {
        None => ScheduleSpec::default().batch,
        Some(BatchField::Size(size)) => BatchSchedule::Constant { size },
        Some(BatchField::Named(BatchName::Linear)) => BatchSchedule::Linear,
        Some(BatchField::Full(b)) => b,
    };
    let noise = match file.noise {
        None | Some(NoiseField::Named(NoiseName::None)) => NoiseModel::None,
        Some(NoiseField::Full(n)) => n,
    };
    let cfg = RunConfig {
        problem,
        optimizer: file.optimizer,
        schedules: ScheduleSpec {
            beta1,
            beta2: file.beta2,
            eta: file.eta,
            delta: file.delta,
            dual_decay: file.dual_decay,
            batch,
        },
        noise,
        z0: file.z0,
        n_iters: file.n_iters,
        seeds: file.seeds,
        record_trajectory: file.record_trajectory,
        probe_reference: file.probe_reference,
        output: file.output,
        trace_every: file.trace_every,
    };
    cfg.validate()?;
    Ok(cfg)
}
