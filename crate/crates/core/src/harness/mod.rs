//! Config-driven experiment runner.
//!
//! Every optimizer in a config runs on every objective from the same `x0`.
//! Runs execute in parallel; results come back in declaration order and a
//! single writer emits all files, so output is byte-stable for a given
//! config. Wall-clock time is kept in memory only.

pub mod config;
pub mod summary;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::discrete::{run_discrete_lenient, RunOptions, RunReport, Stepper, StepperState};
use crate::error::ValidationError;
use crate::flow::{gadagrad_energy_residual, integrate, FlowProblem, IntegrateOptions};
use crate::objectives::{in_box, Objective};
use crate::ode::Method;
use crate::params::{map_preset_to_general, validate_params};
use crate::trajectory::{NuFloor, Trajectory};

pub use config::{
    default_x0, load_config, parse_config, ExperimentConfig, ObjectiveKind, ObjectiveSpec, OptimizerSpec, OUT_DIR_ENV,
};
pub use summary::{emit_summary, emit_summary_json, sort_reports, summary_rows, SummaryRow, SUMMARY_COLUMNS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}", validation_message(.0))]
    Validation(Vec<(String, ValidationError)>),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot write output: {0}")]
    Output(String),
}

fn validation_message(list: &[(String, ValidationError)]) -> String {
    let mut s = String::from("preset validation failed");
    for (name, err) in list {
        let conds: Vec<&str> = err.conditions().map(|c| c.as_str()).collect();
        s.push_str(&format!("; {name}: {}", conds.join(", ")));
    }
    s
}

impl HarnessError {
    /// Bad input (unreadable, malformed, or invalid config) as opposed to a
    /// failure while running or writing.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, HarnessError::Output(_))
    }
}

/// One optimizer on one objective.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub index: usize,
    pub objective: String,
    pub optimizer: String,
    pub trajectory: Trajectory,
    pub report: RunReport,
    /// Max `|residual|` of the G-AdaGrad energy identity, for flow runs.
    pub energy_residual: Option<f64>,
    /// False if the trajectory failed re-validation and will not be written.
    pub trajectory_valid: bool,
}

impl RunResult {
    pub fn file_name(&self, prefix: &str) -> String {
        format!(
            "{prefix}{:02}_{}_{}.csv",
            self.index,
            sanitize(&self.objective),
            sanitize(&self.optimizer)
        )
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct Job<'a> {
    index: usize,
    objective: &'a ObjectiveSpec,
    built: &'a dyn Objective,
    optimizer: &'a OptimizerSpec,
}

fn jobs<'a>(cfg: &'a ExperimentConfig, built: &'a [Box<dyn Objective>]) -> Vec<Job<'a>> {
    let mut out = Vec::new();
    for (oi, obj) in cfg.objectives.iter().enumerate() {
        for opt in &cfg.optimizers {
            out.push(Job {
                index: out.len(),
                objective: obj,
                built: built[oi].as_ref(),
                optimizer: opt,
            });
        }
    }
    out
}

fn check_trajectory(traj: &Trajectory, floor: NuFloor, report: &mut RunReport) -> bool {
    match traj.validate(floor) {
        Ok(()) => true,
        Err(e) => {
            report.error.get_or_insert_with(|| format!("trajectory rejected: {e}"));
            false
        }
    }
}

fn run_job(cfg: &ExperimentConfig, job: &Job<'_>) -> RunResult {
    let opt = job.optimizer;
    let stepper = Stepper {
        kind: opt.kind,
        preset: opt.preset,
        bias: opt.bias_mode,
        beta: opt.beta,
    };
    let schedule = cfg.schedule_for(opt).expect("schedule checked at load");
    let opts = RunOptions {
        stride: cfg.record_stride,
        threshold: cfg.threshold,
    };
    let init = StepperState::new(job.objective.x0.clone());
    let (trajectory, mut report) = run_discrete_lenient(&stepper, job.built, init, cfg.iterations, &schedule, opts);
    report.optimizer = opt.name.clone();
    report.objective = job.objective.name.clone();
    let trajectory_valid = check_trajectory(&trajectory, NuFloor::NonNegative, &mut report);
    RunResult {
        index: job.index,
        objective: job.objective.name.clone(),
        optimizer: opt.name.clone(),
        trajectory,
        report,
        energy_residual: None,
        trajectory_valid,
    }
}

fn build_objectives(cfg: &ExperimentConfig) -> Vec<Box<dyn Objective>> {
    cfg.objectives.iter().map(ObjectiveSpec::build).collect()
}

/// Runs every (objective, optimizer) pair of `cfg` with the discrete
/// steppers. Step failures are recorded per run and do not stop the others.
pub fn run_experiments(cfg: &ExperimentConfig) -> Vec<RunResult> {
    let built = build_objectives(cfg);
    let jobs = jobs(cfg, &built);
    jobs.par_iter().map(|job| run_job(cfg, job)).collect()
}

/// Report for a flow trajectory; epochs are integration steps.
fn flow_report(traj: &Trajectory, steps: u64, stride: usize, threshold: f64, objective: &dyn Objective) -> RunReport {
    let step_of = |k: usize| {
        if k + 1 == traj.len() {
            steps
        } else {
            (k * stride) as u64
        }
    };
    let (best_k, best_f) =
        traj.f_values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |(bk, bf), (k, &f)| if f < bf { (k, f) } else { (bk, bf) },
        );
    let r = objective.test_box();
    RunReport {
        optimizer: String::new(),
        objective: String::new(),
        iterations: steps,
        best_f,
        epoch_of_best: step_of(best_k),
        final_f: *traj.f_values.last().unwrap_or(&f64::NAN),
        final_grad_norm: *traj.grad_norms.last().unwrap_or(&f64::NAN),
        iters_to_threshold: traj.grad_norms.iter().position(|&g| g < threshold).map(step_of),
        threshold,
        nu_nonnegative: traj.min_nu() >= 0.0,
        left_test_box: traj.states.iter().any(|s| !in_box(&s.x, r)),
        error: None,
        wall_time: std::time::Duration::ZERO,
    }
}

/// Integrates the continuous flow of every preset optimizer in `cfg`
/// (SGD-momentum has no flow and is skipped). `nu(0)` comes from each
/// objective's `nu0`.
pub fn run_flows(cfg: &ExperimentConfig, method: Method, dt: f64, t_end: f64) -> Result<Vec<RunResult>, HarnessError> {
    let opts = IntegrateOptions::new(method, dt, t_end).with_stride(cfg.record_stride);
    let steps = opts.steps().map_err(|e| HarnessError::Config(e.to_string()))? as u64;
    let built = build_objectives(cfg);
    let jobs: Vec<Job<'_>> = jobs(cfg, &built)
        .into_iter()
        .filter(|j| j.optimizer.kind.preset_kind().is_some())
        .collect();
    let results = jobs
        .par_iter()
        .map(|job| {
            let opt = job.optimizer;
            let kind = opt.kind.preset_kind().expect("filtered");
            let started = std::time::Instant::now();
            let params = validate_params(map_preset_to_general(&opt.preset, kind))
                .map_err(|e| HarnessError::Validation(vec![(opt.name.clone(), e)]))?;
            let d = job.objective.dim;
            let problem = FlowProblem::new(job.built, params, job.objective.x0.clone(), vec![job.objective.nu0; d])
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let (trajectory, mut report, energy) = match integrate(&problem, opts) {
                Ok(traj) => {
                    let report = flow_report(&traj, steps, cfg.record_stride, cfg.threshold, job.built);
                    let energy = gadagrad_energy_residual(&traj, &problem)
                        .ok()
                        .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                    (traj, report, energy)
                }
                Err(e) => {
                    let mut report = flow_report(&Trajectory::default(), steps, 1, cfg.threshold, job.built);
                    report.error = Some(e.to_string());
                    (Trajectory::default(), report, None)
                }
            };
            report.optimizer = opt.name.clone();
            report.objective = job.objective.name.clone();
            report.wall_time = started.elapsed();
            let trajectory_valid =
                !trajectory.is_empty() && check_trajectory(&trajectory, NuFloor::Positive, &mut report);
            Ok(RunResult {
                index: job.index,
                objective: job.objective.name.clone(),
                optimizer: opt.name.clone(),
                trajectory,
                report,
                energy_residual: energy,
                trajectory_valid,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(results)
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Output(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| output_err(path, e))
}

/// What to emit besides the per-run trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Trajectories and `reports.json`.
    Runs,
    /// Additionally `summary_<objective>.csv` and `.json` per objective.
    Compare,
    /// Flow trajectories and `flow_reports.json`.
    Flows,
}

#[derive(serde::Serialize)]
struct ReportEntry<'a> {
    file: Option<String>,
    energy_residual_max: Option<f64>,
    #[serde(flatten)]
    report: &'a RunReport,
}

/// Writes `results` under `dir` and returns the written paths in order.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    results: &[RunResult],
    dir: &Path,
    kind: OutputKind,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let prefix = if kind == OutputKind::Flows { "flow" } else { "run" };
    let mut written = Vec::new();
    let mut entries = Vec::with_capacity(results.len());
    for r in results {
        let file = if r.trajectory_valid {
            let name = r.file_name(prefix);
            let path = dir.join(&name);
            let mut buf = Vec::new();
            r.trajectory.write_csv(&mut buf).map_err(|e| output_err(&path, e))?;
            write_file(&path, &buf)?;
            written.push(path);
            Some(name)
        } else {
            None
        };
        entries.push(ReportEntry {
            file,
            energy_residual_max: r.energy_residual,
            report: &r.report,
        });
    }
    let reports_name = if kind == OutputKind::Flows {
        "flow_reports.json"
    } else {
        "reports.json"
    };
    let path = dir.join(reports_name);
    let json = serde_json::to_string_pretty(&entries).map_err(|e| output_err(&path, e))?;
    write_file(&path, json.as_bytes())?;
    written.push(path);

    if kind == OutputKind::Compare {
        for obj in &cfg.objectives {
            let reports: Vec<RunReport> = results
                .iter()
                .filter(|r| r.objective == obj.name)
                .map(|r| r.report.clone())
                .collect();
            let stem = format!("summary_{}", sanitize(&obj.name));
            let csv_path = dir.join(format!("{stem}.csv"));
            let mut buf = Vec::new();
            emit_summary(&reports, &mut buf).map_err(|e| output_err(&csv_path, e))?;
            write_file(&csv_path, &buf)?;
            let json_path = dir.join(format!("{stem}.json"));
            write_file(&json_path, emit_summary_json(&reports).as_bytes())?;
            written.push(csv_path);
            written.push(json_path);
        }
    }
    Ok(written)
}

/// Runs `cfg` and writes trajectories, reports, and summary tables.
pub fn run_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<RunResult>, HarnessError> {
    let results = run_experiments(cfg);
    write_outputs(cfg, &results, dir, OutputKind::Compare)?;
    Ok(results)
}
