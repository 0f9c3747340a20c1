//! Experiment configuration: strict JSON schema and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discrete::{BiasMode, LrSchedule, StepperKind};
use crate::error::ValidationError;
use crate::objectives::{make_logistic, make_quadratic, make_rosenbrock, Objective};
use crate::params::{validate_preset, PresetParams};

use super::HarnessError;

/// Overrides `output_dir` from the config file.
pub const OUT_DIR_ENV: &str = "SSMOPT_OUT_DIR";

pub const DEFAULT_ITERATIONS: u64 = 1000;
pub const DEFAULT_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_NU0: f64 = 1e-2;
pub const DEFAULT_OUTPUT_DIR: &str = "ssmopt-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    Rosenbrock,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    kind: ObjectiveKind,
    name: Option<String>,
    dim: Option<usize>,
    condition_number: Option<f64>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    x0: Option<Vec<f64>>,
    nu0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    kind: StepperKind,
    name: Option<String>,
    b1: Option<f64>,
    b2: Option<f64>,
    b3: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    eta: Option<f64>,
    c: Option<f64>,
    bias_mode: Option<BiasMode>,
    beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    objective: Option<RawObjective>,
    objectives: Option<Vec<RawObjective>>,
    optimizers: Vec<RawOptimizer>,
    iterations: Option<u64>,
    record_stride: Option<usize>,
    #[serde(default)]
    schedule: Vec<(u64, f64)>,
    threshold: Option<f64>,
    output_dir: Option<PathBuf>,
}

/// A fully resolved objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub name: String,
    pub dim: usize,
    pub condition_number: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    /// Initial second moment for continuous flows.
    pub nu0: f64,
}

impl ObjectiveSpec {
    pub fn build(&self) -> Box<dyn Objective> {
        match self.kind {
            ObjectiveKind::Quadratic => Box::new(make_quadratic(self.dim, self.condition_number)),
            ObjectiveKind::Rosenbrock => Box::new(make_rosenbrock(self.dim)),
            ObjectiveKind::Logistic => Box::new(make_logistic(self.dim, self.n_samples, self.seed)),
        }
    }
}

/// A fully resolved optimizer entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSpec {
    pub name: String,
    pub kind: StepperKind,
    pub preset: PresetParams,
    pub bias_mode: BiasMode,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub objectives: Vec<ObjectiveSpec>,
    pub optimizers: Vec<OptimizerSpec>,
    pub iterations: u64,
    pub record_stride: usize,
    pub schedule: Vec<(u64, f64)>,
    pub threshold: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// `SSMOPT_OUT_DIR` if set and non-empty, else the configured directory.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }

    pub fn schedule_for(&self, opt: &OptimizerSpec) -> Result<LrSchedule, HarnessError> {
        LrSchedule::new(opt.preset.eta, self.schedule.clone())
            .map_err(|e| HarnessError::Config(format!("optimizer {}: {e}", opt.name)))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a config document. Unknown keys are rejected, and
/// every preset is validated before anything runs.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, HarnessError> {
    let raw_objectives = match (raw.objective, raw.objectives) {
        (Some(o), None) => vec![o],
        (None, Some(list)) if !list.is_empty() => list,
        (None, Some(_)) => return Err(HarnessError::Config("objectives must not be empty".into())),
        (None, None) => return Err(HarnessError::Config("missing objective or objectives".into())),
        (Some(_), Some(_)) => {
            return Err(HarnessError::Config(
                "give either objective or objectives, not both".into(),
            ))
        }
    };
    if raw.optimizers.is_empty() {
        return Err(HarnessError::Config("at least one optimizer is required".into()));
    }

    let objectives = raw_objectives
        .into_iter()
        .map(resolve_objective)
        .collect::<Result<Vec<_>, _>>()?;
    for (i, a) in objectives.iter().enumerate() {
        if objectives[..i].iter().any(|b| b.name == a.name) {
            return Err(HarnessError::Config(format!("duplicate objective name {:?}", a.name)));
        }
    }

    let mut failures: Vec<(String, ValidationError)> = Vec::new();
    let mut optimizers = Vec::with_capacity(raw.optimizers.len());
    for r in raw.optimizers {
        let (spec, err) = resolve_optimizer(r)?;
        if let Some(e) = err {
            failures.push((spec.name.clone(), e));
        }
        optimizers.push(spec);
    }
    if !failures.is_empty() {
        return Err(HarnessError::Validation(failures));
    }

    let threshold = raw.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(HarnessError::Config(format!(
            "threshold = {threshold} must be positive"
        )));
    }
    let record_stride = raw.record_stride.unwrap_or(1);
    if record_stride == 0 {
        return Err(HarnessError::Config("record_stride must be positive".into()));
    }
    let cfg = ExperimentConfig {
        objectives,
        optimizers,
        iterations: raw.iterations.unwrap_or(DEFAULT_ITERATIONS),
        record_stride,
        schedule: raw.schedule,
        threshold,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
    };
    for opt in &cfg.optimizers {
        cfg.schedule_for(opt)?;
    }
    Ok(cfg)
}

fn resolve_objective(r: RawObjective) -> Result<ObjectiveSpec, HarnessError> {
    let bad = |msg: String| Err(HarnessError::Config(msg));
    let (dim, name) = match r.kind {
        ObjectiveKind::Quadratic => {
            if r.n_samples.is_some() || r.seed.is_some() {
                return bad("quadratic takes no n_samples or seed".into());
            }
            let dim = r.dim.unwrap_or(2);
            let cond = r.condition_number.unwrap_or(1.0);
            if !(cond >= 1.0) || !cond.is_finite() {
                return bad(format!("condition_number = {cond} must be >= 1"));
            }
            (dim, format!("quadratic_d{dim}_c{cond}"))
        }
        ObjectiveKind::Rosenbrock => {
            if r.condition_number.is_some() || r.n_samples.is_some() || r.seed.is_some() {
                return bad("rosenbrock takes only dim".into());
            }
            let dim = r.dim.unwrap_or(2);
            if dim < 2 {
                return bad("rosenbrock needs dim >= 2".into());
            }
            (dim, format!("rosenbrock_d{dim}"))
        }
        ObjectiveKind::Logistic => {
            if r.condition_number.is_some() {
                return bad("logistic takes no condition_number".into());
            }
            let dim = r.dim.unwrap_or(5);
            let n = r.n_samples.unwrap_or(200);
            if n == 0 {
                return bad("n_samples must be positive".into());
            }
            (dim, format!("logistic_d{dim}_n{n}_s{}", r.seed.unwrap_or(0)))
        }
    };
    if dim == 0 {
        return bad("dim must be positive".into());
    }
    let x0 = match r.x0 {
        Some(x0) if x0.len() != dim => return bad(format!("x0 has {} entries, dim is {dim}", x0.len())),
        Some(x0) if x0.iter().any(|v| !v.is_finite()) => return bad("x0 must be finite".into()),
        Some(x0) => x0,
        None => default_x0(r.kind, dim),
    };
    let nu0 = r.nu0.unwrap_or(DEFAULT_NU0);
    if !(nu0 > 0.0) || !nu0.is_finite() {
        return bad(format!("nu0 = {nu0} must be positive"));
    }
    Ok(ObjectiveSpec {
        kind: r.kind,
        name: r.name.unwrap_or(name),
        dim,
        condition_number: r.condition_number.unwrap_or(1.0),
        n_samples: r.n_samples.unwrap_or(200),
        seed: r.seed.unwrap_or(0),
        x0,
        nu0,
    })
}

/// Ones for the quadratic, the classic `(-1.2, 1, ...)` for Rosenbrock,
/// zeros for logistic regression.
pub fn default_x0(kind: ObjectiveKind, dim: usize) -> Vec<f64> {
    match kind {
        ObjectiveKind::Quadratic => vec![1.0; dim],
        ObjectiveKind::Rosenbrock => (0..dim).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect(),
        ObjectiveKind::Logistic => vec![0.0; dim],
    }
}

fn resolve_optimizer(r: RawOptimizer) -> Result<(OptimizerSpec, Option<ValidationError>), HarnessError> {
    let d = PresetParams::default();
    let preset = PresetParams {
        b1: r.b1.unwrap_or(d.b1),
        b2: r.b2.unwrap_or(d.b2),
        b3: r.b3.unwrap_or(d.b3),
        delta: r.delta.unwrap_or(d.delta),
        epsilon: r.epsilon.unwrap_or(d.epsilon),
        eta: r.eta.unwrap_or(d.eta),
        c: r.c.unwrap_or(d.c),
    };
    let name = r.name.unwrap_or_else(|| r.kind.name().to_string());
    let beta = r.beta.unwrap_or(0.9);
    if r.kind != StepperKind::SgdMomentum && r.beta.is_some() {
        return Err(HarnessError::Config(format!(
            "optimizer {name}: beta applies only to sgd_momentum"
        )));
    }
    let err = match r.kind.preset_kind() {
        Some(kind) => validate_preset(preset, kind).err(),
        None => {
            if !(0.0..1.0).contains(&beta) {
                return Err(HarnessError::Config(format!(
                    "optimizer {name}: beta = {beta} must lie in [0, 1)"
                )));
            }
            if !(preset.eta > 0.0) {
                return Err(HarnessError::Config(format!("optimizer {name}: eta must be positive")));
            }
            None
        }
    };
    Ok((
        OptimizerSpec {
            name,
            kind: r.kind,
            preset,
            bias_mode: r.bias_mode.unwrap_or_default(),
            beta,
        },
        err,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Condition;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"objective": {"kind": "quadratic"}, "optimizers": [{"kind": "adamssm"}]}"#).unwrap();
        assert_eq!(cfg.iterations, DEFAULT_ITERATIONS);
        assert_eq!(cfg.threshold, 1e-4);
        assert_eq!(cfg.record_stride, 1);
        assert_eq!(cfg.objectives[0].x0, vec![1.0, 1.0]);
        assert_eq!(cfg.optimizers[0].preset, PresetParams::default());
        assert_eq!(cfg.optimizers[0].bias_mode, BiasMode::Rate);
        assert_eq!(cfg.optimizers[0].name, "adamssm");
    }

    #[test]
    fn preset_violation_is_named() {
        let err = parse_config(
            r#"{"objective": {"kind": "quadratic"},
                "optimizers": [{"kind": "adam", "b1": 0.5, "b2": 0.6}, {"kind": "adamssm", "b3": 0.0}]}"#,
        )
        .unwrap_err();
        match err {
            HarnessError::Validation(list) => {
                assert_eq!(list.len(), 2);
                assert!(list[0].1.contains(Condition::B2BelowB1));
                assert!(list[1].1.contains(Condition::B3Positive));
                assert!(err_text(&list).contains("b2 < b1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn err_text(list: &[(String, ValidationError)]) -> String {
        HarnessError::Validation(list.to_vec()).to_string()
    }

    #[test]
    fn unknown_key_is_parse_error() {
        let err = parse_config(
            r#"{"objective": {"kind": "quadratic"},
                "optimizers": [{"kind": "sgd_momentum", "momentum_typo": 0.9}]}"#,
        )
        .unwrap_err();
        match err {
            HarnessError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("momentum_typo"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let cases = [
            r#"{"objective": {"kind": "quadratic"}, "optimizers": []}"#,
            r#"{"optimizers": [{"kind": "adam"}]}"#,
            r#"{"objective": {"kind": "rosenbrock", "dim": 1}, "optimizers": [{"kind": "adam"}]}"#,
            r#"{"objective": {"kind": "quadratic", "x0": [1]}, "optimizers": [{"kind": "adam"}]}"#,
            r#"{"objective": {"kind": "quadratic"}, "optimizers": [{"kind": "adam"}], "schedule": [[5, 0.1], [5, 0.1]]}"#,
            r#"{"objective": {"kind": "quadratic"}, "optimizers": [{"kind": "adam", "beta": 0.5}]}"#,
            r#"{"objectives": [{"kind": "quadratic"}, {"kind": "quadratic"}], "optimizers": [{"kind": "adam"}]}"#,
        ];
        for c in cases {
            assert!(matches!(parse_config(c), Err(HarnessError::Config(_))), "{c}");
        }
    }

    #[test]
    fn env_overrides_output_dir() {
        let cfg = parse_config(
            r#"{"objective": {"kind": "quadratic"}, "optimizers": [{"kind": "adam"}], "output_dir": "from_file"}"#,
        )
        .unwrap();
        // only read here, to avoid racing other tests on the variable
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => assert_eq!(cfg.resolved_output_dir(), PathBuf::from(v)),
            _ => assert_eq!(cfg.resolved_output_dir(), PathBuf::from("from_file")),
        }
    }
}
