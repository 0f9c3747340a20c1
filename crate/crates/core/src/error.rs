use std::fmt;

use thiserror::Error;

use crate::state::FlowState;

/// One named inequality from the parameter or preset conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Finite,
    CPositive,
    CBelowOne,
    Lambda2Positive,
    Lambda3Positive,
    Lambda4NonNegative,
    Lambda4AtMostLambda5,
    Lambda5BelowBound,
    Lambda6Positive,
    Lambda7NonNegative,
    Lambda8NonNegative,
    Lambda7PlusLambda8Positive,
    Lambda6BelowLambda2,
    Lambda2BelowOne,
    B1BelowOne,
    B2Positive,
    B2BelowB1,
    B3Positive,
    B2PlusB3Bound,
    DeltaPositive,
    EpsilonPositive,
    EtaPositive,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Finite => "finite",
            Condition::CPositive => "c > 0",
            Condition::CBelowOne => "c < 1",
            Condition::Lambda2Positive => "lambda2 > 0",
            Condition::Lambda3Positive => "lambda3 > 0",
            Condition::Lambda4NonNegative => "lambda4 >= 0",
            Condition::Lambda4AtMostLambda5 => "lambda4 <= lambda5",
            Condition::Lambda5BelowBound => "lambda5 < 2*lambda1/c",
            Condition::Lambda6Positive => "lambda6 > 0",
            Condition::Lambda7NonNegative => "lambda7 >= 0",
            Condition::Lambda8NonNegative => "lambda8 >= 0",
            Condition::Lambda7PlusLambda8Positive => "lambda7 + lambda8 > 0",
            Condition::Lambda6BelowLambda2 => "lambda6 < lambda2 (lambda7 > 0)",
            Condition::Lambda2BelowOne => "lambda2 < 1 (lambda7 > 0)",
            Condition::B1BelowOne => "b1 < 1",
            Condition::B2Positive => "b2 > 0",
            Condition::B2BelowB1 => "b2 < b1",
            Condition::B3Positive => "b3 > 0",
            Condition::B2PlusB3Bound => "b2 + b3 < 4*b1",
            Condition::DeltaPositive => "delta > 0",
            Condition::EpsilonPositive => "epsilon > 0",
            Condition::EtaPositive => "eta > 0",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub detail: String,
}

impl Violation {
    pub fn new(condition: Condition, detail: String) -> Self {
        Violation { condition, detail }
    }
}

/// Every condition a parameter set failed, in check order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn new(violations: Vec<Violation>) -> Self {
        ValidationError { violations }
    }

    pub fn conditions(&self) -> impl Iterator<Item = Condition> + '_ {
        self.violations.iter().map(|v| v.condition)
    }

    pub fn contains(&self, cond: Condition) -> bool {
        self.conditions().any(|c| c == cond)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parameter validation failed:")?;
        for v in &self.violations {
            write!(f, " [{}: {}]", v.condition, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("nu[{index}] = {value} is not positive at t = {t}")]
    Domain { t: f64, index: usize, value: f64 },

    #[error("integration step failed at t = {t}: {reason}")]
    StepFailure {
        t: f64,
        reason: String,
        state: Box<FlowState>,
    },

    #[error("energy identity requires the G-AdaGrad mapping")]
    PresetMismatch,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid integration grid: {0}")]
    Grid(String),

    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("unstable discretization: 1 - delta*b2 - delta*b3 = {factor} < 0")]
    Instability { factor: f64 },

    #[error("division by zero in coordinate {index} at iteration {iter}")]
    Domain { index: usize, iter: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("degree {0} exceeds the supported maximum of 2")]
    Degree(usize),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    Grid(String),
}
