//! State-space models of adaptive gradient optimizers.
//!
//! The crate covers the generic continuous-time flow family and its named
//! presets ([`flow`]), the matching discrete steppers including AdamSSM
//! ([`discrete`]), linear-systems diagnostics of the second-moment dynamic
//! ([`analysis`]), desk-scale objectives ([`objectives`]), and a
//! config-driven comparison harness ([`harness`]).
// `!(x > 0.0)` is used on purpose so NaN is rejected; state vectors are
// walked in lockstep by index.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod discrete;
pub mod error;
pub mod flow;
pub mod harness;
pub mod objectives;
pub mod ode;
pub mod params;
pub mod psi;
pub mod state;
pub mod trajectory;

pub use analysis::{
    adamssm_tf, analyze_adamssm, impulse_response, poles_zeros, second_moment_response, stability_quantity_p,
    state_transition_entries, state_transition_matrix, step_response, RationalTF, SecondMomentLTI,
};
pub use discrete::{
    run_discrete, run_discrete_from, step_adabelief, step_adam, step_adamssm, step_gadagrad, step_moment,
    step_sgd_momentum, BiasMode, LrSchedule, RunOptions, RunReport, Stepper, StepperKind, StepperState,
};
pub use error::{AnalysisError, Condition, FlowError, StepError, ValidationError, Violation};
pub use flow::{
    gadagrad_energy_residual, integrate, integrate_euler, integrate_reference, preset_flow, rhs_general, FlowProblem,
    IntegrateOptions,
};
pub use harness::{load_config, run_compare, ExperimentConfig, HarnessError, RunResult};
pub use objectives::{finite_diff_grad, make_logistic, make_quadratic, make_rosenbrock, KnownMin, Objective};
pub use ode::Method;
pub use params::{
    alpha_g, map_preset_to_general, preset_to_valid_params, validate_params, validate_preset, OptimizerParams,
    PresetKind, PresetParams, ValidParams,
};
pub use psi::{InputFunction, PsiKind};
pub use state::{FlowDerivative, FlowState};
pub use trajectory::{fmt_f64, NuFloor, Trajectory, TrajectoryError};
