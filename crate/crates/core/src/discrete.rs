//! Discrete-time optimizers obtained by forward-Euler sampling of the flows.
//!
//! The Adam family follows the same recursion with sampling time `delta`:
//!
//! ```text
//! mu+   = (1 - delta b1) mu + delta b1 g
//! zeta+ = (1 - delta b2) zeta + delta b2 nu
//! nu+   = delta b3 zeta + (1 - delta b2 - delta b3) nu + delta b2 psi
//! x+    = x - eta(t) mu_hat / (sqrt(nu_hat) + eps)
//! ```
//!
//! with `b3 = 0` for Adam and AdaBelief. Steppers are pure: they take a
//! state by reference and return the next one.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::StepError;
use crate::flow::pow_c;
use crate::objectives::{in_box, norm, Objective};
use crate::params::PresetParams;
use crate::psi::PsiKind;
use crate::state::FlowState;
use crate::trajectory::Trajectory;

/// How `mu_hat` and `nu_hat` are bias-corrected at iteration `t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    /// `1 - (1 - b)^(t+1)`.
    #[default]
    Rate,
    /// `1 - (1 - delta b)^(t+1)`, the usual `1 - beta^(t+1)`.
    Beta,
    /// `1 - (1 - b)^(t delta + 1)`, which matches the flow's `alpha_g` at
    /// continuous time `t delta`.
    Flow,
}

impl BiasMode {
    /// Denominators `(first, second)` at iteration `iter`.
    pub fn denominators(self, preset: &PresetParams, iter: u64) -> (f64, f64) {
        let k = iter as f64;
        let (base1, base2, exp) = match self {
            BiasMode::Rate => (1.0 - preset.b1, 1.0 - preset.b2, k + 1.0),
            BiasMode::Beta => (preset.beta1(), preset.beta2(), k + 1.0),
            BiasMode::Flow => (1.0 - preset.b1, 1.0 - preset.b2, k * preset.delta + 1.0),
        };
        (1.0 - base1.powf(exp), 1.0 - base2.powf(exp))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperState {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub zeta: Vec<f64>,
    pub nu: Vec<f64>,
    pub iter: u64,
}

impl StepperState {
    /// All moments zero.
    pub fn new(x0: Vec<f64>) -> Self {
        let d = x0.len();
        Self::with_nu(x0, vec![0.0; d])
    }

    /// Zero first moment and auxiliary state, given `nu`.
    pub fn with_nu(x0: Vec<f64>, nu0: Vec<f64>) -> Self {
        let d = x0.len();
        StepperState {
            x: x0,
            mu: vec![0.0; d],
            zeta: vec![0.0; d],
            nu: nu0,
            iter: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn to_flow_state(&self, t: f64) -> FlowState {
        FlowState {
            x: self.x.clone(),
            mu: self.mu.clone(),
            zeta: self.zeta.clone(),
            nu: self.nu.clone(),
            t,
        }
    }
}

/// Piecewise-constant learning rate: `base_eta` times the product of all
/// multipliers whose milestone iteration is `<= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    base_eta: f64,
    milestones: Vec<(u64, f64)>,
}

impl LrSchedule {
    pub fn new(base_eta: f64, milestones: Vec<(u64, f64)>) -> Result<Self, StepError> {
        if !(base_eta > 0.0) || !base_eta.is_finite() {
            return Err(StepError::Schedule(format!("base_eta = {base_eta} must be positive")));
        }
        if let Some(&(at, m)) = milestones.iter().find(|(_, m)| !(*m > 0.0) || !m.is_finite()) {
            return Err(StepError::Schedule(format!("multiplier {m} at {at} must be positive")));
        }
        if let Some(w) = milestones.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(StepError::Schedule(format!(
                "milestones must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(LrSchedule { base_eta, milestones })
    }

    pub fn constant(eta: f64) -> Result<Self, StepError> {
        Self::new(eta, Vec::new())
    }

    pub fn base_eta(&self) -> f64 {
        self.base_eta
    }

    pub fn milestones(&self) -> &[(u64, f64)] {
        &self.milestones
    }

    pub fn eta_at(&self, iter: u64) -> f64 {
        self.milestones
            .iter()
            .take_while(|(at, _)| *at <= iter)
            .fold(self.base_eta, |eta, (_, m)| eta * m)
    }
}

fn check_dims(state: &StepperState, grad: &[f64]) -> Result<(), StepError> {
    let d = state.dim();
    if grad.len() != d || state.mu.len() != d || state.zeta.len() != d || state.nu.len() != d {
        return Err(StepError::Dimension(format!(
            "state has d = {d}, gradient has {}",
            grad.len()
        )));
    }
    Ok(())
}

/// `1 - delta b2 - delta b3`, which must be nonnegative for `nu` to stay
/// nonnegative.
pub fn nu_retention(preset: &PresetParams) -> Result<f64, StepError> {
    let factor = 1.0 - preset.delta * preset.b2 - preset.delta * preset.b3;
    if factor < 0.0 {
        return Err(StepError::Instability { factor });
    }
    Ok(factor)
}

/// Shared Adam-family update; `b3 = 0` gives Adam or AdaBelief.
///
/// `psi` is evaluated with the post-update first moment.
pub fn step_moment(
    state: &StepperState,
    grad: &[f64],
    preset: &PresetParams,
    schedule: &LrSchedule,
    psi: PsiKind,
    bias: BiasMode,
) -> Result<StepperState, StepError> {
    check_dims(state, grad)?;
    let retain = nu_retention(preset)?;
    let PresetParams {
        b1,
        b2,
        b3,
        delta,
        epsilon,
        ..
    } = *preset;
    let t = state.iter;
    let eta = schedule.eta_at(t);
    let (bc1, bc2) = bias.denominators(preset, t);
    let d = state.dim();
    let mut next = StepperState {
        x: vec![0.0; d],
        mu: vec![0.0; d],
        zeta: vec![0.0; d],
        nu: vec![0.0; d],
        iter: t + 1,
    };
    for i in 0..d {
        let g = grad[i];
        let mu = (1.0 - delta * b1) * state.mu[i] + delta * b1 * g;
        let zeta = (1.0 - delta * b2) * state.zeta[i] + delta * b2 * state.nu[i];
        let nu = delta * b3 * state.zeta[i] + retain * state.nu[i] + delta * b2 * psi.eval(g, mu);
        let m_hat = mu / bc1;
        let v_hat = nu / bc2;
        let den = v_hat.sqrt() + epsilon;
        let dx = if m_hat == 0.0 {
            0.0
        } else if den == 0.0 || !den.is_finite() || !m_hat.is_finite() {
            return Err(StepError::Domain { index: i, iter: t });
        } else {
            eta * m_hat / den
        };
        next.x[i] = state.x[i] - dx;
        next.mu[i] = mu;
        next.zeta[i] = zeta;
        next.nu[i] = nu;
    }
    Ok(next)
}

/// One AdamSSM iteration with the default bias correction.
pub fn step_adamssm(
    state: &StepperState,
    grad: &[f64],
    preset: &PresetParams,
    schedule: &LrSchedule,
) -> Result<StepperState, StepError> {
    step_moment(state, grad, preset, schedule, PsiKind::SquaredGradient, BiasMode::Rate)
}

/// One Adam iteration. Coded without the `zeta -> nu` coupling; `zeta` is
/// carried but never read.
pub fn step_adam(
    state: &StepperState,
    grad: &[f64],
    preset: &PresetParams,
    schedule: &LrSchedule,
) -> Result<StepperState, StepError> {
    step_adam_with(state, grad, preset, schedule, BiasMode::Rate)
}

pub fn step_adam_with(
    state: &StepperState,
    grad: &[f64],
    preset: &PresetParams,
    schedule: &LrSchedule,
    bias: BiasMode,
) -> Result<StepperState, StepError> {
    check_dims(state, grad)?;
    let PresetParams {
        b1, b2, delta, epsilon, ..
    } = *preset;
    let retain = 1.0 - delta * b2;
    if retain < 0.0 {
        return Err(StepError::Instability { factor: retain });
    }
    let t = state.iter;
    let eta = schedule.eta_at(t);
    let (bc1, bc2) = bias.denominators(preset, t);
    let mut next = state.clone();
    next.iter = t + 1;
    for i in 0..state.dim() {
        let g = grad[i];
        let mu = (1.0 - delta * b1) * state.mu[i] + delta * b1 * g;
        let nu = retain * state.nu[i] + delta * b2 * (g * g);
        next.zeta[i] = (1.0 - delta * b2) * state.zeta[i] + delta * b2 * state.nu[i];
        let m_hat = mu / bc1;
        let den = (nu / bc2).sqrt() + epsilon;
        if m_hat != 0.0 {
            if den == 0.0 || !den.is_finite() || !m_hat.is_finite() {
                return Err(StepError::Domain { index: i, iter: t });
            }
            next.x[i] = state.x[i] - eta * m_hat / den;
        }
        next.mu[i] = mu;
        next.nu[i] = nu;
    }
    Ok(next)
}

/// One AdaBelief iteration, `psi = (g - mu+)^2`. A positive `b3` gives the
/// AdaBelief-SSM variant.
pub fn step_adabelief(
    state: &StepperState,
    grad: &[f64],
    preset: &PresetParams,
    schedule: &LrSchedule,
) -> Result<StepperState, StepError> {
    step_moment(state, grad, preset, schedule, PsiKind::Belief, BiasMode::Rate)
}

/// One G-AdaGrad iteration:
/// `nu+ = nu + delta g^2`, `x+ = x - delta eta g / ((nu+)^c + eps)`.
pub fn step_gadagrad(
    state: &StepperState,
    grad: &[f64],
    c: f64,
    delta: f64,
    eta: f64,
    epsilon: f64,
) -> Result<StepperState, StepError> {
    check_dims(state, grad)?;
    let mut next = state.clone();
    next.iter = state.iter + 1;
    for i in 0..state.dim() {
        let g = grad[i];
        let nu = state.nu[i] + delta * (g * g);
        next.nu[i] = nu;
        if g == 0.0 {
            continue;
        }
        let den = pow_c(nu, c) + epsilon;
        if den == 0.0 || !den.is_finite() {
            return Err(StepError::Domain {
                index: i,
                iter: state.iter,
            });
        }
        next.x[i] = state.x[i] - delta * eta * g / den;
    }
    Ok(next)
}

/// Heavy-ball step `m+ = beta m + g`, `x+ = x - eta(t) m+`. The momentum
/// buffer lives in `mu`.
pub fn step_sgd_momentum(
    state: &StepperState,
    grad: &[f64],
    beta: f64,
    schedule: &LrSchedule,
) -> Result<StepperState, StepError> {
    check_dims(state, grad)?;
    let eta = schedule.eta_at(state.iter);
    let mut next = state.clone();
    next.iter = state.iter + 1;
    for i in 0..state.dim() {
        let m = beta * state.mu[i] + grad[i];
        next.mu[i] = m;
        next.x[i] = state.x[i] - eta * m;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    #[serde(rename = "gadagrad")]
    GAdaGrad,
    Adam,
    #[serde(rename = "adabelief")]
    AdaBelief,
    #[serde(rename = "adamssm")]
    AdamSsm,
    #[serde(rename = "adabelief_ssm")]
    AdaBeliefSsm,
    SgdMomentum,
}

impl StepperKind {
    pub fn name(self) -> &'static str {
        match self {
            StepperKind::GAdaGrad => "gadagrad",
            StepperKind::Adam => "adam",
            StepperKind::AdaBelief => "adabelief",
            StepperKind::AdamSsm => "adamssm",
            StepperKind::AdaBeliefSsm => "adabelief_ssm",
            StepperKind::SgdMomentum => "sgd_momentum",
        }
    }

    pub fn preset_kind(self) -> Option<crate::params::PresetKind> {
        use crate::params::PresetKind;
        match self {
            StepperKind::GAdaGrad => Some(PresetKind::GAdaGrad),
            StepperKind::Adam => Some(PresetKind::Adam),
            StepperKind::AdaBelief => Some(PresetKind::AdaBelief),
            StepperKind::AdamSsm => Some(PresetKind::AdamSsm),
            StepperKind::AdaBeliefSsm => Some(PresetKind::AdaBeliefSsm),
            StepperKind::SgdMomentum => None,
        }
    }
}

impl From<crate::params::PresetKind> for StepperKind {
    fn from(kind: crate::params::PresetKind) -> Self {
        use crate::params::PresetKind;
        match kind {
            PresetKind::GAdaGrad => StepperKind::GAdaGrad,
            PresetKind::Adam => StepperKind::Adam,
            PresetKind::AdaBelief => StepperKind::AdaBelief,
            PresetKind::AdamSsm => StepperKind::AdamSsm,
            PresetKind::AdaBeliefSsm => StepperKind::AdaBeliefSsm,
        }
    }
}

/// A configured discrete optimizer.
///
/// Presets are not validated here, so limiting cases such as `b3 = 0` or
/// `epsilon = 0` can be stepped directly; only the `nu` retention factor is
/// checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Stepper {
    pub kind: StepperKind,
    pub preset: PresetParams,
    pub bias: BiasMode,
    /// Heavy-ball coefficient, read only by SGD-momentum.
    pub beta: f64,
}

impl Stepper {
    pub fn new(kind: StepperKind, preset: PresetParams) -> Result<Self, StepError> {
        let s = Stepper {
            kind,
            preset,
            bias: BiasMode::Rate,
            beta: 0.9,
        };
        s.check()?;
        Ok(s)
    }

    pub fn with_bias(self, bias: BiasMode) -> Self {
        Stepper { bias, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Result<Self, StepError> {
        if !(0.0..1.0).contains(&beta) {
            return Err(StepError::Schedule(format!("beta = {beta} must lie in [0, 1)")));
        }
        Ok(Stepper { beta, ..self })
    }

    fn check(&self) -> Result<(), StepError> {
        match self.kind {
            StepperKind::AdamSsm | StepperKind::AdaBeliefSsm => nu_retention(&self.preset).map(|_| ()),
            StepperKind::Adam | StepperKind::AdaBelief => nu_retention(&self.preset.without_b3()).map(|_| ()),
            StepperKind::GAdaGrad | StepperKind::SgdMomentum => Ok(()),
        }
    }

    pub fn step(&self, state: &StepperState, grad: &[f64], schedule: &LrSchedule) -> Result<StepperState, StepError> {
        let p = &self.preset;
        match self.kind {
            StepperKind::GAdaGrad => step_gadagrad(state, grad, p.c, p.delta, schedule.eta_at(state.iter), p.epsilon),
            StepperKind::Adam => step_adam_with(state, grad, p, schedule, self.bias),
            StepperKind::AdaBelief => step_moment(state, grad, &p.without_b3(), schedule, PsiKind::Belief, self.bias),
            StepperKind::AdamSsm => step_moment(state, grad, p, schedule, PsiKind::SquaredGradient, self.bias),
            StepperKind::AdaBeliefSsm => step_moment(state, grad, p, schedule, PsiKind::Belief, self.bias),
            StepperKind::SgdMomentum => step_sgd_momentum(state, grad, self.beta, schedule),
        }
    }

    /// Effective bias factor `bc1 / sqrt(bc2)` used at iteration `iter`; 1
    /// for the methods without bias correction.
    pub fn alpha(&self, iter: u64) -> f64 {
        match self.kind {
            StepperKind::GAdaGrad | StepperKind::SgdMomentum => 1.0,
            _ => {
                let (bc1, bc2) = self.bias.denominators(&self.preset, iter);
                bc1 / bc2.sqrt()
            }
        }
    }
}

/// Summary of one optimization run. An epoch is one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub optimizer: String,
    pub objective: String,
    pub iterations: u64,
    pub best_f: f64,
    pub epoch_of_best: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    /// First iteration with gradient norm below `threshold`; `None` if never.
    pub iters_to_threshold: Option<u64>,
    pub threshold: f64,
    /// `nu >= 0` at every iteration.
    pub nu_nonnegative: bool,
    /// Whether `x` ever left the objective's test box.
    pub left_test_box: bool,
    /// Set when the run stopped on a step error.
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub stride: usize,
    pub threshold: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stride: 1,
            threshold: 1e-4,
        }
    }
}

/// Iterates `stepper` from zero moments at `x0`.
pub fn run_discrete(
    stepper: &Stepper,
    objective: &dyn Objective,
    x0: &[f64],
    num_iters: u64,
    schedule: &LrSchedule,
) -> Result<(Trajectory, RunReport), StepError> {
    run_discrete_from(
        stepper,
        objective,
        StepperState::new(x0.to_vec()),
        num_iters,
        schedule,
        RunOptions::default(),
    )
}

/// Iterates `stepper` from an arbitrary state. Records every `stride`-th
/// iterate plus the first and last; the report is computed from every
/// iterate. Recorded times are iteration counts.
pub fn run_discrete_from(
    stepper: &Stepper,
    objective: &dyn Objective,
    init: StepperState,
    num_iters: u64,
    schedule: &LrSchedule,
    opts: RunOptions,
) -> Result<(Trajectory, RunReport), StepError> {
    let ((traj, failure), report) = run_inner(stepper, objective, init, num_iters, schedule, opts);
    match failure {
        Some(e) => Err(e),
        None => Ok((traj, report)),
    }
}

/// Like [`run_discrete_from`] but a step error ends the run early and is
/// recorded in the report instead of being returned.
pub fn run_discrete_lenient(
    stepper: &Stepper,
    objective: &dyn Objective,
    init: StepperState,
    num_iters: u64,
    schedule: &LrSchedule,
    opts: RunOptions,
) -> (Trajectory, RunReport) {
    let ((traj, _), report) = run_inner(stepper, objective, init, num_iters, schedule, opts);
    (traj, report)
}

fn run_inner(
    stepper: &Stepper,
    objective: &dyn Objective,
    init: StepperState,
    num_iters: u64,
    schedule: &LrSchedule,
    opts: RunOptions,
) -> ((Trajectory, Option<StepError>), RunReport) {
    let started = std::time::Instant::now();
    let stride = opts.stride.max(1) as u64;
    let r = objective.test_box();
    let mut grad = vec![0.0; objective.dim()];
    let mut traj = Trajectory::default();

    let mut state = init;
    let start_iter = state.iter;
    objective.gradient_into(&state.x, &mut grad);
    let mut f = objective.value(&state.x);
    let mut gnorm = norm(&grad);
    traj.push(
        state.to_flow_state(state.iter as f64),
        f,
        gnorm,
        stepper.alpha(state.iter),
    );

    let mut report = RunReport {
        optimizer: stepper.kind.name().to_string(),
        objective: objective.name().to_string(),
        iterations: 0,
        best_f: f,
        epoch_of_best: 0,
        final_f: f,
        final_grad_norm: gnorm,
        iters_to_threshold: (gnorm < opts.threshold).then_some(0),
        threshold: opts.threshold,
        nu_nonnegative: state.nu.iter().all(|&v| v >= 0.0),
        left_test_box: !in_box(&state.x, r),
        error: None,
        wall_time: Duration::ZERO,
    };
    let mut failure = None;

    for k in 1..=num_iters {
        let next = match stepper.step(&state, &grad, schedule) {
            Ok(s) => s,
            Err(e) => {
                report.error = Some(e.to_string());
                failure = Some(e);
                break;
            }
        };
        state = next;
        objective.gradient_into(&state.x, &mut grad);
        f = objective.value(&state.x);
        gnorm = norm(&grad);
        report.iterations = k;
        if f < report.best_f {
            report.best_f = f;
            report.epoch_of_best = k;
        }
        if report.iters_to_threshold.is_none() && gnorm < opts.threshold {
            report.iters_to_threshold = Some(k);
        }
        if state.nu.iter().any(|&v| !(v >= 0.0)) {
            report.nu_nonnegative = false;
        }
        if !in_box(&state.x, r) {
            report.left_test_box = true;
        }
        if k % stride == 0 || k == num_iters {
            let t = state.iter as f64;
            traj.push(state.to_flow_state(t), f, gnorm, stepper.alpha(state.iter));
        }
        if !f.is_finite() {
            report.error = Some(format!("objective became non-finite at iteration {}", start_iter + k));
            failure = Some(StepError::Domain {
                index: 0,
                iter: start_iter + k,
            });
            break;
        }
    }
    report.final_f = f;
    report.final_grad_norm = gnorm;
    report.wall_time = started.elapsed();
    ((traj, failure), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_quadratic;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn preset() -> PresetParams {
        PresetParams::default()
    }

    fn sched(eta: f64) -> LrSchedule {
        LrSchedule::constant(eta).unwrap()
    }

    #[test]
    fn algorithm1_hand_example() {
        let s = StepperState::new(vec![1.0]);
        let next = step_adamssm(&s, &[1.0], &preset(), &sched(1e-3)).unwrap();
        assert_relative_eq!(next.mu[0], 0.1005, max_relative = 1e-14);
        assert_relative_eq!(next.nu[0], 0.001005, max_relative = 1e-14);
        let (bc1, bc2) = BiasMode::Rate.denominators(&preset(), 0);
        assert_relative_eq!(next.mu[0] / bc1, 0.15, max_relative = 1e-14);
        assert_relative_eq!(next.nu[0] / bc2, 0.15, max_relative = 1e-12);
        assert_relative_eq!(next.x[0], 0.999612701675379, max_relative = 1e-14);
        assert_eq!(next.iter, 1);
    }

    #[test]
    fn zero_gradient_from_rest_never_moves() {
        let mut s = StepperState::new(vec![0.3, -2.0]);
        for _ in 0..100 {
            s = step_adamssm(&s, &[0.0, 0.0], &preset(), &sched(1e-2)).unwrap();
            s = step_adam(&s, &[0.0, 0.0], &preset(), &sched(1e-2)).unwrap();
            s = step_adabelief(&s, &[0.0, 0.0], &preset(), &sched(1e-2)).unwrap();
        }
        assert_eq!(s.x, vec![0.3, -2.0]);
    }

    #[test]
    fn adam_equals_adamssm_without_b3() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = preset().without_b3();
        for _ in 0..200 {
            let s = StepperState {
                x: (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                mu: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                zeta: (0..4).map(|_| rng.gen_range(0.0..1.0)).collect(),
                nu: (0..4).map(|_| rng.gen_range(0.0..1.0)).collect(),
                iter: rng.gen_range(0..1000),
            };
            let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a = step_adam(&s, &g, &p, &sched(1e-3)).unwrap();
            let b = step_adamssm(&s, &g, &p, &sched(1e-3)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn betas_from_rates() {
        assert_relative_eq!(preset().beta1(), 0.8995, max_relative = 1e-15);
        assert_relative_eq!(preset().beta2(), 0.998995, max_relative = 1e-15);
    }

    #[test]
    fn instability_is_reported() {
        let p = PresetParams {
            b3: 10.0,
            delta: 0.5,
            ..preset()
        };
        let s = StepperState::new(vec![1.0]);
        assert!(matches!(
            step_adamssm(&s, &[1.0], &p, &sched(1e-3)),
            Err(StepError::Instability { .. })
        ));
        assert!(matches!(
            Stepper::new(StepperKind::AdamSsm, p),
            Err(StepError::Instability { .. })
        ));
    }

    #[test]
    fn zero_epsilon_zero_nu_is_domain_error() {
        let p = PresetParams {
            epsilon: 0.0,
            ..preset()
        };
        let s = StepperState {
            mu: vec![1.0],
            ..StepperState::new(vec![0.0])
        };
        assert!(matches!(
            step_adamssm(&s, &[0.0], &p, &sched(1e-3)),
            Err(StepError::Domain { index: 0, iter: 0 })
        ));
    }

    #[test]
    fn adabelief_first_step_psi() {
        let p = preset().without_b3();
        let s = StepperState::new(vec![0.0]);
        let g = 2.5;
        let next = step_adabelief(&s, &[g], &p, &sched(1e-3)).unwrap();
        let expected = p.delta * p.b2 * ((1.0 - p.delta * p.b1) * g).powi(2);
        assert_relative_eq!(next.nu[0], expected, max_relative = 1e-14);
    }

    #[test]
    fn adabelief_constant_gradient_collapses_nu_hat() {
        let p = preset().without_b3();
        let mut s = StepperState::new(vec![0.0]);
        for _ in 0..10_000 {
            s = step_adabelief(&s, &[1.0], &p, &sched(1e-3)).unwrap();
        }
        let (_, bc2) = BiasMode::Rate.denominators(&p, s.iter - 1);
        assert!(s.nu[0] / bc2 < 1e-6, "nu_hat = {}", s.nu[0] / bc2);
        assert_relative_eq!(s.mu[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gadagrad_two_steps() {
        let obj = make_quadratic(1, 1.0);
        let s0 = StepperState::with_nu(vec![1.0], vec![1.0]);
        let s1 = step_gadagrad(&s0, &obj.gradient(&s0.x), 0.5, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(s1.nu[0], 2.0);
        assert_relative_eq!(s1.x[0], 0.292893218813452, max_relative = 1e-14);
        let s2 = step_gadagrad(&s1, &obj.gradient(&s1.x), 0.5, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(s2.nu[0], 2.085786437626905, max_relative = 1e-14);
        assert_relative_eq!(s2.x[0], 0.0900902084798490, max_relative = 1e-13);
    }

    #[test]
    fn gadagrad_accumulator_non_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = StepperState::new(vec![0.0; 3]);
        for _ in 0..1000 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let next = step_gadagrad(&s, &g, 0.5, 0.1, 1e-2, 1e-8).unwrap();
            assert!(next.nu.iter().zip(&s.nu).all(|(a, b)| a >= b));
            s = next;
        }
    }

    #[test]
    fn sgd_momentum_cases() {
        let s = StepperState::new(vec![1.0]);
        let next = step_sgd_momentum(&s, &[1.0], 0.0, &sched(0.1)).unwrap();
        assert_relative_eq!(next.x[0], 0.9, max_relative = 1e-15);
        let mut s = StepperState {
            mu: vec![1.0],
            ..StepperState::new(vec![0.0])
        };
        for k in 1..=10 {
            s = step_sgd_momentum(&s, &[0.0], 0.5, &sched(0.1)).unwrap();
            assert_eq!(s.mu[0], 0.5f64.powi(k));
        }
    }

    #[test]
    fn schedule_milestones() {
        let s = LrSchedule::new(1.0, vec![(10, 0.1), (20, 0.5)]).unwrap();
        assert_eq!(s.eta_at(0), 1.0);
        assert_eq!(s.eta_at(9), 1.0);
        assert_relative_eq!(s.eta_at(10), 0.1);
        assert_relative_eq!(s.eta_at(25), 0.05);
        assert!(LrSchedule::new(1.0, vec![(10, 0.1), (10, 0.5)]).is_err());
        assert!(LrSchedule::new(1.0, vec![(10, 0.0)]).is_err());
        assert!(LrSchedule::new(0.0, vec![]).is_err());
    }

    #[test]
    fn zero_iterations_report_is_initial() {
        let obj = make_quadratic(2, 100.0);
        let st = Stepper::new(StepperKind::AdamSsm, preset()).unwrap();
        let (tr, rep) = run_discrete(&st, &obj, &[1.0, 1.0], 0, &sched(1e-2)).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(rep.best_f, 50.5);
        assert_eq!(rep.epoch_of_best, 0);
        assert_eq!(rep.final_grad_norm, (1.0f64 + 1e4).sqrt());
        assert_eq!(rep.iters_to_threshold, None);
    }

    #[test]
    fn adamssm_defaults_reach_threshold_on_quadratic() {
        let obj = make_quadratic(2, 100.0);
        let st = Stepper::new(StepperKind::AdamSsm, preset()).unwrap();
        let (tr, rep) = run_discrete(&st, &obj, &[1.0, 1.0], 5000, &sched(1e-2)).unwrap();
        assert!(rep.final_grad_norm < 1e-4, "final grad norm {}", rep.final_grad_norm);
        assert!(rep.best_f <= tr.f_values[0]);
        assert!(rep.nu_nonnegative);
    }

    #[test]
    fn nu_nonnegative_over_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [
            StepperKind::Adam,
            StepperKind::AdaBelief,
            StepperKind::AdamSsm,
            StepperKind::AdaBeliefSsm,
            StepperKind::GAdaGrad,
        ] {
            let st = Stepper::new(kind, preset()).unwrap();
            let mut s = StepperState::new(vec![0.0; 2]);
            for _ in 0..100_000 {
                let g = [rng.gen_range(-10.0..10.0), rng.gen_range(-1e-3..1e-3)];
                s = st.step(&s, &g, &sched(1e-3)).unwrap();
                assert!(s.nu.iter().all(|&v| v >= 0.0), "{kind:?}");
            }
        }
    }

    #[test]
    fn first_step_scale_invariance() {
        let p = PresetParams {
            epsilon: 0.0,
            ..preset()
        };
        let s = StepperState::new(vec![0.0; 3]);
        let g = [0.3, -2.0, 1e-3];
        let base_adam = step_adam(&s, &g, &p, &sched(1e-2)).unwrap();
        let base_ssm = step_adamssm(&s, &g, &p, &sched(1e-2)).unwrap();
        for k in [1e-3, 0.5, 7.0, 1e4] {
            let gk: Vec<f64> = g.iter().map(|v| v * k).collect();
            let a = step_adam(&s, &gk, &p, &sched(1e-2)).unwrap();
            let b = step_adamssm(&s, &gk, &p, &sched(1e-2)).unwrap();
            for i in 0..3 {
                assert_relative_eq!(a.x[i], base_adam.x[i], max_relative = 1e-12);
                assert_eq!(b.x[i].signum(), base_ssm.x[i].signum());
            }
        }
    }

    #[test]
    fn continuous_in_b3_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = StepperState {
            x: vec![0.5, -0.5],
            mu: vec![0.1, -0.2],
            zeta: vec![0.3, 0.05],
            nu: vec![0.2, 0.4],
            iter: 7,
        };
        let g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let at = |b3: f64| step_adamssm(&s, &g, &PresetParams { b3, ..preset() }, &sched(1e-2)).unwrap();
        let base = at(0.0);
        for h in [1e-3, 1e-4, 1e-5, 1e-6] {
            let moved = at(h);
            for i in 0..2 {
                let slope = (moved.x[i] - base.x[i]).abs() / h;
                assert!(slope < 1.0, "slope {slope} at h = {h}");
                assert!((moved.nu[i] - base.nu[i]).abs() / h < 1.0);
            }
        }
    }

    #[test]
    fn bias_modes() {
        let p = preset();
        let (a, b) = BiasMode::Rate.denominators(&p, 0);
        assert_relative_eq!(a, p.b1, max_relative = 1e-15);
        assert_relative_eq!(b, p.b2, max_relative = 1e-12);
        let (a, _) = BiasMode::Beta.denominators(&p, 0);
        assert_relative_eq!(a, p.delta * p.b1, max_relative = 1e-14);
        let (a, _) = BiasMode::Flow.denominators(&p, 0);
        assert_relative_eq!(a, p.b1, max_relative = 1e-15);
    }
}
