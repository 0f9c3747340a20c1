//! Continuous-time optimizer flows.
//!
//! A [`FlowProblem`] couples an objective with validated generic parameters
//! and initial conditions. The right-hand side is integrated on a fixed grid
//! by forward Euler (the scheme the discrete steppers come from) or by
//! classical RK4, which serves as the in-repo reference.

use crate::error::FlowError;
use crate::objectives::{norm, Objective};
use crate::ode::{self, Method, OdeSystem, Workspace};
use crate::params::{map_preset_to_general, validate_params, validate_preset, PresetKind, PresetParams, ValidParams};
use crate::state::{FlowDerivative, FlowState};
use crate::trajectory::Trajectory;

/// `v^c`, with the square root taken exactly when `c = 0.5`.
#[inline]
pub(crate) fn pow_c(v: f64, c: f64) -> f64 {
    if c == 0.5 {
        v.sqrt()
    } else {
        v.powf(c)
    }
}

pub struct FlowProblem<'a> {
    pub objective: &'a dyn Objective,
    pub params: ValidParams,
    pub x0: Vec<f64>,
    pub nu0: Vec<f64>,
}

impl std::fmt::Debug for FlowProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowProblem")
            .field("objective", &self.objective.name())
            .field("params", &self.params)
            .field("x0", &self.x0)
            .field("nu0", &self.nu0)
            .finish()
    }
}

impl<'a> FlowProblem<'a> {
    pub fn new(
        objective: &'a dyn Objective,
        params: ValidParams,
        x0: Vec<f64>,
        nu0: Vec<f64>,
    ) -> Result<Self, FlowError> {
        let d = objective.dim();
        if x0.len() != d || nu0.len() != d {
            return Err(FlowError::Dimension(format!(
                "objective has d = {d}, x0 has {}, nu0 has {}",
                x0.len(),
                nu0.len()
            )));
        }
        if let Some((index, &value)) = nu0.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(FlowError::Domain { t: 0.0, index, value });
        }
        Ok(FlowProblem {
            objective,
            params,
            x0,
            nu0,
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn initial_state(&self) -> FlowState {
        FlowState::initial(self.x0.clone(), self.nu0.clone())
    }

    /// Packed right-hand side over `y = [x, mu, zeta, nu]`.
    pub fn rhs_packed(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), FlowError> {
        let d = self.dim();
        let p = &self.params;
        let (x, rest) = y.split_at(d);
        let (mu, rest) = rest.split_at(d);
        let (zeta, nu) = rest.split_at(d);
        let (dx, rest) = dy.split_at_mut(d);
        let (dmu, rest) = rest.split_at_mut(d);
        let (dzeta, dnu) = rest.split_at_mut(d);

        if let Some((index, &value)) = nu.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(FlowError::Domain { t, index, value });
        }

        // dx doubles as gradient scratch until the last loop
        self.objective.gradient_into(x, dx);
        let alpha = p.alpha_g(t);
        for i in 0..d {
            let g = dx[i];
            dmu[i] = -p.lambda1 * mu[i] + p.lambda2 * g;
            dzeta[i] = -p.lambda3 * zeta[i] + p.lambda3 * nu[i];
            dnu[i] = p.lambda4 * zeta[i] - p.lambda5 * nu[i] + p.lambda6 * p.psi.eval(g, mu[i]);
            dx[i] = -(p.lambda7 * mu[i] + p.lambda8 * g) / (alpha * pow_c(nu[i], p.c));
        }
        Ok(())
    }

    /// Packs, evaluates, and unpacks the right-hand side at `state`.
    pub fn rhs(&self, state: &FlowState, t: f64) -> Result<FlowDerivative, FlowError> {
        let d = self.dim();
        if state.dim() != d {
            return Err(FlowError::Dimension(format!("state has d = {}", state.dim())));
        }
        let y = state.to_packed();
        let mut dy = vec![0.0; 4 * d];
        self.rhs_packed(t, &y, &mut dy)?;
        Ok(FlowDerivative {
            dx: dy[..d].to_vec(),
            dmu: dy[d..2 * d].to_vec(),
            dzeta: dy[2 * d..3 * d].to_vec(),
            dnu: dy[3 * d..].to_vec(),
        })
    }

    fn record(&self, tr: &mut Trajectory, state: FlowState) {
        let f = self.objective.value(&state.x);
        let g = norm(&self.objective.gradient(&state.x));
        let alpha = self.params.alpha_g(state.t);
        tr.push(state, f, g, alpha);
    }
}

/// Time derivative of the generic flow at `state`.
///
/// ```text
/// mu'   = -l1 mu + l2 g
/// zeta' = -l3 zeta + l3 nu
/// nu'   =  l4 zeta - l5 nu + l6 psi(g, mu)
/// x'    = -(l7 mu + l8 g) / (alpha_g(t) nu^c)
/// ```
pub fn rhs_general(state: &FlowState, t: f64, problem: &FlowProblem<'_>) -> Result<FlowDerivative, FlowError> {
    problem.rhs(state, t)
}

impl OdeSystem for FlowProblem<'_> {
    type Error = FlowError;

    fn dim(&self) -> usize {
        4 * FlowProblem::dim(self)
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), FlowError> {
        self.rhs_packed(t, y, dy)
    }
}

/// Fixed-step integration options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride`-th step; the first and last steps are always kept.
    pub stride: usize,
}

impl IntegrateOptions {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Self {
        IntegrateOptions {
            method,
            dt,
            t_end,
            stride: 1,
        }
    }

    pub fn with_stride(self, stride: usize) -> Self {
        IntegrateOptions { stride, ..self }
    }

    /// Number of steps; the final time is `steps * dt`.
    pub fn steps(&self) -> Result<usize, FlowError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FlowError::Grid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(FlowError::Grid(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.stride == 0 {
            return Err(FlowError::Grid("stride must be positive".into()));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

/// Integrates `problem` on the uniform grid `t_k = k dt`.
///
/// A step that produces a non-positive `nu` or a non-finite value is a hard
/// failure carrying the offending state; nothing is clamped.
pub fn integrate(problem: &FlowProblem<'_>, opts: IntegrateOptions) -> Result<Trajectory, FlowError> {
    let n = opts.steps()?;
    let d = problem.dim();
    let mut y = problem.initial_state().to_packed();
    let mut ws = Workspace::new(4 * d);
    let mut tr = Trajectory::default();
    problem.record(&mut tr, problem.initial_state());

    for k in 0..n {
        let t = k as f64 * opts.dt;
        let t_next = (k + 1) as f64 * opts.dt;
        if let Err(e) = ode::step(opts.method, problem, t, &mut y, opts.dt, &mut ws) {
            return Err(FlowError::StepFailure {
                t,
                reason: e.to_string(),
                state: Box::new(FlowState::from_packed(&y, t)),
            });
        }
        let bad_nu = y[3 * d..].iter().position(|&v| !(v > 0.0));
        let non_finite = y.iter().any(|v| !v.is_finite());
        if bad_nu.is_some() || non_finite {
            let reason = match bad_nu {
                Some(i) => format!("nu[{i}] = {} is not positive", y[3 * d + i]),
                None => "non-finite state".to_string(),
            };
            return Err(FlowError::StepFailure {
                t: t_next,
                reason,
                state: Box::new(FlowState::from_packed(&y, t_next)),
            });
        }
        if (k + 1) % opts.stride == 0 || k + 1 == n {
            problem.record(&mut tr, FlowState::from_packed(&y, t_next));
        }
    }
    Ok(tr)
}

/// Forward-Euler trajectory, recording every step.
pub fn integrate_euler(problem: &FlowProblem<'_>, dt: f64, t_end: f64) -> Result<Trajectory, FlowError> {
    integrate(problem, IntegrateOptions::new(Method::Euler, dt, t_end))
}

/// Classical RK4 trajectory, recording every step.
pub fn integrate_reference(problem: &FlowProblem<'_>, dt: f64, t_end: f64) -> Result<Trajectory, FlowError> {
    integrate(problem, IntegrateOptions::new(Method::Rk4, dt, t_end))
}

/// Builds the flow of a named optimizer after validating its preset.
pub fn preset_flow<'a>(
    kind: PresetKind,
    preset: &PresetParams,
    objective: &'a dyn Objective,
    x0: Vec<f64>,
    nu0: Vec<f64>,
) -> Result<FlowProblem<'a>, FlowError> {
    let preset = validate_preset(*preset, kind)?;
    let params = validate_params(map_preset_to_general(&preset, kind))?;
    FlowProblem::new(objective, params, x0, nu0)
}

fn is_gadagrad_mapping(p: &ValidParams) -> bool {
    p.lambda4 == 0.0
        && p.lambda5 == 0.0
        && p.lambda6 == 1.0
        && p.lambda7 == 0.0
        && p.lambda8 == 1.0
        && p.psi == crate::psi::PsiKind::SquaredGradient
}

/// Residual of the G-AdaGrad energy identity at every record:
///
/// ```text
/// f(x(t)) - [ f(x(0)) + sum_i ( xc_i(0)^(1-c) - (xc_i(0) + I_i(t))^(1-c) ) / (1-c) ]
/// ```
///
/// with `xc = nu` and `I_i(t) = int_0^t g_i(s)^2 ds` accumulated by the
/// trapezoid rule over the recorded grid.
pub fn gadagrad_energy_residual(traj: &Trajectory, problem: &FlowProblem<'_>) -> Result<Vec<f64>, FlowError> {
    if !is_gadagrad_mapping(&problem.params) {
        return Err(FlowError::PresetMismatch);
    }
    let Some(first) = traj.states.first() else {
        return Ok(Vec::new());
    };
    let d = problem.dim();
    if first.dim() != d {
        return Err(FlowError::Dimension(format!("trajectory has d = {}", first.dim())));
    }
    let c = problem.params.c;
    let e = 1.0 - c;
    let xc0 = &first.nu;
    let f0 = traj.f_values[0];
    let base: Vec<f64> = xc0.iter().map(|v| v.powf(e)).collect();

    let mut integral = vec![0.0; d];
    let mut prev_sq: Vec<f64> = problem.objective.gradient(&first.x).iter().map(|g| g * g).collect();
    let mut out = Vec::with_capacity(traj.len());
    out.push(0.0);
    for k in 1..traj.len() {
        let h = traj.times[k] - traj.times[k - 1];
        let sq: Vec<f64> = problem
            .objective
            .gradient(&traj.states[k].x)
            .iter()
            .map(|g| g * g)
            .collect();
        for i in 0..d {
            integral[i] += 0.5 * h * (prev_sq[i] + sq[i]);
        }
        let predicted: f64 = f0
            + (0..d)
                .map(|i| (base[i] - (xc0[i] + integral[i]).powf(e)) / e)
                .sum::<f64>();
        out.push(traj.f_values[k] - predicted);
        prev_sq = sq;
    }
    Ok(out)
}
