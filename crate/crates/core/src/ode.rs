//! Fixed-step one-step integrators for first-order systems `y' = F(t, y)`.

use serde::{Deserialize, Serialize};

pub trait OdeSystem {
    type Error;

    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Forward Euler, global order 1.
    Euler,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
}

impl Method {
    pub fn order(self) -> u32 {
        match self {
            Method::Euler => 1,
            Method::Rk4 => 4,
        }
    }
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// `y <- y + h F(t, y)`.
pub fn euler_step<S: OdeSystem>(sys: &S, t: f64, y: &mut [f64], h: f64, ws: &mut Workspace) -> Result<(), S::Error> {
    sys.rhs(t, y, &mut ws.k1)?;
    for (yi, ki) in y.iter_mut().zip(&ws.k1) {
        *yi += h * ki;
    }
    Ok(())
}

pub fn rk4_step<S: OdeSystem>(sys: &S, t: f64, y: &mut [f64], h: f64, ws: &mut Workspace) -> Result<(), S::Error> {
    let half = 0.5 * h;
    sys.rhs(t, y, &mut ws.k1)?;

    for i in 0..y.len() {
        ws.tmp[i] = y[i] + half * ws.k1[i];
    }
    sys.rhs(t + half, &ws.tmp, &mut ws.k2)?;

    for i in 0..y.len() {
        ws.tmp[i] = y[i] + half * ws.k2[i];
    }
    sys.rhs(t + half, &ws.tmp, &mut ws.k3)?;

    for i in 0..y.len() {
        ws.tmp[i] = y[i] + h * ws.k3[i];
    }
    sys.rhs(t + h, &ws.tmp, &mut ws.k4)?;

    let sixth = h / 6.0;
    for i in 0..y.len() {
        y[i] += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
    Ok(())
}

pub fn step<S: OdeSystem>(
    method: Method,
    sys: &S,
    t: f64,
    y: &mut [f64],
    h: f64,
    ws: &mut Workspace,
) -> Result<(), S::Error> {
    match method {
        Method::Euler => euler_step(sys, t, y, h, ws),
        Method::Rk4 => rk4_step(sys, t, y, h, ws),
    }
}
