use serde::{Deserialize, Serialize};

/// Optimizer state at one instant: decision variables plus the three
/// moment-estimate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub zeta: Vec<f64>,
    pub nu: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    /// `mu = zeta = 0`, given `x` and `nu`, at `t = 0`.
    pub fn initial(x0: Vec<f64>, nu0: Vec<f64>) -> Self {
        let d = x0.len();
        FlowState {
            x: x0,
            mu: vec![0.0; d],
            zeta: vec![0.0; d],
            nu: nu0,
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Packs `[x, mu, zeta, nu]` into one vector.
    pub fn to_packed(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(4 * self.dim());
        y.extend_from_slice(&self.x);
        y.extend_from_slice(&self.mu);
        y.extend_from_slice(&self.zeta);
        y.extend_from_slice(&self.nu);
        y
    }

    pub fn from_packed(y: &[f64], t: f64) -> Self {
        let d = y.len() / 4;
        FlowState {
            x: y[..d].to_vec(),
            mu: y[d..2 * d].to_vec(),
            zeta: y[2 * d..3 * d].to_vec(),
            nu: y[3 * d..].to_vec(),
            t,
        }
    }

    pub fn min_nu(&self) -> f64 {
        self.nu.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Time derivative of a [`FlowState`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDerivative {
    pub dx: Vec<f64>,
    pub dmu: Vec<f64>,
    pub dzeta: Vec<f64>,
    pub dnu: Vec<f64>,
}
