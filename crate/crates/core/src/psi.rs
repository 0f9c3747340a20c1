//! Input functions feeding the second-moment dynamic.

use serde::{Deserialize, Serialize};

/// Nonnegative input `psi(g, mu)` to the second-moment state.
///
/// Implementations must be differentiable with bounded value and gradient on
/// bounded sets, and `psi(g, mu) -> 0` along a trajectory must force `g -> 0`.
/// Those are trajectory-level properties; only the two shipped instances are
/// verified against them.
pub trait InputFunction {
    fn eval(&self, grad: f64, mu: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// `g^2` (Adam family).
    SquaredGradient,
    /// `(g - mu)^2` (AdaBelief family).
    Belief,
}

impl PsiKind {
    #[inline]
    pub fn eval(self, grad: f64, mu: f64) -> f64 {
        match self {
            PsiKind::SquaredGradient => grad * grad,
            PsiKind::Belief => {
                let r = grad - mu;
                r * r
            }
        }
    }
}

impl InputFunction for PsiKind {
    fn eval(&self, grad: f64, mu: f64) -> f64 {
        PsiKind::eval(*self, grad, mu)
    }
}
