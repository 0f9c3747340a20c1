//! Desk-scale test objectives with analytic gradients.

use serde::{Deserialize, Serialize};

/// A smooth objective `f: R^d -> R` with its gradient.
///
/// Implementations are immutable and evaluation is reentrant.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    fn known_min(&self) -> Option<KnownMin> {
        None
    }

    /// Whether the Hessian is bounded on all of `R^d` (not just the test box).
    fn hessian_bounded(&self) -> bool;

    /// Half-width `r` of the box `[-r, r]^d` on which convergence claims are checked.
    fn test_box(&self) -> f64 {
        5.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownMin {
    pub x: Vec<f64>,
    pub f: f64,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn in_box(x: &[f64], half_width: f64) -> bool {
    x.iter().all(|v| v.abs() <= half_width)
}

/// `f(x) = 0.5 * sum q_i x_i^2` with `q_i` geometrically spaced on `[1, cond]`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: Vec<f64>,
}

impl Quadratic {
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn from_diag(diag: Vec<f64>) -> Self {
        Quadratic { diag }
    }
}

/// Diagonal quadratic of dimension `d` and the given condition number.
///
/// # Panics
///
/// If `d == 0` or `condition_number < 1`.
pub fn make_quadratic(d: usize, condition_number: f64) -> Quadratic {
    assert!(d >= 1, "dimension must be positive");
    assert!(condition_number >= 1.0, "condition number must be >= 1");
    let diag = if d == 1 {
        vec![1.0]
    } else {
        (0..d)
            .map(|i| {
                if i == d - 1 {
                    condition_number
                } else {
                    condition_number.powf(i as f64 / (d - 1) as f64)
                }
            })
            .collect()
    };
    Quadratic { diag }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.diag.iter().zip(x).map(|(q, v)| q * v * v).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, q), v) in grad.iter_mut().zip(&self.diag).zip(x) {
            *g = q * v;
        }
    }

    fn known_min(&self) -> Option<KnownMin> {
        Some(KnownMin {
            x: vec![0.0; self.dim()],
            f: 0.0,
        })
    }

    fn hessian_bounded(&self) -> bool {
        true
    }
}

/// Chained Rosenbrock `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
///
/// The Hessian grows with `|x|`, so it is only bounded on the test box.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
}

/// # Panics
///
/// If `d < 2`.
pub fn make_rosenbrock(d: usize) -> Rosenbrock {
    assert!(d >= 2, "Rosenbrock needs at least two coordinates");
    Rosenbrock { dim: d }
}

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                let b = 1.0 - w[0];
                100.0 * a * a + b * b
            })
            .sum()
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            grad[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            grad[i + 1] += 200.0 * a;
        }
    }

    fn known_min(&self) -> Option<KnownMin> {
        Some(KnownMin {
            x: vec![1.0; self.dim],
            f: 0.0,
        })
    }

    fn hessian_bounded(&self) -> bool {
        false
    }

    fn test_box(&self) -> f64 {
        5.0
    }
}

/// 64-bit linear congruential generator (Knuth's MMIX constants).
///
/// `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`;
/// a uniform draw on `[0, 1)` is the top 53 bits scaled by `2^-53`. Kept
/// deliberately simple so the synthetic datasets can be regenerated in any
/// language.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
    pub const INCREMENT: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Weight of the `0.5 * reg * |w|^2` term in [`Logistic`].
pub const LOGISTIC_L2: f64 = 5e-4;

/// Mean logistic loss over a synthetic dataset plus an l2 penalty.
#[derive(Debug, Clone)]
pub struct Logistic {
    dim: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    reg: f64,
}

impl Logistic {
    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Seeded synthetic logistic regression problem.
///
/// Draw order from one [`Lcg`]: a planted weight vector `w* ~ U(-2, 2)^d`,
/// then for each sample its `d` features `~ U(-1, 1)` followed by one draw
/// `u`; the label is `1` iff `u < sigmoid(<x, w*>)`. Labels are therefore
/// noisy and the data is not separable in general.
///
/// # Panics
///
/// If `d == 0` or `n_samples == 0`.
pub fn make_logistic(d: usize, n_samples: usize, seed: u64) -> Logistic {
    assert!(d >= 1 && n_samples >= 1);
    let mut rng = Lcg::new(seed);
    let planted: Vec<f64> = (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let z: f64 = row.iter().zip(&planted).map(|(a, b)| a * b).sum();
        let u = rng.next_f64();
        labels.push(if u < sigmoid(z) { 1.0 } else { 0.0 });
        features.push(row);
    }
    Logistic {
        dim: d,
        features,
        labels,
        reg: LOGISTIC_L2,
    }
}

impl Objective for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        let data: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(row, &y)| {
                let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
                log1p_exp(z) - y * z
            })
            .sum();
        data / n + 0.5 * self.reg * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient_into(&self, w: &[f64], grad: &mut [f64]) {
        let n = self.labels.len() as f64;
        grad.fill(0.0);
        for (row, &y) in self.features.iter().zip(&self.labels) {
            let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
            let r = sigmoid(z) - y;
            for (g, a) in grad.iter_mut().zip(row) {
                *g += r * a;
            }
        }
        for (g, v) in grad.iter_mut().zip(w) {
            *g = *g / n + self.reg * v;
        }
    }

    fn hessian_bounded(&self) -> bool {
        true
    }
}

/// Central-difference gradient with step `h`.
pub fn finite_diff_grad(obj: &dyn Objective, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            probe[i] = xi + h;
            let fp = obj.value(&probe);
            probe[i] = xi - h;
            let fm = obj.value(&probe);
            probe[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}
