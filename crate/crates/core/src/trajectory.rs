use std::io::Write;

use serde::Serialize;

use crate::state::FlowState;

/// Shortest round-trip text for `v`: plain decimal for magnitudes in
/// `[1e-4, 1e16)` and zero, scientific notation otherwise.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Time-ordered records of one run, with aligned scalar series.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FlowState>,
    pub f_values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub alpha_values: Vec<f64>,
}

/// Which floor the second-moment records must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuFloor {
    /// `nu > 0`; continuous flows started from `nu(0) > 0`.
    Positive,
    /// `nu >= 0`; discrete steppers started from `nu(0) = 0`.
    NonNegative,
}

impl NuFloor {
    pub fn holds(self, nu: f64) -> bool {
        match self {
            NuFloor::Positive => nu > 0.0,
            NuFloor::NonNegative => nu >= 0.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("record {0}: times not strictly increasing")]
    NonMonotoneTime(usize),
    #[error("record {index}: nu[{coord}] = {value} violates the floor")]
    NuFloor { index: usize, coord: usize, value: f64 },
    #[error("series lengths disagree")]
    Ragged,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Trajectory {
    pub fn push(&mut self, state: FlowState, f: f64, grad_norm: f64, alpha: f64) {
        self.times.push(state.t);
        self.states.push(state);
        self.f_values.push(f);
        self.grad_norms.push(grad_norm);
        self.alpha_values.push(alpha);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, FlowState::dim)
    }

    pub fn last(&self) -> Option<&FlowState> {
        self.states.last()
    }

    pub fn min_nu(&self) -> f64 {
        self.states.iter().map(FlowState::min_nu).fold(f64::INFINITY, f64::min)
    }

    /// Time monotonicity, aligned lengths, and the `nu` floor.
    pub fn validate(&self, floor: NuFloor) -> Result<(), TrajectoryError> {
        let n = self.times.len();
        if [
            self.states.len(),
            self.f_values.len(),
            self.grad_norms.len(),
            self.alpha_values.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(TrajectoryError::Ragged);
        }
        if let Some(i) = self.times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(TrajectoryError::NonMonotoneTime(i + 1));
        }
        for (index, s) in self.states.iter().enumerate() {
            if let Some((coord, &value)) = s.nu.iter().enumerate().find(|(_, &v)| !floor.holds(v)) {
                return Err(TrajectoryError::NuFloor { index, coord, value });
            }
        }
        Ok(())
    }

    pub fn csv_header(d: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t", "f", "grad_norm", "alpha"].iter().map(|s| s.to_string()).collect();
        for prefix in ["x", "mu", "zeta", "nu"] {
            h.extend((0..d).map(|i| format!("{prefix}_{i}")));
        }
        h
    }

    /// Writes `t, f, grad_norm, alpha, x_0.., mu_0.., zeta_0.., nu_0..`.
    ///
    /// Floats use the shortest representation that round-trips, so output is
    /// byte-stable for identical runs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrajectoryError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(self.dim()))?;
        let mut row: Vec<String> = Vec::new();
        for (k, s) in self.states.iter().enumerate() {
            row.clear();
            row.push(fmt_f64(self.times[k]));
            row.push(fmt_f64(self.f_values[k]));
            row.push(fmt_f64(self.grad_norms[k]));
            row.push(fmt_f64(self.alpha_values[k]));
            for &v in s.x.iter().chain(&s.mu).chain(&s.zeta).chain(&s.nu) {
                row.push(fmt_f64(v));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
