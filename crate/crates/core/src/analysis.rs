//! Linear-systems view of the second-moment dynamic.
//!
//! With `psi` as input, `(zeta, nu)` obey the LTI system
//!
//! ```text
//! d/dt [zeta]   [-l3   l3] [zeta]   [ 0]
//!      [ nu ] = [ l4  -l5] [ nu ] + [l6] psi
//! ```
//!
//! whose transfer function to `nu` is `l6 (s + l3) / (s^2 + (l3 + l5) s + l3 (l5 - l4))`.
//! For AdamSSM this is `b2 (s + b2) / (s^2 + (2 b2 + b3) s + b2^2)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::AnalysisError;
use crate::params::OptimizerParams;

/// Ratio of real polynomials, coefficients in descending degree, with a
/// monic denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn strip_leading_zeros(mut c: Vec<f64>) -> Vec<f64> {
    let first = c.iter().position(|&v| v != 0.0).unwrap_or(c.len());
    c.drain(..first);
    c
}

fn polyval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * s + a)
}

impl RationalTF {
    /// Normalizes the denominator to be monic. Fails if the denominator is
    /// zero, any coefficient is non-finite, or the ratio is improper.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, AnalysisError> {
        if num.iter().chain(&den).any(|v| !v.is_finite()) {
            return Err(AnalysisError::Domain("non-finite coefficient".into()));
        }
        let num = strip_leading_zeros(num);
        let den = strip_leading_zeros(den);
        let Some(&lead) = den.first() else {
            return Err(AnalysisError::Domain("zero denominator".into()));
        };
        if num.len() > den.len() {
            return Err(AnalysisError::Domain(format!(
                "improper: numerator degree {} exceeds denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        let (num, den) = if lead == 1.0 {
            (num, den)
        } else {
            (
                num.iter().map(|v| v / lead).collect(),
                den.iter().map(|v| v / lead).collect(),
            )
        };
        Ok(RationalTF { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        polyval(&self.num, s) / polyval(&self.den, s)
    }

    /// `H(0)`, the ratio of constant coefficients.
    pub fn dc_gain(&self) -> f64 {
        let n0 = self.num.last().copied().unwrap_or(0.0);
        n0 / self.den.last().copied().unwrap_or(f64::NAN)
    }

    /// Cancels numerator/denominator roots that coincide to within `tol`
    /// relative distance. Degree at most 2.
    pub fn cancel_common_roots(&self, tol: f64) -> Result<RationalTF, AnalysisError> {
        let (poles, zeros) = poles_zeros(self)?;
        let mut poles = poles;
        let mut kept_zeros = Vec::new();
        for z in zeros {
            let hit = poles
                .iter()
                .position(|p| (p - z).norm() <= tol * p.norm().max(z.norm()).max(f64::MIN_POSITIVE));
            match hit {
                Some(i) => {
                    poles.remove(i);
                }
                None => kept_zeros.push(z),
            }
        }
        let lead = self.num.first().copied().unwrap_or(0.0);
        RationalTF::new(
            real_poly_from_roots(lead, &kept_zeros),
            real_poly_from_roots(1.0, &poles),
        )
    }
}

fn real_poly_from_roots(lead: f64, roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(lead, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, a) in c.iter().enumerate() {
            next[i] += a;
            next[i + 1] -= a * r;
        }
        c = next;
    }
    c.iter().map(|v| v.re).collect()
}

/// AdamSSM's map from `psi` to `nu`:
/// `num = [b2, b2^2]`, `den = [1, 2 b2 + b3, b2^2]`.
pub fn adamssm_tf(b2: f64, b3: f64) -> Result<RationalTF, AnalysisError> {
    if !(b2 > 0.0) || !(b3 >= 0.0) || !b2.is_finite() || !b3.is_finite() {
        return Err(AnalysisError::Domain(format!(
            "need b2 > 0 and b3 >= 0, got b2 = {b2}, b3 = {b3}"
        )));
    }
    let b2sq = b2 * b2;
    Ok(RationalTF {
        num: vec![b2, b2sq],
        den: vec![1.0, 2.0 * b2 + b3, b2sq],
    })
}

/// Roots of `c[0] s^n + ... + c[n]` for `n <= 2`, in closed form.
///
/// Uses the cancellation-free form `q = -(b + sign(b) sqrt(disc)) / 2`,
/// roots `q / a` and `c / q`.
pub fn poly_roots(c: &[f64]) -> Result<Vec<Complex64>, AnalysisError> {
    let c = strip_leading_zeros(c.to_vec());
    match c.len() {
        0 | 1 => Ok(Vec::new()),
        2 => Ok(vec![Complex64::new(-c[1] / c[0], 0.0)]),
        3 => {
            let (a, b, cc) = (c[0], c[1], c[2]);
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                if q == 0.0 {
                    // b = 0 and disc = 0, so c = 0 too
                    return Ok(vec![Complex64::new(0.0, 0.0); 2]);
                }
                Ok(vec![Complex64::new(q / a, 0.0), Complex64::new(cc / q, 0.0)])
            } else {
                let re = -b / (2.0 * a);
                let im = (-disc).sqrt() / (2.0 * a).abs();
                Ok(vec![Complex64::new(re, -im), Complex64::new(re, im)])
            }
        }
        n => Err(AnalysisError::Degree(n - 1)),
    }
}

fn sort_roots(r: &mut [Complex64]) {
    r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Poles and zeros, each sorted by ascending real part.
pub fn poles_zeros(tf: &RationalTF) -> Result<(Vec<Complex64>, Vec<Complex64>), AnalysisError> {
    let mut poles = poly_roots(&tf.den)?;
    let mut zeros = poly_roots(&tf.num)?;
    sort_roots(&mut poles);
    sort_roots(&mut zeros);
    Ok((poles, zeros))
}

/// The `(zeta, nu)` subsystem with state matrix `[[-l3, l3], [l4, -l5]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentLTI {
    pub lambda3: f64,
    pub lambda4: f64,
    pub lambda5: f64,
}

impl SecondMomentLTI {
    pub fn new(lambda3: f64, lambda4: f64, lambda5: f64) -> Result<Self, AnalysisError> {
        if !(lambda3 > 0.0) || !(lambda4 >= 0.0) || ![lambda3, lambda4, lambda5].iter().all(|v| v.is_finite()) {
            return Err(AnalysisError::Domain(format!(
                "need finite lambda3 > 0, lambda4 >= 0; got {lambda3}, {lambda4}, {lambda5}"
            )));
        }
        Ok(SecondMomentLTI {
            lambda3,
            lambda4,
            lambda5,
        })
    }

    pub fn from_params(p: &OptimizerParams) -> Result<Self, AnalysisError> {
        Self::new(p.lambda3, p.lambda4, p.lambda5)
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[-self.lambda3, self.lambda3], [self.lambda4, -self.lambda5]]
    }

    /// Transfer function from `psi` to `nu` with input gain `l6`.
    pub fn transfer_function(&self, gain: f64) -> Result<RationalTF, AnalysisError> {
        let (l3, l4, l5) = (self.lambda3, self.lambda4, self.lambda5);
        RationalTF::new(vec![gain, gain * l3], vec![1.0, l3 + l5, l3 * l5 - l3 * l4])
    }
}

/// `p = sqrt((l3 - l5)^2 + 4 l3 l4)`.
pub fn stability_quantity_p(lti: &SecondMomentLTI) -> f64 {
    let d = lti.lambda3 - lti.lambda5;
    (d * d + 4.0 * lti.lambda3 * lti.lambda4).sqrt()
}

/// `e^{-sigma t} (e^{pt/2} - e^{-pt/2}) / p` and `e^{-sigma t} cosh(pt/2)`,
/// evaluated without overflow or cancellation. At `p = 0` the first is
/// `t e^{-sigma t}`.
fn transition_kernels(lti: &SecondMomentLTI, t: f64) -> (f64, f64) {
    let sigma = 0.5 * (lti.lambda3 + lti.lambda5);
    let p = stability_quantity_p(lti);
    if p == 0.0 {
        let e = (-sigma * t).exp();
        return (t * e, e);
    }
    let e_plus = (-(sigma - 0.5 * p) * t).exp();
    let e_minus = (-(sigma + 0.5 * p) * t).exp();
    let s = -e_plus * (-p * t).exp_m1() / p;
    (s, 0.5 * (e_plus + e_minus))
}

fn check_time(t: f64) -> Result<(), AnalysisError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(AnalysisError::Domain(format!("t = {t} must be finite and nonnegative")));
    }
    Ok(())
}

/// `(phi12(t), phi22(t))` of `e^{At}`:
///
/// ```text
/// phi12 = l3 e^{-(l3+l5)t/2} (e^{pt/2} - e^{-pt/2}) / p
/// phi22 = e^{-(l3+l5)t/2} [e^{pt/2}(p - l5 + l3) + e^{-pt/2}(p + l5 - l3)] / (2p)
/// ```
///
/// The repeated-eigenvalue case `p = 0` uses the confluent limits
/// `phi12 = l3 t e^{-sigma t}`, `phi22 = e^{-sigma t}`.
pub fn state_transition_entries(lti: &SecondMomentLTI, t: f64) -> Result<(f64, f64), AnalysisError> {
    let m = state_transition_matrix(lti, t)?;
    Ok((m[0][1], m[1][1]))
}

/// Full `e^{At}` in closed form.
pub fn state_transition_matrix(lti: &SecondMomentLTI, t: f64) -> Result<[[f64; 2]; 2], AnalysisError> {
    check_time(t)?;
    let (s, ch) = transition_kernels(lti, t);
    let (l3, l4, l5) = (lti.lambda3, lti.lambda4, lti.lambda5);
    let half_diff = 0.5 * (l3 - l5);
    Ok([[ch - half_diff * s, l3 * s], [l4 * s, ch + half_diff * s]])
}

fn uniform_step(times: &[f64]) -> Result<f64, AnalysisError> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return Err(AnalysisError::Grid("times must be strictly increasing".into()));
    }
    // relative slack plus rounding of the absolute times
    let tol = 1e-9 * h + 4.0 * f64::EPSILON * times[times.len() - 1].abs();
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > tol {
            return Err(AnalysisError::Grid(format!(
                "non-uniform spacing at index {}: {} vs {h}",
                k + 1,
                w[1] - w[0]
            )));
        }
    }
    Ok(h)
}

/// Second-moment solution on a uniform grid starting at `times[0]`:
///
/// ```text
/// nu(t) = phi21(t - t0) zeta(t0) + phi22(t - t0) nu(t0)
///       + gain * int_{t0}^{t} phi22(t - s) u(s) ds
/// ```
///
/// The lower limit is whatever `times[0]` is. The convolution uses the
/// trapezoid rule on the grid.
pub fn second_moment_response(
    lti: &SecondMomentLTI,
    gain: f64,
    times: &[f64],
    inputs: &[f64],
    zeta0: f64,
    nu0: f64,
) -> Result<Vec<f64>, AnalysisError> {
    if times.len() != inputs.len() {
        return Err(AnalysisError::Grid(format!(
            "{} times but {} inputs",
            times.len(),
            inputs.len()
        )));
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let h = uniform_step(times)?;
    let n = times.len();
    let phi: Vec<[[f64; 2]; 2]> = (0..n)
        .map(|j| state_transition_matrix(lti, j as f64 * h))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let homogeneous = phi[k][1][0] * zeta0 + phi[k][1][1] * nu0;
        let mut conv = 0.0;
        if k > 0 {
            conv += 0.5 * (phi[k][1][1] * inputs[0] + phi[0][1][1] * inputs[k]);
            for j in 1..k {
                conv += phi[k - j][1][1] * inputs[j];
            }
            conv *= h;
        }
        out.push(homogeneous + gain * conv);
    }
    Ok(out)
}

/// Partial-fraction data of a strictly proper part: direct term, residue
/// numerator `r(s)`, and poles.
struct Modes {
    direct: f64,
    r: Vec<f64>,
    poles: Vec<Complex64>,
}

fn modes(tf: &RationalTF) -> Result<Modes, AnalysisError> {
    let n = tf.degree();
    if n > 2 {
        return Err(AnalysisError::Degree(n));
    }
    let mut num = vec![0.0; tf.den.len() - tf.num.len()];
    num.extend_from_slice(&tf.num);
    let direct = num[0];
    let r: Vec<f64> = num.iter().zip(&tf.den).map(|(a, b)| a - direct * b).skip(1).collect();
    let poles = poly_roots(&tf.den)?;
    Ok(Modes { direct, r, poles })
}

/// Impulse response `h(t)` of the strictly proper part (a direct term would
/// add a Dirac impulse at 0, which is not sampled).
pub fn impulse_response(tf: &RationalTF, times: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let m = modes(tf)?;
    times
        .iter()
        .map(|&t| {
            check_time(t)?;
            Ok(match m.poles.as_slice() {
                [] => 0.0,
                [p] => m.r[0] * (p * t).exp().re,
                [p1, p2] => {
                    let a = m.r[0];
                    let b = m.r[1];
                    if p1 == p2 {
                        ((a * p1 + b) * t + a) * (p1 * t).exp()
                    } else {
                        (a * p1 + b) / (p1 - p2) * (p1 * t).exp() + (a * p2 + b) / (p2 - p1) * (p2 * t).exp()
                    }
                    .re
                }
                _ => unreachable!(),
            })
        })
        .collect()
}

/// `(e^{pt} - 1) / p`, equal to `t` at `p = 0`.
fn integral_exp(p: Complex64, t: f64) -> Complex64 {
    if p == Complex64::new(0.0, 0.0) {
        return Complex64::new(t, 0.0);
    }
    let z = p * t;
    let em1 = if z.im == 0.0 {
        Complex64::new(z.re.exp_m1(), 0.0)
    } else {
        z.exp() - 1.0
    };
    em1 / p
}

/// Unit-step response `y(t) = D + int_0^t h(s) ds` from zero state.
pub fn step_response(tf: &RationalTF, times: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let m = modes(tf)?;
    times
        .iter()
        .map(|&t| {
            check_time(t)?;
            let regular = match m.poles.as_slice() {
                [] => 0.0,
                [p] => (m.r[0] * integral_exp(*p, t)).re,
                [p1, p2] => {
                    let a = m.r[0];
                    let b = m.r[1];
                    if p1 == p2 {
                        if p1.norm() == 0.0 {
                            return Err(AnalysisError::Domain("double pole at the origin".into()));
                        }
                        // int (alpha s + a) e^{ps} ds with alpha = a p + b
                        let alpha = a * p1 + b;
                        let e1 = integral_exp(*p1, t);
                        let s_exp = (t * (p1 * t).exp() - e1) / p1;
                        (alpha * s_exp + a * e1).re
                    } else {
                        ((a * p1 + b) / (p1 - p2) * integral_exp(*p1, t)
                            + (a * p2 + b) / (p2 - p1) * integral_exp(*p2, t))
                        .re
                    }
                }
                _ => unreachable!(),
            };
            Ok(m.direct + regular)
        })
        .collect()
}

/// Summary printed by the `analyze` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdamSsmAnalysis {
    pub poles: Vec<[f64; 2]>,
    pub zeros: Vec<[f64; 2]>,
    pub p: f64,
    pub dc_gain: f64,
}

/// Poles, zeros (as `[re, im]`), `p`, and DC gain of the AdamSSM second-moment
/// dynamic with rates `b2, b3`.
pub fn analyze_adamssm(b2: f64, b3: f64) -> Result<AdamSsmAnalysis, AnalysisError> {
    let tf = adamssm_tf(b2, b3)?;
    let (poles, zeros) = poles_zeros(&tf)?;
    let lti = SecondMomentLTI::new(b2, b3, b2 + b3)?;
    let pair = |z: &Complex64| [z.re, z.im];
    Ok(AdamSsmAnalysis {
        poles: poles.iter().map(pair).collect(),
        zeros: zeros.iter().map(pair).collect(),
        p: stability_quantity_p(&lti),
        dc_gain: tf.dc_gain(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const B2: f64 = 0.0067;
    const B3: f64 = 0.02;

    fn lti() -> SecondMomentLTI {
        SecondMomentLTI::new(B2, B3, B2 + B3).unwrap()
    }

    #[test]
    fn tf_coefficients() {
        let tf = adamssm_tf(B2, B3).unwrap();
        assert_eq!(tf.num(), &[B2, B2 * B2]);
        assert_relative_eq!(tf.den()[1], 0.0334, max_relative = 1e-15);
        assert_relative_eq!(tf.den()[2], 4.489e-5, max_relative = 1e-15);
        assert_eq!(tf.dc_gain(), 1.0);
    }

    #[test]
    fn poles_and_zero() {
        let (poles, zeros) = poles_zeros(&adamssm_tf(B2, B3).unwrap()).unwrap();
        assert_relative_eq!(poles[0].re, -0.03199705854077835, max_relative = 1e-13);
        assert_relative_eq!(poles[1].re, -0.00140294145922165, max_relative = 1e-13);
        assert!(poles.iter().all(|p| p.im == 0.0));
        assert_relative_eq!(zeros[0].re, -B2, max_relative = 1e-15);
    }

    #[test]
    fn b3_zero_cancels_to_first_order() {
        let tf = adamssm_tf(B2, 0.0).unwrap();
        let (poles, _) = poles_zeros(&tf).unwrap();
        assert_eq!(poles, vec![Complex64::new(-B2, 0.0); 2]);
        let reduced = tf.cancel_common_roots(1e-12).unwrap();
        assert_eq!(reduced.degree(), 1);
        assert_relative_eq!(reduced.num()[0], B2, max_relative = 1e-15);
        assert_relative_eq!(reduced.den()[1], B2, max_relative = 1e-15);
        let full = adamssm_tf(B2, B3).unwrap().cancel_common_roots(1e-12).unwrap();
        assert_eq!(full.degree(), 2);
    }

    #[test]
    fn degree_limits() {
        assert_eq!(poly_roots(&[1.0, 0.0, 0.0, 1.0]), Err(AnalysisError::Degree(3)));
        let tf = RationalTF::new(vec![1.0], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(poles_zeros(&tf), Err(AnalysisError::Degree(3)));
    }

    #[test]
    fn complex_roots_and_normalization() {
        let tf = RationalTF::new(vec![2.0], vec![2.0, 2.0, 4.0]).unwrap();
        assert_eq!(tf.den(), &[1.0, 1.0, 2.0]);
        let (p, _) = poles_zeros(&tf).unwrap();
        assert_relative_eq!(p[0].re, -0.5);
        assert_relative_eq!(p[0].im, -(7.0f64).sqrt() / 2.0);
        assert_relative_eq!(p[1].im, (7.0f64).sqrt() / 2.0);
        assert!(RationalTF::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn p_values() {
        assert_relative_eq!(stability_quantity_p(&lti()), 0.0305941170815567, max_relative = 1e-14);
        let l = SecondMomentLTI::new(0.3, 0.0, 1.1).unwrap();
        assert_relative_eq!(stability_quantity_p(&l), 0.8, max_relative = 1e-15);
    }

    #[test]
    fn p_bounds_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let l3 = rng.gen_range(1e-4..2.0);
            let l4 = rng.gen_range(0.0..2.0);
            let l5 = l4 + rng.gen_range(0.0..2.0);
            let l = SecondMomentLTI::new(l3, l4, l5).unwrap();
            let p = stability_quantity_p(&l);
            assert!(p >= (l3 - l5).abs());
            assert!(p <= (l3 + l5) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn identity_at_zero_and_positive_phi22() {
        let m = state_transition_matrix(&lti(), 0.0).unwrap();
        assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
        for k in 0..2000 {
            let (_, p22) = state_transition_entries(&lti(), k as f64 * 0.5).unwrap();
            assert!(p22 > 0.0);
        }
        assert!(state_transition_entries(&lti(), -1.0).is_err());
    }

    #[test]
    fn confluent_case_is_continuous() {
        // l3 = l5, l4 = 0 gives p = 0
        let l = SecondMomentLTI::new(0.5, 0.0, 0.5).unwrap();
        assert_eq!(stability_quantity_p(&l), 0.0);
        let (a12, a22) = state_transition_entries(&l, 2.0).unwrap();
        assert_relative_eq!(a12, 0.5 * 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(a22, (-1.0f64).exp(), max_relative = 1e-15);
        let near = SecondMomentLTI::new(0.5, 1e-14, 0.5).unwrap();
        let (b12, b22) = state_transition_entries(&near, 2.0).unwrap();
        assert_relative_eq!(a12, b12, max_relative = 1e-6);
        assert_relative_eq!(a22, b22, max_relative = 1e-6);
    }

    #[test]
    fn no_overflow_at_long_horizons() {
        let (a12, a22) = state_transition_entries(&lti(), 1e5).unwrap();
        assert!(a12.is_finite() && a22.is_finite());
        assert!(a12 >= 0.0 && a22 >= 0.0);
    }

    #[test]
    fn response_zero_input_is_phi22() {
        let times: Vec<f64> = (0..200).map(|k| 1.0 + k as f64 * 0.25).collect();
        let out = second_moment_response(&lti(), B2, &times, &vec![0.0; 200], 0.0, 1.0).unwrap();
        for (k, v) in out.iter().enumerate() {
            let (_, p22) = state_transition_entries(&lti(), times[k] - 1.0).unwrap();
            assert_relative_eq!(*v, p22, max_relative = 1e-12);
        }
    }

    #[test]
    fn response_constant_input_reaches_dc_gain() {
        let n = 6000;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 1.0).collect();
        let out = second_moment_response(&lti(), B2, &times, &vec![3.0; n], 0.0, 0.0).unwrap();
        assert_relative_eq!(*out.last().unwrap(), 3.0, max_relative = 1e-3);
    }

    #[test]
    fn response_grid_errors() {
        let l = lti();
        assert!(matches!(
            second_moment_response(&l, 1.0, &[0.0, 1.0, 2.5], &[0.0; 3], 0.0, 1.0),
            Err(AnalysisError::Grid(_))
        ));
        assert!(matches!(
            second_moment_response(&l, 1.0, &[0.0, 1.0], &[0.0; 3], 0.0, 1.0),
            Err(AnalysisError::Grid(_))
        ));
    }

    #[test]
    fn impulse_response_is_scaled_phi22() {
        let tf = adamssm_tf(B2, B3).unwrap();
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 7.0).collect();
        let h = impulse_response(&tf, &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let (_, p22) = state_transition_entries(&lti(), t).unwrap();
            assert_relative_eq!(h[k], B2 * p22, max_relative = 1e-10, epsilon = 1e-18);
        }
    }

    #[test]
    fn double_pole_impulse_and_step() {
        let tf = adamssm_tf(B2, 0.0).unwrap();
        let times = [0.0, 10.0, 100.0, 1000.0];
        let h = impulse_response(&tf, &times).unwrap();
        let y = step_response(&tf, &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            // reduces to b2 / (s + b2)
            assert_relative_eq!(h[k], B2 * (-B2 * t).exp(), max_relative = 1e-12);
            assert_relative_eq!(y[k], 1.0 - (-B2 * t).exp(), max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn step_response_with_direct_term() {
        // (s + 2) / (s + 1) = 1 + 1 / (s + 1)
        let tf = RationalTF::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let y = step_response(&tf, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(y[0], 1.0);
        assert_relative_eq!(y[1], 1.0 + 1.0 - (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn analyze_summary() {
        let a = analyze_adamssm(B2, B3).unwrap();
        assert_eq!(a.poles.len(), 2);
        assert_eq!(a.zeros.len(), 1);
        assert_eq!(a.dc_gain, 1.0);
        assert!(analyze_adamssm(0.0, B3).is_err());
    }
}
