//! Generic optimizer parameterization, named presets, the bias-correction
//! factor `alpha_g`, and the stability-condition validator.
//!
//! Every optimizer in this crate is an instance of the nine-scalar family
//! `(lambda1..lambda8, c)` together with an input function [`PsiKind`]:
//!
//! ```text
//! mu'   = -l1 mu + l2 g
//! zeta' = -l3 zeta + l3 nu
//! nu'   =  l4 zeta - l5 nu + l6 psi(g, mu)
//! x'    = -(l7 mu + l8 g) / (alpha_g(t) nu^c)
//! ```
//!
//! Named optimizers (G-AdaGrad, Adam, AdaBelief, AdamSSM, AdaBelief-SSM) are
//! described by the smaller [`PresetParams`] and lowered with
//! [`map_preset_to_general`].

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Condition, ValidationError, Violation};
use crate::psi::PsiKind;

/// Raw nine-scalar parameter vector. Nothing is checked until
/// [`validate_params`] turns it into [`ValidParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub lambda5: f64,
    pub lambda6: f64,
    pub lambda7: f64,
    pub lambda8: f64,
    pub c: f64,
    pub psi: PsiKind,
}

impl OptimizerParams {
    /// True iff the first moment drives `x` and therefore needs bias correction.
    pub fn bias_correction(&self) -> bool {
        self.lambda7 > 0.0
    }

    /// Bias-correction factor
    /// `(1 - (1 - l2)^(t+1)) / (1 - (1 - l6)^(t+1))^c` when `l7 > 0`, else 1.
    ///
    /// `t` is continuous time; it enters the exponent as written.
    pub fn alpha_g(&self, t: f64) -> f64 {
        if !self.bias_correction() {
            return 1.0;
        }
        let num = 1.0 - (1.0 - self.lambda2).powf(t + 1.0);
        let den = (1.0 - (1.0 - self.lambda6).powf(t + 1.0)).powf(self.c);
        num / den
    }

    fn lambdas(&self) -> [f64; 8] {
        [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda5,
            self.lambda6,
            self.lambda7,
            self.lambda8,
        ]
    }
}

/// Free-function form of [`OptimizerParams::alpha_g`].
pub fn alpha_g(t: f64, params: &OptimizerParams) -> f64 {
    params.alpha_g(t)
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidParams(OptimizerParams);

impl ValidParams {
    pub fn into_inner(self) -> OptimizerParams {
        self.0
    }
}

impl Deref for ValidParams {
    type Target = OptimizerParams;

    fn deref(&self) -> &OptimizerParams {
        &self.0
    }
}

/// Checks the convergence conditions on the generic parameters.
///
/// Accepts iff `0 < c < 1`, `l2 > 0`, `l3 > 0`, `0 <= l4 <= l5 < 2 l1 / c`,
/// `l6 > 0`, `l7 >= 0`, `l8 >= 0`, `l7 + l8 > 0`, and, when `l7 > 0`,
/// `l6 < l2 < 1`. All strict inequalities are compared exactly, with no
/// tolerance. Every violated condition is reported.
pub fn validate_params(raw: OptimizerParams) -> Result<ValidParams, ValidationError> {
    let mut v = Vec::new();

    let non_finite: Vec<&str> = [
        "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6", "lambda7", "lambda8",
    ]
    .iter()
    .zip(raw.lambdas())
    .filter(|(_, x)| !x.is_finite())
    .map(|(n, _)| *n)
    .chain((!raw.c.is_finite()).then_some("c"))
    .collect();
    if !non_finite.is_empty() {
        v.push(Violation::new(
            Condition::Finite,
            format!("non-finite: {}", non_finite.join(", ")),
        ));
        return Err(ValidationError::new(v));
    }

    let OptimizerParams {
        lambda1: l1,
        lambda2: l2,
        lambda3: l3,
        lambda4: l4,
        lambda5: l5,
        lambda6: l6,
        lambda7: l7,
        lambda8: l8,
        c,
        ..
    } = raw;

    let mut check = |ok: bool, cond: Condition, detail: String| {
        if !ok {
            v.push(Violation::new(cond, detail));
        }
    };
    check(c > 0.0, Condition::CPositive, format!("c = {c}"));
    check(c < 1.0, Condition::CBelowOne, format!("c = {c}"));
    check(l2 > 0.0, Condition::Lambda2Positive, format!("lambda2 = {l2}"));
    check(l3 > 0.0, Condition::Lambda3Positive, format!("lambda3 = {l3}"));
    check(l4 >= 0.0, Condition::Lambda4NonNegative, format!("lambda4 = {l4}"));
    check(
        l4 <= l5,
        Condition::Lambda4AtMostLambda5,
        format!("lambda4 = {l4}, lambda5 = {l5}"),
    );
    // `l5 < 2 l1 / c` is only meaningful for c > 0; a bad c is already reported.
    if c > 0.0 {
        check(
            l5 < 2.0 * l1 / c,
            Condition::Lambda5BelowBound,
            format!("lambda5 = {l5}, 2*lambda1/c = {}", 2.0 * l1 / c),
        );
    }
    check(l6 > 0.0, Condition::Lambda6Positive, format!("lambda6 = {l6}"));
    check(l7 >= 0.0, Condition::Lambda7NonNegative, format!("lambda7 = {l7}"));
    check(l8 >= 0.0, Condition::Lambda8NonNegative, format!("lambda8 = {l8}"));
    check(
        l7 + l8 > 0.0,
        Condition::Lambda7PlusLambda8Positive,
        format!("lambda7 + lambda8 = {}", l7 + l8),
    );
    if l7 > 0.0 {
        check(
            l6 < l2,
            Condition::Lambda6BelowLambda2,
            format!("lambda6 = {l6}, lambda2 = {l2}"),
        );
        check(l2 < 1.0, Condition::Lambda2BelowOne, format!("lambda2 = {l2}"));
    }

    if v.is_empty() {
        Ok(ValidParams(raw))
    } else {
        Err(ValidationError::new(v))
    }
}

/// Named optimizer families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    #[serde(rename = "gadagrad")]
    GAdaGrad,
    Adam,
    #[serde(rename = "adabelief")]
    AdaBelief,
    #[serde(rename = "adamssm")]
    AdamSsm,
    #[serde(rename = "adabelief_ssm")]
    AdaBeliefSsm,
}

impl PresetKind {
    pub const ALL: [PresetKind; 5] = [
        PresetKind::GAdaGrad,
        PresetKind::Adam,
        PresetKind::AdaBelief,
        PresetKind::AdamSsm,
        PresetKind::AdaBeliefSsm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::GAdaGrad => "gadagrad",
            PresetKind::Adam => "adam",
            PresetKind::AdaBelief => "adabelief",
            PresetKind::AdamSsm => "adamssm",
            PresetKind::AdaBeliefSsm => "adabelief_ssm",
        }
    }

    pub fn psi(self) -> PsiKind {
        match self {
            PresetKind::AdaBelief | PresetKind::AdaBeliefSsm => PsiKind::Belief,
            _ => PsiKind::SquaredGradient,
        }
    }

    /// Kinds whose second-moment dynamic carries the extra pole-zero pair.
    pub fn is_ssm(self) -> bool {
        matches!(self, PresetKind::AdamSsm | PresetKind::AdaBeliefSsm)
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rates and discretization constants of the named optimizers.
///
/// `b1, b2, b3` are continuous-time rates. The discrete momentum constants
/// follow from the sampling time as `beta1 = 1 - delta*b1` and
/// `beta2 = 1 - delta*b2`. `c` is only read by G-AdaGrad; the Adam family
/// fixes `c = 0.5`. `eta` is the base learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub c: f64,
}

impl Default for PresetParams {
    /// `b1 = 0.67, b2 = 0.0067` at `delta = 0.15` reproduce the usual
    /// `beta1 ~ 0.9, beta2 ~ 0.999`.
    fn default() -> Self {
        PresetParams {
            b1: 0.67,
            b2: 0.0067,
            b3: 0.02,
            delta: 0.15,
            epsilon: 1e-8,
            eta: 1e-3,
            c: 0.5,
        }
    }
}

impl PresetParams {
    pub fn beta1(&self) -> f64 {
        1.0 - self.delta * self.b1
    }

    pub fn beta2(&self) -> f64 {
        1.0 - self.delta * self.b2
    }

    /// Same values with `b3 = 0`.
    pub fn without_b3(self) -> Self {
        PresetParams { b3: 0.0, ..self }
    }
}

/// Checks the preset conditions for `kind`.
///
/// * Adam, AdaBelief: `0 < b2 < b1 < 1` (`b3` is ignored).
/// * AdamSSM, AdaBelief-SSM: additionally `b3 > 0` and `b2 + b3 < 4 b1`.
/// * G-AdaGrad: `0 < c < 1` only.
///
/// All kinds require `delta > 0`, `epsilon > 0`, `eta > 0`.
pub fn validate_preset(preset: PresetParams, kind: PresetKind) -> Result<PresetParams, ValidationError> {
    let PresetParams {
        b1,
        b2,
        b3,
        delta,
        epsilon,
        eta,
        c,
    } = preset;
    let mut v = Vec::new();

    let fields = [
        ("b1", b1),
        ("b2", b2),
        ("b3", b3),
        ("delta", delta),
        ("epsilon", epsilon),
        ("eta", eta),
        ("c", c),
    ];
    let non_finite: Vec<&str> = fields.iter().filter(|(_, x)| !x.is_finite()).map(|(n, _)| *n).collect();
    if !non_finite.is_empty() {
        v.push(Violation::new(
            Condition::Finite,
            format!("non-finite: {}", non_finite.join(", ")),
        ));
        return Err(ValidationError::new(v));
    }

    let mut check = |ok: bool, cond: Condition, detail: String| {
        if !ok {
            v.push(Violation::new(cond, detail));
        }
    };
    check(delta > 0.0, Condition::DeltaPositive, format!("delta = {delta}"));
    check(
        epsilon > 0.0,
        Condition::EpsilonPositive,
        format!("epsilon = {epsilon}"),
    );
    check(eta > 0.0, Condition::EtaPositive, format!("eta = {eta}"));

    match kind {
        PresetKind::GAdaGrad => {
            check(c > 0.0, Condition::CPositive, format!("c = {c}"));
            check(c < 1.0, Condition::CBelowOne, format!("c = {c}"));
        }
        _ => {
            check(b2 > 0.0, Condition::B2Positive, format!("b2 = {b2}"));
            check(b2 < b1, Condition::B2BelowB1, format!("b2 = {b2}, b1 = {b1}"));
            check(b1 < 1.0, Condition::B1BelowOne, format!("b1 = {b1}"));
            if kind.is_ssm() {
                check(b3 > 0.0, Condition::B3Positive, format!("b3 = {b3}"));
                check(
                    b2 + b3 < 4.0 * b1,
                    Condition::B2PlusB3Bound,
                    format!("b2 + b3 = {}, 4*b1 = {}", b2 + b3, 4.0 * b1),
                );
            }
        }
    }

    if v.is_empty() {
        Ok(preset)
    } else {
        Err(ValidationError::new(v))
    }
}

/// Lowers a named preset onto the generic nine-scalar family.
///
/// G-AdaGrad leaves `l1, l2, l3` unconstrained (its moments never feed `x`);
/// they are set to 1 so that the generic validator accepts the mapping. Adam
/// and AdaBelief set `l3 = b2`, which is inert because `l4 = 0`.
pub fn map_preset_to_general(preset: &PresetParams, kind: PresetKind) -> OptimizerParams {
    let psi = kind.psi();
    let PresetParams { b1, b2, b3, .. } = *preset;
    match kind {
        PresetKind::GAdaGrad => OptimizerParams {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            lambda4: 0.0,
            lambda5: 0.0,
            lambda6: 1.0,
            lambda7: 0.0,
            lambda8: 1.0,
            c: preset.c,
            psi,
        },
        PresetKind::Adam | PresetKind::AdaBelief => OptimizerParams {
            lambda1: b1,
            lambda2: b1,
            lambda3: b2,
            lambda4: 0.0,
            lambda5: b2,
            lambda6: b2,
            lambda7: 1.0,
            lambda8: 0.0,
            c: 0.5,
            psi,
        },
        PresetKind::AdamSsm | PresetKind::AdaBeliefSsm => OptimizerParams {
            lambda1: b1,
            lambda2: b1,
            lambda3: b2,
            lambda4: b3,
            lambda5: b2 + b3,
            lambda6: b2,
            lambda7: 1.0,
            lambda8: 0.0,
            c: 0.5,
            psi,
        },
    }
}

/// Validates `preset` for `kind`, lowers it, and validates the result.
pub fn preset_to_valid_params(preset: &PresetParams, kind: PresetKind) -> Result<ValidParams, ValidationError> {
    let preset = validate_preset(*preset, kind)?;
    validate_params(map_preset_to_general(&preset, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn adam_mapping() -> OptimizerParams {
        OptimizerParams {
            lambda1: 0.67,
            lambda2: 0.67,
            lambda3: 0.0067,
            lambda4: 0.0,
            lambda5: 0.0067,
            lambda6: 0.0067,
            lambda7: 1.0,
            lambda8: 0.0,
            c: 0.5,
            psi: PsiKind::SquaredGradient,
        }
    }

    fn names(err: &ValidationError) -> Vec<&'static str> {
        err.conditions().map(Condition::as_str).collect()
    }

    #[test]
    fn alpha_is_one_without_bias_correction() {
        let p = map_preset_to_general(&PresetParams::default(), PresetKind::GAdaGrad);
        assert!(!p.bias_correction());
        for t in [0.0, 0.5, 3.0, 1e6] {
            assert_eq!(p.alpha_g(t), 1.0);
        }
    }

    #[test]
    fn alpha_at_zero_matches_hand_value() {
        // 0.67 / sqrt(0.0067), evaluated at 30 digits.
        let a = alpha_g(0.0, &adam_mapping());
        assert_relative_eq!(a, 8.185_352_771_872_45, max_relative = 1e-14);
    }

    #[test]
    fn alpha_tends_to_one() {
        let p = adam_mapping();
        assert_relative_eq!(p.alpha_g(1e5), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_eventually_non_increasing_on_geometric_grid() {
        let p = adam_mapping();
        let grid: Vec<f64> = (0..200).map(|k| 1e-3 * 1.1f64.powi(k)).collect();
        let a: Vec<f64> = grid.iter().map(|&t| p.alpha_g(t)).collect();
        assert!(a.iter().all(|&x| x > 0.0));
        // first index after which alpha never increases again
        let last_rise = a.windows(2).rposition(|w| w[1] > w[0]);
        let tail_start = last_rise.map_or(0, |i| i + 1);
        assert!(tail_start < a.len() - 1, "no monotone tail found");
    }

    #[test]
    fn adam_mapping_is_accepted() {
        assert!(validate_params(adam_mapping()).is_ok());
    }

    #[test]
    fn strict_upper_bound_on_lambda5_is_exact() {
        let mut p = adam_mapping();
        p.lambda5 = 2.0 * p.lambda1 / p.c;
        let err = validate_params(p).unwrap_err();
        assert_eq!(names(&err), vec!["lambda5 < 2*lambda1/c"]);
    }

    #[test]
    fn lambda7_and_lambda8_both_zero_rejected() {
        let mut p = adam_mapping();
        p.lambda7 = 0.0;
        p.lambda8 = 0.0;
        let err = validate_params(p).unwrap_err();
        assert_eq!(names(&err), vec!["lambda7 + lambda8 > 0"]);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut p = adam_mapping();
        p.c = 1.5;
        p.lambda3 = 0.0;
        p.lambda6 = 0.9;
        let err = validate_params(p).unwrap_err();
        assert_eq!(
            names(&err),
            vec!["c < 1", "lambda3 > 0", "lambda6 < lambda2 (lambda7 > 0)"]
        );
    }

    #[test]
    fn nan_is_rejected_once() {
        let mut p = adam_mapping();
        p.lambda1 = f64::NAN;
        let err = validate_params(p).unwrap_err();
        assert_eq!(names(&err), vec!["finite"]);
    }

    #[test]
    fn ssm_preset_hand_example() {
        let p = PresetParams {
            b1: 0.67,
            b2: 0.0067,
            b3: 0.02,
            ..PresetParams::default()
        };
        assert!(validate_preset(p, PresetKind::AdamSsm).is_ok());
        let general = map_preset_to_general(&p, PresetKind::AdamSsm);
        assert_relative_eq!(general.lambda5, 0.0267, max_relative = 1e-15);
        assert!(validate_params(general).is_ok());
    }

    #[test]
    fn b2_above_b1_rejected() {
        let p = PresetParams {
            b1: 0.5,
            b2: 0.6,
            ..PresetParams::default()
        };
        let err = validate_preset(p, PresetKind::Adam).unwrap_err();
        assert_eq!(names(&err), vec!["b2 < b1"]);
    }

    #[test]
    fn zero_b3_only_matters_for_ssm_kinds() {
        let p = PresetParams::default().without_b3();
        let err = validate_preset(p, PresetKind::AdamSsm).unwrap_err();
        assert_eq!(names(&err), vec!["b3 > 0"]);
        assert!(validate_preset(p, PresetKind::Adam).is_ok());
    }

    #[test]
    fn gadagrad_only_checks_c() {
        let p = PresetParams {
            b1: 0.1,
            b2: 5.0,
            ..PresetParams::default()
        };
        assert!(validate_preset(p, PresetKind::GAdaGrad).is_ok());
        let bad = PresetParams { c: 1.0, ..p };
        let err = validate_preset(bad, PresetKind::GAdaGrad).unwrap_err();
        assert_eq!(names(&err), vec!["c < 1"]);
    }

    #[test]
    fn gadagrad_mapping_has_no_bias_correction() {
        let g = map_preset_to_general(&PresetParams::default(), PresetKind::GAdaGrad);
        assert_eq!(
            (g.lambda4, g.lambda5, g.lambda6, g.lambda7, g.lambda8),
            (0.0, 0.0, 1.0, 0.0, 1.0)
        );
        assert!(!g.bias_correction());
        assert!(validate_params(g).is_ok());
    }

    #[test]
    fn all_five_default_mappings_validate() {
        for kind in PresetKind::ALL {
            let v = preset_to_valid_params(&PresetParams::default(), kind);
            assert!(v.is_ok(), "{kind}: {v:?}");
        }
    }

    #[test]
    fn discrete_betas_from_default_rates() {
        let p = PresetParams::default();
        assert_relative_eq!(p.beta1(), 0.8995, max_relative = 1e-15);
        assert_relative_eq!(p.beta2(), 0.998995, max_relative = 1e-15);
        assert!((p.beta2() - 0.999).abs() < 1e-4);
    }

    fn valid_preset_strategy() -> impl Strategy<Value = (PresetParams, PresetKind)> {
        (
            0.01f64..0.99,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            prop::sample::select(PresetKind::ALL.to_vec()),
        )
            .prop_map(|(b1, r2, r3, cfrac, kind)| {
                let b2 = (b1 * r2).max(1e-6).min(b1 * 0.999);
                // b3 in (0, 4 b1 - b2)
                let b3 = ((4.0 * b1 - b2) * r3).max(1e-9).min((4.0 * b1 - b2) * 0.999);
                let c = (0.01 + 0.98 * cfrac).min(0.99);
                (
                    PresetParams {
                        b1,
                        b2,
                        b3,
                        c,
                        ..PresetParams::default()
                    },
                    kind,
                )
            })
    }

    proptest! {
        #[test]
        fn valid_presets_map_to_valid_params((preset, kind) in valid_preset_strategy()) {
            prop_assert!(validate_preset(preset, kind).is_ok());
            let mapped = map_preset_to_general(&preset, kind);
            prop_assert!(validate_params(mapped).is_ok(), "{:?} -> {:?}", kind, mapped);
        }

        #[test]
        fn alpha_positive_for_valid_params((preset, kind) in valid_preset_strategy(), t in 0.0f64..1e4) {
            let p = preset_to_valid_params(&preset, kind).unwrap();
            prop_assert!(p.alpha_g(t) > 0.0);
        }
    }
}
