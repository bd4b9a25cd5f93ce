//! The health chain: parameters, admissibility, payoff and transition matrices.
//!
//! States are healthy, ill and dead. A healthy person never dies directly, the
//! dead state is absorbing, and per period the insurer pays nothing, one unit,
//! or `d` units respectively.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

pub const BETA_CAP: f64 = 0.15;
pub const GAMMA_CAP: f64 = 0.05;
pub const DEFAULT_C0: f64 = 0.9;

/// Unvalidated parameter tuple, as read from a config object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d: u32,
    #[serde(default = "default_c0")]
    pub c0: f64,
}

fn default_c0() -> f64 {
    DEFAULT_C0
}

impl RawParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: u32) -> Self {
        RawParams {
            alpha,
            beta,
            gamma,
            d,
            c0: DEFAULT_C0,
        }
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    /// Every inequality of the admissible box that this tuple breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let RawParams {
            alpha,
            beta,
            gamma,
            d,
            c0,
        } = *self;
        if ![alpha, beta, gamma, c0].iter().all(|x| x.is_finite()) {
            v.push(Violation::NotFinite);
            return v;
        }
        if !(c0 > 0.0 && c0 < 1.0) {
            v.push(Violation::CapOutOfRange);
        }
        if alpha <= 0.0 {
            v.push(Violation::AlphaNotPositive);
        }
        if alpha > c0 {
            v.push(Violation::AlphaAboveCap);
        }
        if beta <= 0.0 {
            v.push(Violation::BetaNotPositive);
        }
        if beta > BETA_CAP {
            v.push(Violation::BetaAboveCap);
        }
        if gamma <= 0.0 {
            v.push(Violation::GammaNotPositive);
        }
        if gamma > GAMMA_CAP {
            v.push(Violation::GammaAboveCap);
        }
        if alpha + beta >= 1.0 {
            v.push(Violation::AlphaPlusBetaNotBelowOne);
        }
        if d == 0 {
            v.push(Violation::DeathPaymentZero);
        }
        v
    }

    pub fn validate(self) -> Result<ModelParams> {
        ModelParams::try_from(self)
    }
}

/// Parameters known to satisfy the admissible box. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    c0: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let violations = raw.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidParams(violations));
        }
        let p = ModelParams {
            alpha: raw.alpha,
            beta: raw.beta,
            gamma: raw.gamma,
            d: raw.d,
            c0: raw.c0,
        };
        debug_assert!(p.beta + 4.0 * p.gamma <= 0.35 + 1e-15);
        Ok(p)
    }
}

/// Validate a raw tuple against the admissible box.
pub fn validate(raw: RawParams) -> Result<ModelParams> {
    raw.validate()
}

impl ModelParams {
    /// Shorthand for `RawParams::new(..).validate()` with the default cap.
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: u32) -> Result<Self> {
        RawParams::new(alpha, beta, gamma, d).validate()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            d: self.d,
            c0: self.c0,
        }
    }

    /// `beta + 4 gamma`, the geometric rate of the subdominant eigenvalue.
    pub fn subdominant_rate(&self) -> f64 {
        self.beta + 4.0 * self.gamma
    }

    pub fn payoff(&self, s: State) -> u32 {
        match s {
            State::Healthy => 0,
            State::Ill => 1,
            State::Dead => self.d,
        }
    }

    pub fn transition_prob(&self, from: State, to: State) -> f64 {
        transition_matrix(self)[from.index()][to.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Healthy,
    Ill,
    Dead,
}

impl State {
    pub const ALL: [State; 3] = [State::Healthy, State::Ill, State::Dead];

    pub fn index(self) -> usize {
        match self {
            State::Healthy => 0,
            State::Ill => 1,
            State::Dead => 2,
        }
    }
}

pub type Matrix3 = [[f64; 3]; 3];
pub type ComplexMatrix3 = [[Complex64; 3]; 3];

pub fn transition_matrix(p: &ModelParams) -> Matrix3 {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    [[1.0 - g, g, 0.0], [1.0 - a - b, b, a], [0.0, 0.0, 1.0]]
}

/// Transition matrix with each transition into state `s` multiplied by
/// `exp(i t payoff(s))`. Its `n`-th power, read from the healthy row and summed,
/// is the characteristic function of the aggregate claim.
pub fn fourier_transition_matrix(p: &ModelParams, t: f64) -> ComplexMatrix3 {
    let pm = transition_matrix(p);
    let phase = [
        Complex64::new(1.0, 0.0),
        Complex64::cis(t),
        Complex64::cis(p.d as f64 * t),
    ];
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (r, row) in pm.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            out[r][c] = phase[c] * x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_interior_point() {
        assert!(ModelParams::new(0.5, 0.1, 0.02, 3).is_ok());
    }

    #[test]
    fn rejects_beta_over_cap() {
        let err = RawParams::new(0.5, 0.2, 0.02, 3)
            .with_c0(0.9)
            .validate()
            .unwrap_err();
        match err {
            Error::InvalidParams(v) => assert_eq!(v, vec![Violation::BetaAboveCap]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_alpha_over_c0() {
        // This tuple also has alpha + beta > 1; every broken inequality is listed.
        let v = RawParams::new(0.97, 0.05, 0.01, 1)
            .with_c0(0.9)
            .violations();
        assert!(v.contains(&Violation::AlphaAboveCap));
        let v = RawParams::new(0.92, 0.05, 0.01, 1)
            .with_c0(0.9)
            .violations();
        assert_eq!(v, vec![Violation::AlphaAboveCap]);
    }

    #[test]
    fn reports_every_violation() {
        let v = RawParams::new(0.95, 0.2, 0.0, 0).with_c0(0.9).violations();
        assert!(v.contains(&Violation::AlphaAboveCap));
        assert!(v.contains(&Violation::BetaAboveCap));
        assert!(v.contains(&Violation::GammaNotPositive));
        assert!(v.contains(&Violation::AlphaPlusBetaNotBelowOne));
        assert!(v.contains(&Violation::DeathPaymentZero));
    }

    #[test]
    fn degenerate_zero_probabilities_rejected() {
        assert!(ModelParams::new(0.5, 0.0, 0.02, 1).is_err());
        assert!(ModelParams::new(0.5, 0.1, 0.0, 1).is_err());
        assert!(ModelParams::new(0.5, 0.1, f64::NAN, 1).is_err());
    }

    #[test]
    fn transition_rows() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let m = transition_matrix(&p);
        assert_eq!(m[0], [0.98, 0.02, 0.0]);
        assert!((m[1][0] - 0.4).abs() < 1e-15);
        assert_eq!(m[1][1], 0.1);
        assert_eq!(m[1][2], 0.5);
        assert_eq!(m[2], [0.0, 0.0, 1.0]);
        for row in m {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn payoff_per_state() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 7).unwrap();
        assert_eq!(p.payoff(State::Healthy), 0);
        assert_eq!(p.payoff(State::Ill), 1);
        assert_eq!(p.payoff(State::Dead), 7);
    }

    #[test]
    fn fourier_matrix_at_zero_is_p() {
        let p = ModelParams::new(0.3, 0.12, 0.04, 2).unwrap();
        let m = transition_matrix(&p);
        let f = fourier_transition_matrix(&p, 0.0);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(f[r][c], Complex64::new(m[r][c], 0.0));
            }
        }
    }

    #[test]
    fn fourier_matrix_at_pi() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 1).unwrap();
        let f = fourier_transition_matrix(&p, std::f64::consts::PI);
        assert!((f[1][2] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);

        let even = ModelParams::new(0.5, 0.1, 0.02, 4).unwrap();
        let f = fourier_transition_matrix(&even, std::f64::consts::PI);
        assert!((f[2][2] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn json_config_defaults_c0() {
        let raw: RawParams =
            serde_json::from_str(r#"{"alpha":0.5,"beta":0.1,"gamma":0.02,"d":3}"#).unwrap();
        assert_eq!(raw.c0, DEFAULT_C0);
        assert!(raw.validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn validation_matches_box(
                alpha in -0.1f64..1.1,
                beta in -0.05f64..0.3,
                gamma in -0.02f64..0.1,
                d in 0u32..12,
                c0 in 0.05f64..0.99,
            ) {
                let raw = RawParams { alpha, beta, gamma, d, c0 };
                let inside = alpha > 0.0 && alpha <= c0 && beta > 0.0 && beta <= 0.15
                    && gamma > 0.0 && gamma <= 0.05 && alpha + beta < 1.0 && d >= 1;
                prop_assert_eq!(raw.validate().is_ok(), inside);
                if inside {
                    prop_assert!(beta + 4.0 * gamma <= 0.35);
                }
            }

            #[test]
            fn fourier_moduli_match_probabilities(
                alpha in 0.01f64..0.84, beta in 0.001f64..0.15,
                gamma in 0.001f64..0.05, d in 1u32..12, t in -3.2f64..3.2,
            ) {
                let p = ModelParams::new(alpha, beta, gamma, d).unwrap();
                let m = transition_matrix(&p);
                let f = fourier_transition_matrix(&p, t);
                for r in 0..3 {
                    for c in 0..3 {
                        prop_assert!((f[r][c].norm() - m[r][c]).abs() < 1e-15);
                    }
                }
            }
        }
    }
}
