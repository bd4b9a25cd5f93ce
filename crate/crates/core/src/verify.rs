//! Numerical witnesses for the transform bounds and the approximation error
//! rates.
//!
//! Transform bounds come in two flavours. Bounds with explicit constants are
//! checked outright: the largest `lhs / rhs` over a parameter grid and the
//! midpoint `t` nodes must not exceed one. Bounds stated up to an absolute
//! constant `C` are evaluated with `C = 1`; the largest ratio is then the
//! smallest constant that works on the grid, and is reported, not asserted.
//! Exponential factors such as `e^{-Cn gamma}` are set to one in those shapes,
//! which keeps the ratio a valid lower estimate of the constant.
//!
//! Approximation errors are computed exactly on the lattice, compared with the
//! bound shapes, and fitted against `n` under a scaling policy.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::{
    approx_transforms, base_transforms, correction_transforms, eigen_weights, midpoint_node,
    sqrt_d_unchecked, Phase, SpectralParts,
};
use crate::error::{Error, Result};
use crate::exact::{exact_charfn, exact_distribution_dp};
use crate::inversion::{approximation_measure, ApproxVariant, InversionConfig, ProbeReport};
use crate::measure::LatticeMeasure;
use crate::model::{ModelParams, RawParams, DEFAULT_C0};
use crate::norms::{
    inversion_bounds_refined, InversionBounds, NormKind, NormReport, TransformSource,
};

type C = Complex64;

/// Default threshold below which `alpha` is not "separated from zero".
pub const DEFAULT_C2: f64 = 0.3;
/// Default lower bound on `gamma` for the exponential regime.
pub const DEFAULT_GAMMA_FLOOR: f64 = 0.01;
/// Step of the central differences used for `t`-derivatives of closed forms.
const FD_STEP: f64 = 1e-6;

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

// ---------------------------------------------------------------------------
// Parameter grids

/// A finite set of admissible parameter tuples, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamGrid {
    pub label: String,
    pub points: Vec<ModelParams>,
}

impl ParamGrid {
    /// `alpha in {0.1, 0.3, 0.5, 0.7, 0.9 c0}`, `beta in {0.01, 0.05, 0.1, 0.15}`,
    /// `gamma in {0.005, 0.02, 0.035, 0.05}`, `d in {1, 3, 10}`.
    pub fn default_box(c0: f64) -> Result<Self> {
        let mut points = Vec::new();
        for &alpha in &[0.1, 0.3, 0.5, 0.7, 0.9 * c0] {
            for &beta in &[0.01, 0.05, 0.1, 0.15] {
                for &gamma in &[0.005, 0.02, 0.035, 0.05] {
                    for &d in &[1u32, 3, 10] {
                        points.push(
                            RawParams::new(alpha, beta, gamma, d)
                                .with_c0(c0)
                                .validate()?,
                        );
                    }
                }
            }
        }
        Ok(ParamGrid {
            label: format!("default_box(c0={c0})"),
            points,
        })
    }

    /// `k` evenly spaced interior values per axis over `(0, c0] x (0, 0.15] x (0, 0.05]`
    /// for each `d`; tuples with `alpha + beta >= 1` are left out.
    pub fn uniform(k: usize, ds: &[u32], c0: f64) -> Result<Self> {
        if k == 0 || ds.is_empty() {
            return Err(Error::InvalidArgument("empty uniform grid".into()));
        }
        let axis = |cap: f64| (1..=k).map(move |i| cap * i as f64 / k as f64);
        let mut points = Vec::new();
        for alpha in axis(c0) {
            for beta in axis(crate::model::BETA_CAP) {
                for gamma in axis(crate::model::GAMMA_CAP) {
                    for &d in ds {
                        let raw = RawParams::new(alpha, beta, gamma, d).with_c0(c0);
                        if let Ok(p) = raw.validate() {
                            points.push(p);
                        }
                    }
                }
            }
        }
        Ok(ParamGrid {
            label: format!("uniform(k={k}, d={ds:?}, c0={c0})"),
            points,
        })
    }

    /// Explicit tuples; any tuple outside the admissible box is an error.
    pub fn from_raw(label: &str, raws: &[RawParams]) -> Result<Self> {
        let points = raws
            .iter()
            .map(|r| r.validate())
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamGrid {
            label: label.to_string(),
            points,
        })
    }

    pub fn single(p: ModelParams) -> Self {
        ParamGrid {
            label: "single".into(),
            points: vec![p],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Transform bounds

/// Transform bounds, named after what they control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    // Explicit constants.
    /// `|sqrt D - (1 + gamma - beta e^{it})| <= 5.81 gamma`
    SqrtDBand,
    /// `|sqrt D| >= 0.6`
    SqrtDFloor,
    /// `|lambda2| <= beta + 4 gamma`
    Lambda2Bound,
    /// `|lambda2| <= 0.35`
    Lambda2Uniform,
    /// `beta + 4 gamma <= 0.35`
    SubdominantRate,
    /// `|lambda1| <= 1 + 0.4 (1 - alpha) gamma Re(H - 1) - 0.2 alpha gamma`
    Lambda1Linear,
    /// `|lambda1| <= exp{0.4 (1 - alpha) gamma Re(H - 1) - 0.2 alpha gamma}`
    Lambda1Exp,
    /// `|W2| <= 2 (d + 1) |e^{it} - 1|`
    W2Bound,
    /// `|lambda2 - e^{idt}| >= 0.65`
    Lambda2Gap,

    // Up to an absolute constant.
    /// `|sqrt D - (2A - 1 + gamma - beta e^{it})| <= C gamma^4 ((1 - Re H)^2 + alpha^4)`
    SqrtDExpansion,
    /// `|lambda1 - A| <= C gamma^4 ((1 - Re H)^2 + alpha^4)`
    Lambda1VsA,
    /// `|lambda1 - Delta1| <= C gamma^3` (alpha separated)
    Lambda1SecondOrder,
    /// `|A| <= 1 - C gamma (1 + alpha - Re H)`
    AModulus,
    /// `|Delta1| <= 1 - C gamma` (alpha separated)
    Delta1Contraction,
    /// `|W1 - V| <= C (d + 1) gamma |e^{it} - 1|`
    W1MinusV,
    /// `|W1 - V1| <= C (d + 1) gamma |e^{it} - 1|` (alpha separated)
    W1MinusV1,
    /// `int |lambda1|^n |W1 - V| / |e^{it} - 1| dt <= C (d + 1) sqrt(gamma / n)`
    W1VIntegralKolmogorov,
    /// `int |lambda1|^n |W1 - V| dt <= C (d + 1) / n`
    W1VIntegralLocal,
    /// `int |lambda1|^n |W1 - V1| / |e^{it} - 1| dt <= C (d + 1) gamma` (alpha separated)
    W1V1IntegralKolmogorov,
    /// `int |V| |lambda1^n - G^n| / |e^{it} - 1| dt <= C (d + 1) gamma sqrt(gamma / n)`
    GIntegralKolmogorov,
    /// `int |V| |lambda1^n - G^n| dt <= C (d + 1) gamma / n`
    GIntegralLocal,
    /// `int |V1| |lambda1^n - G1^n| / |e^{it} - 1| dt <= C (d + 1) gamma` (alpha separated)
    G1IntegralKolmogorov,
    // Pointwise table, all with alpha separated.
    /// `|W1| <= C (d + 1) / gamma`
    W1Size,
    /// `|W1'| <= C (d + 1) (1 + beta / gamma) / gamma`
    W1Slope,
    /// `|W2| <= C (d + 1)`
    W2Size,
    /// `|W2'| <= C (d + 1)`
    W2Slope,
    /// `|V2| <= C (d + 1) / gamma`
    V2Size,
    /// `|V2'| <= C (d + 1) (1 + beta / gamma) / gamma`
    V2Slope,
    /// `|W1 - V2| <= C (d + 1) gamma`
    W1MinusV2,
    /// `|W1' - V2'| <= C (d + 1) gamma (1 + beta / gamma)`
    W1MinusV2Slope,
    /// `|lambda1| <= e^{-C gamma}`
    Lambda1Contraction,
    /// `|G1| <= e^{-C gamma}`
    G1Contraction,
    /// `|lambda1'| <= C gamma`
    Lambda1Slope,
    /// `|G1'| <= C gamma`
    G1Slope,
    /// `|lambda2'| <= C (beta + 4 gamma)`
    Lambda2Slope,
    /// `|lambda1 - G1| <= C gamma^3`
    Lambda1MinusG1,
    /// `|(lambda1^n - G1^n)'| <= C gamma^2`
    PowerGapSlope,
    /// `|1 - e^{idt}| / |lambda1 - e^{idt}| <= C`
    Lambda1DeathGap,
    /// `|1 - e^{idt}| / |Delta1 - e^{idt}| <= C`
    Delta1DeathGap,
}

impl LemmaId {
    pub const EXACT: [LemmaId; 9] = [
        LemmaId::SqrtDBand,
        LemmaId::SqrtDFloor,
        LemmaId::Lambda2Bound,
        LemmaId::Lambda2Uniform,
        LemmaId::SubdominantRate,
        LemmaId::Lambda1Linear,
        LemmaId::Lambda1Exp,
        LemmaId::W2Bound,
        LemmaId::Lambda2Gap,
    ];

    pub const FITTED: [LemmaId; 30] = [
        LemmaId::SqrtDExpansion,
        LemmaId::Lambda1VsA,
        LemmaId::Lambda1SecondOrder,
        LemmaId::AModulus,
        LemmaId::Delta1Contraction,
        LemmaId::W1MinusV,
        LemmaId::W1MinusV1,
        LemmaId::W1VIntegralKolmogorov,
        LemmaId::W1VIntegralLocal,
        LemmaId::W1V1IntegralKolmogorov,
        LemmaId::GIntegralKolmogorov,
        LemmaId::GIntegralLocal,
        LemmaId::G1IntegralKolmogorov,
        LemmaId::W1Size,
        LemmaId::W1Slope,
        LemmaId::W2Size,
        LemmaId::W2Slope,
        LemmaId::V2Size,
        LemmaId::V2Slope,
        LemmaId::W1MinusV2,
        LemmaId::W1MinusV2Slope,
        LemmaId::Lambda1Contraction,
        LemmaId::G1Contraction,
        LemmaId::Lambda1Slope,
        LemmaId::G1Slope,
        LemmaId::Lambda2Slope,
        LemmaId::Lambda1MinusG1,
        LemmaId::PowerGapSlope,
        LemmaId::Lambda1DeathGap,
        LemmaId::Delta1DeathGap,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    pub fn is_exact(self) -> bool {
        Self::EXACT.contains(&self)
    }

    /// Bound holds only when `alpha >= C2`.
    pub fn needs_separation(self) -> bool {
        use LemmaId::*;
        matches!(
            self,
            Lambda1SecondOrder
                | Delta1Contraction
                | W1MinusV1
                | W1V1IntegralKolmogorov
                | G1IntegralKolmogorov
                | W1Size
                | W1Slope
                | W2Size
                | W2Slope
                | V2Size
                | V2Slope
                | W1MinusV2
                | W1MinusV2Slope
                | Lambda1Contraction
                | G1Contraction
                | Lambda1Slope
                | G1Slope
                | Lambda2Slope
                | Lambda1MinusG1
                | PowerGapSlope
                | Lambda1DeathGap
                | Delta1DeathGap
        )
    }

    /// Bound involves an `n`-th power and is checked over a set of `n`.
    pub fn needs_n(self) -> bool {
        use LemmaId::*;
        matches!(
            self,
            W1VIntegralKolmogorov
                | W1VIntegralLocal
                | W1V1IntegralKolmogorov
                | GIntegralKolmogorov
                | GIntegralLocal
                | G1IntegralKolmogorov
                | PowerGapSlope
        )
    }

    fn is_integral(self) -> bool {
        self.needs_n() && self != LemmaId::PowerGapSlope
    }

    /// Contractions `|X| <= 1 - C gamma` (or `e^{-C gamma}`) are evaluated as
    /// `shape / (1 - |X|)`, so their constant is the reciprocal of the ratio.
    pub fn is_contraction(self) -> bool {
        use LemmaId::*;
        matches!(
            self,
            AModulus | Delta1Contraction | Lambda1Contraction | G1Contraction
        )
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown bound {s:?}")))
    }
}

/// Where a bound came closest to failing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub params: RawParams,
    pub t: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lemma_id: LemmaId,
    pub params_box: String,
    pub n_params: usize,
    pub n_t: usize,
    /// Largest `lhs / rhs` (contractions: `shape / (1 - |X|)`) over the grid.
    pub max_ratio: f64,
    /// Set for explicit-constant bounds only: `max_ratio > 1`.
    pub violated: Option<bool>,
    /// Smallest constant consistent with the grid, for bounds up to a constant.
    pub fitted_constant: Option<f64>,
    pub worst_point: Option<WorstPoint>,
    /// Grid points left out because `alpha < C2`.
    pub skipped_params: usize,
    /// Nodes where an eigenvalue met `e^{idt}` and the weights were undefined.
    pub skipped_nodes: usize,
}

impl BoundCheck {
    /// True unless an explicit-constant bound was exceeded or a fitted
    /// constant came out non-finite.
    pub fn passed(&self) -> bool {
        match self.violated {
            Some(v) => !v,
            None => self.fitted_constant.is_some_and(|c| c.is_finite()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub c2: f64,
    /// Number of midpoint `t` nodes.
    pub n_t: usize,
    /// Powers used by bounds that involve `lambda1^n`.
    pub ns: Vec<usize>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            c2: DEFAULT_C2,
            n_t: 512,
            ns: vec![4, 16, 64],
        }
    }
}

/// Everything a pointwise bound may need at one node.
struct Node {
    ph: Phase,
    sp: SpectralParts,
    h: C,
    a: C,
    delta1: C,
    v: C,
    v1: C,
    v2: C,
    g: C,
    g1: C,
}

fn node(p: &ModelParams, t: f64) -> Result<Node> {
    let ph = Phase::at(t, p.d());
    let sp = eigen_weights_lenient(p, t)?;
    let c = correction_transforms(p, &ph);
    let x = approx_transforms(p, t, 1);
    Ok(Node {
        ph,
        sp,
        h: base_transforms(p, &ph).h,
        a: c.a,
        delta1: c.delta1,
        v: x.v,
        v1: x.v1,
        v2: x.v2,
        g: x.g(),
        g1: x.g1(),
    })
}

/// Spectral parts with the square-root branch checks skipped: the checks
/// themselves are among the bounds under test here.
fn eigen_weights_lenient(p: &ModelParams, t: f64) -> Result<SpectralParts> {
    crate::charfn::eigen_weights_unchecked(p, &Phase::at(t, p.d()))
}

fn fd(f: impl Fn(f64) -> Result<C>, t: f64) -> Result<C> {
    Ok((f(t + FD_STEP)? - f(t - FD_STEP)?) / (2.0 * FD_STEP))
}

/// `lhs / rhs` at one node.
fn pointwise_ratio(id: LemmaId, p: &ModelParams, t: f64, n: usize) -> Result<f64> {
    use LemmaId::*;
    let (alpha, beta, gamma) = (p.alpha(), p.beta(), p.gamma());
    let d1 = p.d() as f64 + 1.0;
    let x = node(p, t)?;
    let z = x.ph.z;
    let zm1 = (z - 1.0).norm();
    let re_h = x.h.re;
    let quartic = gamma.powi(4) * ((1.0 - re_h).powi(2) + alpha.powi(4));
    let sep = 1.0 + beta / gamma;
    let r = match id {
        SqrtDBand => (x.sp.sqrt_d - (C::new(1.0 + gamma, 0.0) - z * beta)).norm() / (5.81 * gamma),
        SqrtDFloor => 0.6 / x.sp.sqrt_d.norm(),
        Lambda2Bound => x.sp.lambda2.norm() / (beta + 4.0 * gamma),
        Lambda2Uniform => x.sp.lambda2.norm() / 0.35,
        SubdominantRate => (beta + 4.0 * gamma) / 0.35,
        Lambda1Linear => {
            let rhs = 1.0 + 0.4 * (1.0 - alpha) * gamma * (re_h - 1.0) - 0.2 * alpha * gamma;
            x.sp.lambda1.norm() / rhs
        }
        Lambda1Exp => {
            let rhs = (0.4 * (1.0 - alpha) * gamma * (re_h - 1.0) - 0.2 * alpha * gamma).exp();
            x.sp.lambda1.norm() / rhs
        }
        W2Bound => x.sp.w2.norm() / (2.0 * d1 * zm1),
        Lambda2Gap => 0.65 / (x.sp.lambda2 - x.ph.zd).norm(),

        SqrtDExpansion => {
            let approx = x.a * 2.0 - 1.0 + gamma - z * beta;
            (sqrt_d_unchecked(p, &x.ph) - approx).norm() / quartic
        }
        Lambda1VsA => (x.sp.lambda1 - x.a).norm() / quartic,
        Lambda1SecondOrder => (x.sp.lambda1 - x.delta1).norm() / gamma.powi(3),
        AModulus => contraction(x.a.norm(), gamma * (1.0 + alpha - re_h)),
        Delta1Contraction => contraction(x.delta1.norm(), gamma),
        W1MinusV => (x.sp.w1 - x.v).norm() / (d1 * gamma * zm1),
        W1MinusV1 => (x.sp.w1 - x.v1).norm() / (d1 * gamma * zm1),
        W1Size => x.sp.w1.norm() / (d1 / gamma),
        W1Slope => fd(|s| Ok(eigen_weights_lenient(p, s)?.w1), t)?.norm() / (d1 * sep / gamma),
        W2Size => x.sp.w2.norm() / d1,
        W2Slope => fd(|s| Ok(eigen_weights_lenient(p, s)?.w2), t)?.norm() / d1,
        V2Size => x.v2.norm() / (d1 / gamma),
        V2Slope => fd(|s| Ok(approx_transforms(p, s, 1).v2), t)?.norm() / (d1 * sep / gamma),
        W1MinusV2 => (x.sp.w1 - x.v2).norm() / (d1 * gamma),
        W1MinusV2Slope => {
            let dw = fd(
                |s| Ok(eigen_weights_lenient(p, s)?.w1 - approx_transforms(p, s, 1).v2),
                t,
            )?;
            dw.norm() / (d1 * gamma * sep)
        }
        Lambda1Contraction => exp_contraction(x.sp.lambda1.norm(), gamma),
        G1Contraction => exp_contraction(x.g1.norm(), gamma),
        Lambda1Slope => fd(|s| Ok(eigen_weights_lenient(p, s)?.lambda1), t)?.norm() / gamma,
        G1Slope => fd(|s| Ok(approx_transforms(p, s, 1).g1()), t)?.norm() / gamma,
        Lambda2Slope => {
            fd(|s| Ok(eigen_weights_lenient(p, s)?.lambda2), t)?.norm() / (beta + 4.0 * gamma)
        }
        Lambda1MinusG1 => (x.sp.lambda1 - x.g1).norm() / gamma.powi(3),
        PowerGapSlope => {
            let k = n as i32;
            let dp = fd(
                |s| {
                    Ok(eigen_weights_lenient(p, s)?.lambda1.powi(k)
                        - approx_transforms(p, s, 1).g1_pow(n))
                },
                t,
            )?;
            dp.norm() / (gamma * gamma)
        }
        Lambda1DeathGap => (x.ph.zd - 1.0).norm() / (x.sp.lambda1 - x.ph.zd).norm(),
        Delta1DeathGap => (x.ph.zd - 1.0).norm() / (x.delta1 - x.ph.zd).norm(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{id} is not a pointwise bound"
            )))
        }
    };
    Ok(r)
}

/// `shape / (1 - m)` for `m <= 1 - C shape`; infinite when `m >= 1`.
fn contraction(m: f64, shape: f64) -> f64 {
    if m >= 1.0 {
        f64::INFINITY
    } else {
        shape / (1.0 - m)
    }
}

/// `gamma / (-ln m)` for `m <= e^{-C gamma}`.
fn exp_contraction(m: f64, gamma: f64) -> f64 {
    if m >= 1.0 {
        f64::INFINITY
    } else {
        gamma / -m.ln()
    }
}

/// `lhs / shape` for the integral bounds at one parameter tuple and `n`.
fn integral_ratio(id: LemmaId, p: &ModelParams, n: usize, n_t: usize) -> Result<(f64, usize)> {
    use LemmaId::*;
    let (gamma, d1) = (p.gamma(), p.d() as f64 + 1.0);
    let nf = n as f64;
    let mut sum = 0.0;
    let mut skipped = 0;
    for j in 0..n_t {
        let t = midpoint_node(n_t, j);
        let x = match node(p, t) {
            Ok(x) => x,
            Err(Error::DegenerateDenominator { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let zm1 = (x.ph.z - 1.0).norm();
        let l1n = x.sp.lambda1.norm().powi(n as i32);
        let k = n as i32;
        let f = match id {
            W1VIntegralKolmogorov => l1n * (x.sp.w1 - x.v).norm() / zm1,
            W1VIntegralLocal => l1n * (x.sp.w1 - x.v).norm(),
            W1V1IntegralKolmogorov => l1n * (x.sp.w1 - x.v1).norm() / zm1,
            GIntegralKolmogorov => x.v.norm() * (x.sp.lambda1.powi(k) - x.g.powf(nf)).norm() / zm1,
            GIntegralLocal => x.v.norm() * (x.sp.lambda1.powi(k) - x.g.powf(nf)).norm(),
            G1IntegralKolmogorov => {
                x.v1.norm() * (x.sp.lambda1.powi(k) - x.g1.powf(nf)).norm() / zm1
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{id} is not an integral bound"
                )))
            }
        };
        sum += f;
    }
    let integral = sum * 2.0 * std::f64::consts::PI / n_t as f64;
    let shape = match id {
        W1VIntegralKolmogorov => d1 * (gamma / nf).sqrt(),
        W1VIntegralLocal => d1 / nf,
        W1V1IntegralKolmogorov | G1IntegralKolmogorov => d1 * gamma,
        GIntegralKolmogorov => d1 * gamma * (gamma / nf).sqrt(),
        GIntegralLocal => d1 * gamma / nf,
        _ => unreachable!(),
    };
    Ok((integral / shape, skipped))
}

struct Partial {
    ratio: f64,
    worst: Option<WorstPoint>,
    skipped_nodes: usize,
}

fn check_point(id: LemmaId, p: &ModelParams, cfg: &CheckConfig) -> Result<Partial> {
    let mut best = Partial {
        ratio: f64::NEG_INFINITY,
        worst: None,
        skipped_nodes: 0,
    };
    let ns: Vec<Option<usize>> = if id.needs_n() {
        cfg.ns.iter().map(|&n| Some(n)).collect()
    } else {
        vec![None]
    };
    for n in ns {
        if id.is_integral() {
            let (r, skipped) = integral_ratio(id, p, n.unwrap_or(1), cfg.n_t)?;
            best.skipped_nodes += skipped;
            if r > best.ratio || r.is_nan() {
                best.ratio = r;
                best.worst = Some(WorstPoint {
                    params: p.raw(),
                    t: None,
                    n,
                });
            }
            continue;
        }
        for j in 0..cfg.n_t {
            let t = midpoint_node(cfg.n_t, j);
            let r = match pointwise_ratio(id, p, t, n.unwrap_or(1)) {
                Ok(r) => r,
                Err(Error::DegenerateDenominator { .. }) => {
                    best.skipped_nodes += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if r > best.ratio || r.is_nan() {
                best.ratio = r;
                best.worst = Some(WorstPoint {
                    params: p.raw(),
                    t: Some(t),
                    n,
                });
            }
        }
    }
    Ok(best)
}

/// Evaluate one bound over every grid tuple and every midpoint node.
pub fn check_lemma(id: LemmaId, grid: &ParamGrid, cfg: &CheckConfig) -> Result<BoundCheck> {
    if cfg.n_t == 0 {
        return Err(Error::InvalidArgument(
            "t grid must have at least one node".into(),
        ));
    }
    let points: Vec<ModelParams> = grid
        .points
        .iter()
        .copied()
        .filter(|p| !id.needs_separation() || p.alpha() >= cfg.c2)
        .collect();
    let skipped_params = grid.len() - points.len();
    let partials = par_map(&points, |p| check_point(id, p, cfg));
    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst = None;
    let mut skipped_nodes = 0;
    for part in partials {
        let part = part?;
        skipped_nodes += part.skipped_nodes;
        if part.ratio > max_ratio || part.ratio.is_nan() {
            max_ratio = part.ratio;
            worst = part.worst;
        }
    }
    let (violated, fitted_constant) = if points.is_empty() {
        (None, None)
    } else if id.is_exact() {
        (Some(!(max_ratio <= 1.0)), None)
    } else if id.is_contraction() {
        (None, Some(1.0 / max_ratio))
    } else {
        (None, Some(max_ratio))
    };
    Ok(BoundCheck {
        lemma_id: id,
        params_box: grid.label.clone(),
        n_params: points.len(),
        n_t: cfg.n_t,
        max_ratio,
        violated,
        fitted_constant,
        worst_point: worst,
        skipped_params,
        skipped_nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ExactConstant,
    Fitted,
    All,
}

impl Suite {
    pub fn lemmas(self) -> Vec<LemmaId> {
        match self {
            Suite::ExactConstant => LemmaId::EXACT.to_vec(),
            Suite::Fitted => LemmaId::FITTED.to_vec(),
            Suite::All => LemmaId::EXACT
                .iter()
                .chain(LemmaId::FITTED.iter())
                .copied()
                .collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-constant" => Ok(Suite::ExactConstant),
            "fitted" => Ok(Suite::Fitted),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidArgument(format!("unknown suite {s:?}"))),
        }
    }
}

pub fn run_suite(suite: Suite, grid: &ParamGrid, cfg: &CheckConfig) -> Result<Vec<BoundCheck>> {
    suite
        .lemmas()
        .into_iter()
        .map(|id| check_lemma(id, grid, cfg))
        .collect()
}

/// Aggregate rows `id,box,value,pass`; `value` is the largest ratio for
/// explicit bounds and the fitted constant otherwise.
pub fn write_checks_csv<W: Write>(checks: &[BoundCheck], mut w: W) -> Result<()> {
    writeln!(w, "id,box,value,pass")?;
    for c in checks {
        let value = c.fitted_constant.unwrap_or(c.max_ratio);
        writeln!(
            w,
            "{},\"{}\",{:.16e},{}",
            c.lemma_id,
            c.params_box,
            value,
            c.passed()
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Approximation errors

/// Approximation error statements, named by approximation and norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// `G^n V + E` in the Kolmogorov and local norms, any parameters.
    GvE,
    /// `G^n V + E` in the Kolmogorov norm, `C (d + 1) / sqrt(n)`.
    GvESqrtN,
    /// `G1^n V1 + E` in the Kolmogorov norm, `alpha >= C2`.
    G1v1E,
    /// `E` alone in total variation, `alpha, gamma` separated from zero.
    EOnly,
    /// `G1^n V2 + E` in total variation, `alpha >= C2`.
    G1v2E,
    /// `G1^n V2 + E` in total variation, `C (d + 1) e^{-Cn gamma} (1 + beta/gamma) / n`.
    G1v2EOverN,
    /// Pointwise and distribution-function errors of `G1^n V2 + E`, weighted in `k`.
    Nonuniform,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::GvE,
        TheoremId::GvESqrtN,
        TheoremId::G1v1E,
        TheoremId::EOnly,
        TheoremId::G1v2E,
        TheoremId::G1v2EOverN,
        TheoremId::Nonuniform,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    pub fn variant(self) -> ApproxVariant {
        match self {
            TheoremId::GvE | TheoremId::GvESqrtN => ApproxVariant::GvE,
            TheoremId::G1v1E => ApproxVariant::G1V1E,
            TheoremId::EOnly => ApproxVariant::EOnly,
            TheoremId::G1v2E | TheoremId::G1v2EOverN | TheoremId::Nonuniform => {
                ApproxVariant::G1V2E
            }
        }
    }

    /// The norm the statement controls.
    pub fn norm(self) -> NormKind {
        match self {
            TheoremId::GvE | TheoremId::GvESqrtN | TheoremId::G1v1E => NormKind::Kolmogorov,
            TheoremId::EOnly | TheoremId::G1v2E | TheoremId::G1v2EOverN => NormKind::TotalVariation,
            TheoremId::Nonuniform => NormKind::Local,
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            TheoremId::EOnly => Regime::Exponential,
            _ => Regime::Polynomial,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown theorem {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConfig {
    pub c2: f64,
    pub gamma_floor: f64,
    /// `c` in `e^{-c n gamma alpha}`.
    pub exp_alpha_gamma: f64,
    /// `c` in `e^{-c n gamma}`.
    pub exp_gamma: f64,
    pub inversion: InversionConfig,
}

impl Default for TheoremConfig {
    /// Exponential factors off (`c = 0`); see [`calibrate_exponents`].
    fn default() -> Self {
        TheoremConfig {
            c2: DEFAULT_C2,
            gamma_floor: DEFAULT_GAMMA_FLOOR,
            exp_alpha_gamma: 0.0,
            exp_gamma: 0.0,
            inversion: InversionConfig::default(),
        }
    }
}

impl TheoremConfig {
    fn check_hypotheses(&self, id: TheoremId, p: &ModelParams) -> Result<()> {
        let separated = !matches!(id, TheoremId::GvE | TheoremId::GvESqrtN);
        if separated && p.alpha() < self.c2 {
            return Err(Error::Hypothesis(format!(
                "alpha = {} below C2 = {}",
                p.alpha(),
                self.c2
            )));
        }
        if id == TheoremId::EOnly && p.gamma() < self.gamma_floor {
            return Err(Error::Hypothesis(format!(
                "gamma = {} below the floor {}",
                p.gamma(),
                self.gamma_floor
            )));
        }
        Ok(())
    }

    /// The statement's right-hand side with `C = 1`, for the statement's norm.
    pub fn shape(&self, id: TheoremId, p: &ModelParams, n: usize) -> f64 {
        let (a, b, g) = (p.alpha(), p.beta(), p.gamma());
        let d1 = p.d() as f64 + 1.0;
        let nf = n as f64;
        let sub = (b + 4.0 * g).powi(n as i32);
        let e_ag = (-self.exp_alpha_gamma * nf * g * a).exp();
        let e_g = (-self.exp_gamma * nf * g).exp();
        match id {
            TheoremId::GvE => d1 * (e_ag * (g / nf).sqrt() + sub),
            TheoremId::GvESqrtN => d1 / nf.sqrt(),
            TheoremId::G1v1E => d1 * (g * e_g + sub),
            TheoremId::EOnly => d1 * (-self.exp_gamma * g * nf).exp(),
            TheoremId::G1v2E => d1 * (g * e_g * (1.0 + b / g) + nf * sub),
            TheoremId::G1v2EOverN => d1 * e_g * (1.0 + b / g) / nf,
            TheoremId::Nonuniform => d1 * e_g,
        }
    }

    /// Local-norm shape `C (d + 1) (e^{-Cn gamma alpha} / n + (beta + 4 gamma)^n)`.
    pub fn gv_e_local_shape(&self, p: &ModelParams, n: usize) -> f64 {
        let nf = n as f64;
        let e = (-self.exp_alpha_gamma * nf * p.gamma() * p.alpha()).exp();
        (p.d() as f64 + 1.0) * (e / nf + (p.beta() + 4.0 * p.gamma()).powi(n as i32))
    }
}

/// Exact lattice error of one approximation, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremError {
    pub theorem_id: TheoremId,
    pub params: RawParams,
    pub n: usize,
    pub variant: ApproxVariant,
    pub norms: NormReport,
    /// Value of the statement's norm; for the non-uniform statement the
    /// largest weighted pointwise error.
    pub error: f64,
    pub shape: f64,
    pub ratio: f64,
    pub probe: ProbeReport,
    pub approx_mass: f64,
    /// Largest `|F_n(t) - sum lambda_j^n w_j|` over 512 midpoint nodes.
    pub spectral_residual: f64,
    /// `n (beta + (k+1) gamma) / (beta + gamma) |D{k}|` for `k = 1..=nd`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weighted_local: Vec<(i64, f64)>,
    /// `n (1 + k gamma^2) |D(k)|` for `k = 1..=nd`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weighted_df: Vec<(i64, f64)>,
    /// The difference measure `F_n - approximation`.
    #[serde(skip)]
    pub difference: LatticeMeasure,
}

/// Largest spectral-form residual over `n_t` midpoint nodes.
pub fn spectral_residual(p: &ModelParams, n: usize, n_t: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..n_t {
        let t = midpoint_node(n_t, j);
        let sp = eigen_weights(p, t)?;
        worst = worst.max((exact_charfn(p, n, t) - sp.charfn(n)).norm());
    }
    Ok(worst)
}

pub fn theorem_error(
    p: &ModelParams,
    n: usize,
    id: TheoremId,
    cfg: &TheoremConfig,
) -> Result<TheoremError> {
    cfg.check_hypotheses(id, p)?;
    let variant = id.variant();
    let approx = approximation_measure(p, n, variant, &cfg.inversion)?;
    let exact = exact_distribution_dp(p, n)?;
    let diff = exact.sub(&approx.measure);
    let norms = if id == TheoremId::Nonuniform {
        NormReport::with_nonuniform(&diff, 0.0)
    } else {
        NormReport::of(&diff)
    };
    let (mut weighted_local, mut weighted_df) = (Vec::new(), Vec::new());
    if id == TheoremId::Nonuniform {
        let (b, g, nf) = (p.beta(), p.gamma(), n as f64);
        let top = n as i64 * p.d() as i64;
        let mut cum: f64 = diff
            .iter()
            .take_while(|&(k, _)| k < 1)
            .map(|(_, w)| w)
            .sum();
        for k in 1..=top {
            let w = diff.get(k);
            cum += w;
            let kf = k as f64;
            weighted_local.push((k, nf * (b + (kf + 1.0) * g) / (b + g) * w.abs()));
            weighted_df.push((k, nf * (1.0 + kf * g * g) * cum.abs()));
        }
    }
    let error = match id {
        TheoremId::Nonuniform => weighted_local.iter().map(|x| x.1).fold(0.0, f64::max),
        _ => norms.get(id.norm()),
    };
    let shape = cfg.shape(id, p, n);
    Ok(TheoremError {
        theorem_id: id,
        params: p.raw(),
        n,
        variant,
        error,
        shape,
        ratio: error / shape,
        probe: approx.probe,
        approx_mass: approx.measure.mass(),
        spectral_residual: spectral_residual(p, n, 512)?,
        norms,
        weighted_local,
        weighted_df,
        difference: diff,
    })
}

// ---------------------------------------------------------------------------
// Rate fits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `log error` against `log n`.
    Polynomial,
    /// `log error` against `n`.
    Exponential,
}

/// How parameters move with `n` across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalingPolicy {
    Fixed {
        params: RawParams,
    },
    /// `alpha = c / (n gamma)` with `beta`, `gamma`, `d` fixed.
    AlphaGammaInverseN {
        c: f64,
        beta: f64,
        gamma: f64,
        d: u32,
        c0: f64,
    },
    /// `gamma = c / n` with `alpha`, `beta`, `d` fixed.
    GammaInverseN {
        c: f64,
        alpha: f64,
        beta: f64,
        d: u32,
        c0: f64,
    },
}

impl ScalingPolicy {
    pub fn params(&self, n: usize) -> Result<ModelParams> {
        let nf = n as f64;
        match *self {
            ScalingPolicy::Fixed { params } => params.validate(),
            ScalingPolicy::AlphaGammaInverseN {
                c,
                beta,
                gamma,
                d,
                c0,
            } => RawParams::new(c / (nf * gamma), beta, gamma, d)
                .with_c0(c0)
                .validate(),
            ScalingPolicy::GammaInverseN {
                c,
                alpha,
                beta,
                d,
                c0,
            } => RawParams::new(alpha, beta, c / nf, d)
                .with_c0(c0)
                .validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub theorem_id: TheoremId,
    pub policy: ScalingPolicy,
    pub regime: Regime,
    pub norm: NormKind,
    pub n_values: Vec<usize>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares `y = slope x + intercept` with the coefficient of determination.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, my - slope * mx, r2))
}

/// Fit a rate to the absolute errors of a sequence of runs.
pub fn fit_errors(
    id: TheoremId,
    policy: ScalingPolicy,
    ns: &[usize],
    errors: &[f64],
) -> Result<RateFit> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateFit(
            "n values must be strictly increasing".into(),
        ));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-positive error {e}")));
    }
    let regime = id.regime();
    let x: Vec<f64> = ns
        .iter()
        .map(|&n| match regime {
            Regime::Polynomial => (n as f64).ln(),
            Regime::Exponential => n as f64,
        })
        .collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y)?;
    Ok(RateFit {
        theorem_id: id,
        policy,
        regime,
        norm: id.norm(),
        n_values: ns.to_vec(),
        errors: errors.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

/// Runs plus fit. At least five `n` values are required.
pub fn rate_fit(
    id: TheoremId,
    policy: ScalingPolicy,
    ns: &[usize],
    cfg: &TheoremConfig,
) -> Result<(RateFit, Vec<TheoremError>)> {
    if ns.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "{} n values given, need at least 5",
            ns.len()
        )));
    }
    let runs = ns
        .iter()
        .map(|&n| theorem_error(&policy.params(n)?, n, id, cfg))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = runs.iter().map(|r| r.error).collect();
    Ok((fit_errors(id, policy, ns, &errors)?, runs))
}

/// `n = first, 2 first, 4 first, ...` up to `last`.
pub fn geometric_ns(first: usize, last: usize) -> Vec<usize> {
    std::iter::successors(Some(first.max(1)), |&n| Some(n * 2))
        .take_while(|&n| n <= last)
        .collect()
}

/// Reference point for the exponent calibration.
pub const CALIBRATION_POINT: (f64, f64, f64, u32) = (0.5, 0.1, 0.04, 3);

/// Exponent constants from the decay of `||F_n - E||` at the calibration
/// point, `n = 8..128`: with per-step decay `kappa`, returns
/// `(kappa / (alpha gamma), kappa / gamma)`.
pub fn calibrate_exponents(inversion: &InversionConfig) -> Result<(f64, f64)> {
    let (a, b, g, d) = CALIBRATION_POINT;
    let raw = RawParams::new(a, b, g, d).with_c0(DEFAULT_C0);
    let cfg = TheoremConfig {
        inversion: *inversion,
        ..TheoremConfig::default()
    };
    let (fit, _) = rate_fit(
        TheoremId::EOnly,
        ScalingPolicy::Fixed { params: raw },
        &geometric_ns(8, 128),
        &cfg,
    )?;
    let kappa = -fit.slope;
    Ok((kappa / (a * g), kappa / g))
}

impl TheoremConfig {
    pub fn calibrated(self) -> Result<Self> {
        let (ag, gg) = calibrate_exponents(&self.inversion)?;
        Ok(TheoremConfig {
            exp_alpha_gamma: ag,
            exp_gamma: gg,
            ..self
        })
    }
}

/// Largest `error / shape` over a set of `(params, n)` runs, with the maximiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub theorem_id: TheoremId,
    pub value: f64,
    pub worst: Option<(RawParams, usize)>,
    pub n_runs: usize,
}

pub fn empirical_constant(
    id: TheoremId,
    runs: &[(ModelParams, usize)],
    cfg: &TheoremConfig,
) -> Result<EmpiricalConstant> {
    let errs = par_map(runs, |(p, n)| theorem_error(p, *n, id, cfg));
    let mut value = f64::NEG_INFINITY;
    let mut worst = None;
    for e in errs {
        let e = e?;
        if e.ratio > value {
            value = e.ratio;
            worst = Some((e.params, e.n));
        }
    }
    Ok(EmpiricalConstant {
        theorem_id: id,
        value,
        worst,
        n_runs: runs.len(),
    })
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: RawParams,
    pub n: usize,
    pub error: Option<f64>,
    pub shape: Option<f64>,
    pub ratio: Option<f64>,
    /// Why the run was not evaluated, e.g. a hypothesis that does not hold.
    pub skipped: Option<String>,
}

/// Errors over `grid x ns`, ordered by grid position then `n`.
pub fn sweep(id: TheoremId, grid: &ParamGrid, ns: &[usize], cfg: &TheoremConfig) -> Vec<SweepRow> {
    let jobs: Vec<(ModelParams, usize)> = grid
        .points
        .iter()
        .flat_map(|p| ns.iter().map(move |&n| (*p, n)))
        .collect();
    par_map(&jobs, |(p, n)| match theorem_error(p, *n, id, cfg) {
        Ok(e) => SweepRow {
            params: p.raw(),
            n: *n,
            error: Some(e.error),
            shape: Some(e.shape),
            ratio: Some(e.ratio),
            skipped: None,
        },
        Err(err) => SweepRow {
            params: p.raw(),
            n: *n,
            error: None,
            shape: None,
            ratio: None,
            skipped: Some(err.to_string()),
        },
    })
}

pub fn write_sweep_csv<W: Write>(id: TheoremId, rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "theorem_id,alpha,beta,gamma,d,n,error,shape,ratio,skipped"
    )?;
    let num = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{},{},{},{},{},{}",
            id,
            r.params.alpha,
            r.params.beta,
            r.params.gamma,
            r.params.d,
            r.n,
            num(r.error),
            num(r.shape),
            num(r.ratio),
            r.skipped.as_deref().unwrap_or("").replace(',', ";"),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Inversion-inequality dominance

/// Quadrature bounds against exact norms for one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub bounds: InversionBounds,
    pub kolmogorov: f64,
    pub local: f64,
    pub total_variation: f64,
    /// Refinements beyond the converged quadrature needed to settle a near miss.
    pub extra_refinements: u32,
    pub holds: bool,
}

fn dominated(b: &InversionBounds, k: f64, l: f64, tv: f64, slack: f64) -> bool {
    k <= b.tsaregradskii * slack && l <= b.local_bound * slack && tv <= b.tv_bound * slack
}

/// Check that the Kolmogorov, local and total-variation bounds (with `a = 0`,
/// `b = 1`) dominate the exact norms. A miss within 1% is re-examined on a
/// grid twice as fine before it counts.
pub fn inversion_dominance(m: &LatticeMeasure) -> Result<DominanceCheck> {
    let (k, l, tv) = (
        crate::norms::kolmogorov_norm(m),
        crate::norms::local_norm(m),
        crate::norms::tv_norm(m),
    );
    let start = m.len().next_power_of_two().max(256);
    let src = TransformSource::Measure(m);
    let bounds = inversion_bounds_refined(&src, start, 0.0, 1.0, 1e-3, 6)?;
    if dominated(&bounds, k, l, tv, 1.0) {
        return Ok(DominanceCheck {
            bounds,
            kolmogorov: k,
            local: l,
            total_variation: tv,
            extra_refinements: 0,
            holds: true,
        });
    }
    let near = dominated(&bounds, k, l, tv, 1.01);
    if near {
        let finer = inversion_bounds_refined(&src, 2 * bounds.n_points, 0.0, 1.0, 1e-4, 6)?;
        let holds = dominated(&finer, k, l, tv, 1.0);
        return Ok(DominanceCheck {
            bounds: finer,
            kolmogorov: k,
            local: l,
            total_variation: tv,
            extra_refinements: 1,
            holds,
        });
    }
    Ok(DominanceCheck {
        bounds,
        kolmogorov: k,
        local: l,
        total_variation: tv,
        extra_refinements: 0,
        holds: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> ParamGrid {
        ParamGrid::from_raw(
            "test",
            &[
                RawParams::new(0.5, 0.1, 0.02, 3),
                RawParams::new(0.1, 0.15, 0.05, 1),
                RawParams::new(0.81, 0.01, 0.005, 10),
            ],
        )
        .unwrap()
    }

    #[test]
    fn default_box_shape() {
        let g = ParamGrid::default_box(0.9).unwrap();
        assert_eq!(g.len(), 5 * 4 * 4 * 3);
    }

    #[test]
    fn invalid_tuple_rejected() {
        assert!(ParamGrid::from_raw("bad", &[RawParams::new(0.5, 0.2, 0.02, 3)]).is_err());
    }

    #[test]
    fn lemma_names_round_trip() {
        for id in LemmaId::EXACT.iter().chain(LemmaId::FITTED.iter()) {
            assert_eq!(id.name().parse::<LemmaId>().unwrap(), *id);
        }
        for id in TheoremId::ALL {
            assert_eq!(id.name().parse::<TheoremId>().unwrap(), id);
        }
        assert_eq!(LemmaId::SqrtDBand.name(), "sqrt_d_band");
        assert_eq!(TheoremId::G1v2EOverN.name(), "g1v2-e-over-n");
    }

    #[test]
    fn exact_bounds_hold_on_small_grid() {
        let cfg = CheckConfig {
            n_t: 128,
            ..CheckConfig::default()
        };
        for c in run_suite(Suite::ExactConstant, &small_grid(), &cfg).unwrap() {
            assert_eq!(c.violated, Some(false), "{}: {}", c.lemma_id, c.max_ratio);
            assert!(c.max_ratio > 0.0);
        }
    }

    #[test]
    fn fitted_constants_are_finite() {
        let cfg = CheckConfig {
            n_t: 64,
            ns: vec![4, 16],
            ..CheckConfig::default()
        };
        for c in run_suite(Suite::Fitted, &small_grid(), &cfg).unwrap() {
            let k = c.fitted_constant.unwrap();
            assert!(k.is_finite() && k > 0.0, "{}: {k}", c.lemma_id);
        }
    }

    #[test]
    fn separation_filters_grid() {
        let c = check_lemma(
            LemmaId::Delta1Contraction,
            &small_grid(),
            &CheckConfig {
                n_t: 16,
                ..CheckConfig::default()
            },
        )
        .unwrap();
        assert_eq!(c.skipped_params, 1);
        assert_eq!(c.n_params, 2);
    }

    #[test]
    fn single_point_constant_is_its_ratio() {
        let p = ModelParams::new(0.5, 0.1, 0.04, 3).unwrap();
        let cfg = TheoremConfig::default();
        let e = theorem_error(&p, 8, TheoremId::EOnly, &cfg).unwrap();
        let c = empirical_constant(TheoremId::EOnly, &[(p, 8)], &cfg).unwrap();
        assert_eq!(c.value, e.ratio);
        assert_eq!(c.n_runs, 1);
    }

    #[test]
    fn hypotheses_enforced() {
        let cfg = TheoremConfig::default();
        let low_alpha = ModelParams::new(0.1, 0.1, 0.04, 3).unwrap();
        assert!(matches!(
            theorem_error(&low_alpha, 8, TheoremId::G1v1E, &cfg),
            Err(Error::Hypothesis(_))
        ));
        let low_gamma = ModelParams::new(0.5, 0.1, 0.005, 3).unwrap();
        assert!(matches!(
            theorem_error(&low_gamma, 8, TheoremId::EOnly, &cfg),
            Err(Error::Hypothesis(_))
        ));
        assert!(theorem_error(&low_alpha, 8, TheoremId::GvE, &cfg).is_ok());
    }

    #[test]
    fn first_step_error_is_bounded() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let e = theorem_error(&p, 1, TheoremId::GvE, &TheoremConfig::default()).unwrap();
        assert!(e.norms.total_variation.is_finite() && e.norms.total_variation <= 2.0 + 1e-9);
        assert!(e.spectral_residual < 1e-10);
    }

    #[test]
    fn death_only_error_decreases() {
        let p = ModelParams::new(0.5, 0.1, 0.04, 3).unwrap();
        let cfg = TheoremConfig::default();
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| theorem_error(&p, n, TheoremId::EOnly, &cfg).unwrap().error)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn least_squares_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, i, r2) = least_squares(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_errors() {
        let pol = ScalingPolicy::Fixed {
            params: RawParams::new(0.5, 0.1, 0.04, 3),
        };
        let ns = [1, 2, 4, 8, 16];
        assert!(fit_errors(TheoremId::GvE, pol, &ns, &[1.0, 0.5, 0.0, 0.1, 0.1]).is_err());
        assert!(fit_errors(TheoremId::GvE, pol, &[1, 2, 2, 8, 16], &[1.0; 5]).is_err());
        let f = fit_errors(TheoremId::GvE, pol, &ns, &ns.map(|n| 3.0 / n as f64)).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_policies() {
        let pol = ScalingPolicy::AlphaGammaInverseN {
            c: 0.16,
            beta: 0.1,
            gamma: 0.02,
            d: 3,
            c0: 0.9,
        };
        let p = pol.params(64).unwrap();
        assert!((p.alpha() * p.gamma() * 64.0 - 0.16).abs() < 1e-15);
        let pol = ScalingPolicy::GammaInverseN {
            c: 0.32,
            alpha: 0.5,
            beta: 0.1,
            d: 3,
            c0: 0.9,
        };
        assert!((pol.params(16).unwrap().gamma() - 0.02).abs() < 1e-15);
        assert!(pol.params(4).is_err());
    }

    #[test]
    fn geometric_sequence() {
        assert_eq!(
            geometric_ns(16, 1024),
            vec![16, 32, 64, 128, 256, 512, 1024]
        );
    }

    #[test]
    fn dominance_on_small_difference() {
        let p = ModelParams::new(0.5, 0.1, 0.04, 3).unwrap();
        let e = theorem_error(&p, 16, TheoremId::EOnly, &TheoremConfig::default()).unwrap();
        let d = inversion_dominance(&e.difference).unwrap();
        assert!(d.holds, "{d:?}");
    }
}
