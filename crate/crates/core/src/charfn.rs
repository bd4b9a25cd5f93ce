//! Fourier transforms of the approximating measures and the spectral
//! decomposition of the exact characteristic function.
//!
//! Every transform here is a rational or exponential expression in `z = e^{it}`,
//! so all evaluators take a [`Phase`]. A phase is normally built from a real
//! `t`, but [`Phase::from_z`] also accepts off-circle `z`; the inversion module
//! uses real `z` in `(0, 1)` to locate the singularities that govern tail decay.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);

/// Width of the band around `1 + gamma - beta e^{it}` that contains the
/// discriminant root, in units of `gamma`.
pub const SQRT_D_BAND: f64 = 5.81;
/// Lower bound on `|sqrt D(t)|`.
pub const SQRT_D_FLOOR: f64 = 0.6;

/// Powers of `z = e^{it}` used by the transforms.
#[derive(Debug, Clone, Copy)]
pub struct Phase {
    pub t: f64,
    pub z: C,
    /// `z^d`
    pub zd: C,
    /// `z^(d+1)`
    pub zd_next: C,
    /// `z^(d-1)`
    pub zd_prev: C,
}

impl Phase {
    pub fn at(t: f64, d: u32) -> Self {
        let d = d as f64;
        Phase {
            t,
            z: C::cis(t),
            zd: C::cis(d * t),
            zd_next: C::cis((d + 1.0) * t),
            zd_prev: C::cis((d - 1.0) * t),
        }
    }

    /// Phase at an arbitrary complex `z`; `t` is set to NaN.
    pub fn from_z(z: C, d: u32) -> Self {
        let d = d as i32;
        Phase {
            t: f64::NAN,
            z,
            zd: z.powi(d),
            zd_next: z.powi(d + 1),
            zd_prev: z.powi(d - 1),
        }
    }

    fn on_circle(&self) -> bool {
        self.t.is_finite()
    }
}

/// `H`, `Psi`, `U` and the two shifted forms `H - 1`, `Psi - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseTransforms {
    pub h: C,
    pub psi: C,
    pub u: C,
    pub h_minus_one: C,
    pub psi_minus_one: C,
}

pub fn base_transforms(p: &ModelParams, ph: &Phase) -> BaseTransforms {
    let (a, b) = (p.alpha(), p.beta());
    let z = ph.z;
    let geo = ONE - z * b;
    BaseTransforms {
        h: z * (1.0 - b) / geo,
        psi: z * (1.0 - a - b) / geo,
        u: z * (1.0 - a) - 1.0,
        h_minus_one: (z - 1.0) / geo,
        psi_minus_one: (z * (1.0 - a) - 1.0) / geo,
    }
}

/// Correction terms `A_1..A_6` and their partial sums `Delta`, `Delta_1`, `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionTransforms {
    pub a1: C,
    pub a2: C,
    pub a3: C,
    pub a4: C,
    pub a5: C,
    pub a6: C,
    pub delta: C,
    pub delta1: C,
    pub a: C,
}

pub fn correction_transforms(p: &ModelParams, ph: &Phase) -> CorrectionTransforms {
    let (b, g) = (p.beta(), p.gamma());
    let base = base_transforms(p, ph);
    let hm = base.h_minus_one;
    let pm = base.psi_minus_one;
    let geo = ONE - ph.z * b;
    let k = 1.0 + g - b;
    let sb = 1.0 - b;

    let a1 = pm * (sb / k);
    let a2 = hm * pm * (-b * sb / (k * k));
    let a3 = hm * hm * pm * (b * b * sb / k.powi(3));
    let a4 = pm * pm / geo * (-sb.powi(3) / k.powi(3));
    let a5 = pm * pm * hm / geo * (3.0 * b * sb.powi(3) / k.powi(4));
    let a6 = pm.powi(3) / (geo * geo) * (2.0 * sb.powi(5) / k.powi(5));

    let delta = ONE + a1 * g;
    let delta1 = delta + (a2 + a4) * (g * g);
    let a = delta1 + (a3 + a5 + a6) * g.powi(3);
    CorrectionTransforms {
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        delta,
        delta1,
        a,
    }
}

/// Discriminant of the characteristic quadratic of the two transient eigenvalues.
pub fn discriminant(p: &ModelParams, ph: &Phase) -> C {
    let (a, b, g) = (p.alpha(), p.beta(), p.gamma());
    let s = ph.z * b + (1.0 - g);
    s * s - ph.z * (4.0 * (b - g * (1.0 - a)))
}

/// Principal square root of the discriminant, without the branch checks.
pub fn sqrt_d_unchecked(p: &ModelParams, ph: &Phase) -> C {
    discriminant(p, ph).sqrt()
}

/// Principal square root of the discriminant. On the unit circle the root must
/// lie within `5.81 gamma` of `1 + gamma - beta e^{it}` and have modulus at
/// least 0.6; a failure of either means the branch flipped.
pub fn sqrt_d(p: &ModelParams, ph: &Phase) -> Result<C> {
    let r = sqrt_d_unchecked(p, ph);
    if ph.on_circle() {
        let centre = ONE * (1.0 + p.gamma()) - ph.z * p.beta();
        let dev = (r - centre).norm();
        if dev > SQRT_D_BAND * p.gamma() {
            return Err(Error::BranchViolation {
                t: ph.t,
                detail: format!("|sqrt D - (1+g-b e^(it))| = {dev:e} > 5.81 gamma"),
            });
        }
        if r.norm() < SQRT_D_FLOOR {
            return Err(Error::BranchViolation {
                t: ph.t,
                detail: format!("|sqrt D| = {} < 0.6", r.norm()),
            });
        }
    }
    Ok(r)
}

/// Eigenvalues and weights of the spectral form
/// `F_n(t) = l1^n w1 + l2^n w2 + l3^n w3` at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParts {
    pub lambda1: C,
    pub lambda2: C,
    pub lambda3: C,
    pub w1: C,
    pub w2: C,
    pub w3: C,
    pub sqrt_d: C,
}

impl SpectralParts {
    /// `sum_j lambda_j^n w_j`.
    pub fn charfn(&self, n: usize) -> C {
        let n = n as i32;
        self.lambda1.powi(n) * self.w1
            + self.lambda2.powi(n) * self.w2
            + self.lambda3.powi(n) * self.w3
    }
}

/// Numerator shared by the transient weights and by the `V` family, with
/// `x` standing for the eigenvalue (or the `Delta` that replaces it).
fn weight_numerator(p: &ModelParams, ph: &Phase, x: C) -> C {
    let (a, b, g) = (p.alpha(), p.beta(), p.gamma());
    let c = b - g * (1.0 - a);
    (ph.zd_next - 1.0) * c - (ph.zd - 1.0) * x + (ph.z - 1.0) * (x * g - c)
}

fn death_denominator(p: &ModelParams, ph: &Phase) -> C {
    let (a, b, g) = (p.alpha(), p.beta(), p.gamma());
    (ph.zd_prev - b) * (ph.zd - (1.0 - g)) - g * (1.0 - a - b)
}

/// Weight of the absorbing eigenvalue `e^{idt}`.
pub fn death_weight(p: &ModelParams, ph: &Phase) -> C {
    ph.zd * (p.alpha() * p.gamma()) / death_denominator(p, ph)
}

/// Smallest admissible `|lambda - e^{idt}|` before a node is reported as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-14;

pub fn eigen_weights(p: &ModelParams, t: f64) -> Result<SpectralParts> {
    let ph = Phase::at(t, p.d());
    let root = sqrt_d(p, &ph)?;
    spectral_from_root(p, &ph, root)
}

/// Spectral parts without the branch checks, for off-circle or diagnostic use.
pub fn eigen_weights_unchecked(p: &ModelParams, ph: &Phase) -> Result<SpectralParts> {
    spectral_from_root(p, ph, sqrt_d_unchecked(p, ph))
}

fn spectral_from_root(p: &ModelParams, ph: &Phase, root: C) -> Result<SpectralParts> {
    let (b, g) = (p.beta(), p.gamma());
    let s = ph.z * b + (1.0 - g);
    let lambda1 = (s + root) * 0.5;
    let lambda2 = (s - root) * 0.5;
    let gap1 = (lambda1 - ph.zd).norm();
    let gap2 = (lambda2 - ph.zd).norm();
    if gap1 < DEGENERATE_GAP || gap2 < DEGENERATE_GAP {
        return Err(Error::DegenerateDenominator {
            t: ph.t,
            gap: gap1.min(gap2),
        });
    }
    let w1 = weight_numerator(p, ph, lambda1) / ((lambda1 - ph.zd) * root);
    let w2 = -weight_numerator(p, ph, lambda2) / ((lambda2 - ph.zd) * root);
    Ok(SpectralParts {
        lambda1,
        lambda2,
        lambda3: ph.zd,
        w1,
        w2,
        w3: death_weight(p, ph),
        sqrt_d: root,
    })
}

/// Transforms of the approximating measures at one `t`. `g`, `g1` are kept in
/// log form so that convolution powers are `exp(n * log)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxTransforms {
    pub v: C,
    pub v1: C,
    pub v2: C,
    pub log_g: C,
    pub log_g1: C,
    /// Depends on `n`: `e^{ndt} w3(t)`.
    pub e: C,
}

impl ApproxTransforms {
    pub fn g(&self) -> C {
        self.log_g.exp()
    }
    pub fn g1(&self) -> C {
        self.log_g1.exp()
    }
    pub fn g_pow(&self, n: usize) -> C {
        (self.log_g * n as f64).exp()
    }
    pub fn g1_pow(&self, n: usize) -> C {
        (self.log_g1 * n as f64).exp()
    }
}

/// Exponent of `G`: `A - 1 - (A1^2 g^2 + 2 A1 (A2 + A4) g^3)/2 + A1^3 g^3 / 3`.
pub fn log_g(p: &ModelParams, c: &CorrectionTransforms) -> C {
    let g = p.gamma();
    let g2 = g * g;
    let g3 = g2 * g;
    c.a - 1.0 - (c.a1 * c.a1 * g2 + c.a1 * (c.a2 + c.a4) * (2.0 * g3)) * 0.5
        + c.a1.powi(3) * (g3 / 3.0)
}

/// Exponent of `G_1`: `A1 g + (A2 + A4 - A1^2/2) g^2`.
pub fn log_g1(p: &ModelParams, c: &CorrectionTransforms) -> C {
    let g = p.gamma();
    c.a1 * g + (c.a2 + c.a4 - c.a1 * c.a1 * 0.5) * (g * g)
}

pub fn approx_transforms(p: &ModelParams, t: f64, n: usize) -> ApproxTransforms {
    let ph = Phase::at(t, p.d());
    let c = correction_transforms(p, &ph);
    let (b, g) = (p.beta(), p.gamma());
    let num = weight_numerator(p, &ph, c.delta);
    let tail = ONE * g - ph.z * b - 1.0;
    let v = num / ((c.a - ph.zd) * (c.delta * 2.0 + tail));
    let v1 = num / ((c.delta1 - ph.zd) * (c.delta * 2.0 + tail));
    let v2 = num / ((c.delta1 - ph.zd) * (c.delta1 * 2.0 + tail));
    let e =
        C::cis(((n as f64) + 1.0) * p.d() as f64 * t) * (p.alpha() * g) / death_denominator(p, &ph);
    ApproxTransforms {
        v,
        v1,
        v2,
        log_g: log_g(p, &c),
        log_g1: log_g1(p, &c),
        e,
    }
}

/// Real-valued functions on `z in (0, 1)` whose first root below `z = 1`
/// governs the decay of a left tail. Exposed for the inversion module.
pub(crate) fn tail_denominator(p: &ModelParams, kind: TailKind, z: f64) -> f64 {
    let ph = Phase::from_z(C::new(z, 0.0), p.d());
    match kind {
        TailKind::Death => death_denominator(p, &ph).re,
        TailKind::FullCorrection => (correction_transforms(p, &ph).a - ph.zd).re,
        TailKind::SecondOrderCorrection => (correction_transforms(p, &ph).delta1 - ph.zd).re,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TailKind {
    Death,
    FullCorrection,
    SecondOrderCorrection,
}

/// Uniform midpoint grid on `[-pi, pi)`: `t_j = -pi + (2j + 1) pi / n`.
/// Never contains `t = 0`.
pub fn midpoint_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| midpoint_node(n, j)).collect()
}

pub fn midpoint_node(n: usize, j: usize) -> f64 {
    -PI + (2 * j + 1) as f64 * PI / n as f64
}

/// A transform sampled on the midpoint grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharFnGrid {
    pub values: Vec<C>,
}

impl CharFnGrid {
    pub fn sample(n_points: usize, f: impl Fn(f64) -> C + Sync) -> Self {
        CharFnGrid {
            values: par_map_nodes(n_points, 0.0, &f),
        }
    }

    /// Sample at the nodes shifted by `shift`.
    pub fn sample_shifted(n_points: usize, shift: f64, f: impl Fn(f64) -> C + Sync) -> Self {
        CharFnGrid {
            values: par_map_nodes(n_points, shift, &f),
        }
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn node(&self, j: usize) -> f64 {
        midpoint_node(self.n_points(), j)
    }

    /// Largest `|M(t_j) - conj(M(-t_j))|`; zero for the transform of a real measure.
    /// On the midpoint grid `-t_j` is node `n - 1 - j`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|j| (self.values[j] - self.values[n - 1 - j].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.node(j), v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(feature = "parallel")]
fn par_map_nodes(n: usize, shift: f64, f: &(impl Fn(f64) -> C + Sync)) -> Vec<C> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|j| f(midpoint_node(n, j) + shift))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_nodes(n: usize, shift: f64, f: &(impl Fn(f64) -> C + Sync)) -> Vec<C> {
    (0..n).map(|j| f(midpoint_node(n, j) + shift)).collect()
}

/// Named transforms that can be dumped on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedTransform {
    H,
    Psi,
    U,
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    Delta,
    Delta1,
    A,
    V,
    V1,
    V2,
    G,
    G1,
    E,
    Lambda1,
    Lambda2,
    W1,
    W2,
    W3,
    SqrtD,
}

impl NamedTransform {
    pub const ALL: [NamedTransform; 24] = [
        Self::H,
        Self::Psi,
        Self::U,
        Self::A1,
        Self::A2,
        Self::A3,
        Self::A4,
        Self::A5,
        Self::A6,
        Self::Delta,
        Self::Delta1,
        Self::A,
        Self::V,
        Self::V1,
        Self::V2,
        Self::G,
        Self::G1,
        Self::E,
        Self::Lambda1,
        Self::Lambda2,
        Self::W1,
        Self::W2,
        Self::W3,
        Self::SqrtD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::Psi => "Psi",
            Self::U => "U",
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
            Self::A4 => "A4",
            Self::A5 => "A5",
            Self::A6 => "A6",
            Self::Delta => "Delta",
            Self::Delta1 => "Delta1",
            Self::A => "A",
            Self::V => "V",
            Self::V1 => "V1",
            Self::V2 => "V2",
            Self::G => "G",
            Self::G1 => "G1",
            Self::E => "E",
            Self::Lambda1 => "Lambda1",
            Self::Lambda2 => "Lambda2",
            Self::W1 => "W1",
            Self::W2 => "W2",
            Self::W3 => "W3",
            Self::SqrtD => "SqrtD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|x| x.name().eq_ignore_ascii_case(s))
    }

    /// Value at `t`; `n` only matters for `E`.
    pub fn eval(self, p: &ModelParams, t: f64, n: usize) -> Result<C> {
        let ph = Phase::at(t, p.d());
        let v = match self {
            Self::H => base_transforms(p, &ph).h,
            Self::Psi => base_transforms(p, &ph).psi,
            Self::U => base_transforms(p, &ph).u,
            Self::A1 => correction_transforms(p, &ph).a1,
            Self::A2 => correction_transforms(p, &ph).a2,
            Self::A3 => correction_transforms(p, &ph).a3,
            Self::A4 => correction_transforms(p, &ph).a4,
            Self::A5 => correction_transforms(p, &ph).a5,
            Self::A6 => correction_transforms(p, &ph).a6,
            Self::Delta => correction_transforms(p, &ph).delta,
            Self::Delta1 => correction_transforms(p, &ph).delta1,
            Self::A => correction_transforms(p, &ph).a,
            Self::V => approx_transforms(p, t, n).v,
            Self::V1 => approx_transforms(p, t, n).v1,
            Self::V2 => approx_transforms(p, t, n).v2,
            Self::G => approx_transforms(p, t, n).g(),
            Self::G1 => approx_transforms(p, t, n).g1(),
            Self::E => approx_transforms(p, t, n).e,
            Self::Lambda1 => eigen_weights(p, t)?.lambda1,
            Self::Lambda2 => eigen_weights(p, t)?.lambda2,
            Self::W1 => eigen_weights(p, t)?.w1,
            Self::W2 => eigen_weights(p, t)?.w2,
            Self::W3 => eigen_weights(p, t)?.w3,
            Self::SqrtD => sqrt_d(p, &ph)?,
        };
        Ok(v)
    }
}
