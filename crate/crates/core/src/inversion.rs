//! Recovery of lattice measures from transforms sampled on the midpoint grid,
//! and assembly of the approximating measures.
//!
//! The approximations are signed measures on all of `Z`. Their right tails
//! decay geometrically at rate at most `beta`, but the factors
//! `1 / (A - e^{idt})`, `1 / (Delta_1 - e^{idt})` and the death weight carry a
//! left tail whose rate is set by the first real root of the denominator below
//! `z = 1`. That root sizes the initial window; successive doublings of the
//! grid then confirm that nothing was aliased or cut off.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::charfn::{approx_transforms, tail_denominator, CharFnGrid, TailKind};
use crate::error::{Error, Result};
use crate::measure::{grid_phase, LatticeMeasure};
use crate::model::ModelParams;
use crate::norms::tv_norm;

type C = Complex64;

/// Result of inverting a grid on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverted {
    pub measure: LatticeMeasure,
    /// Largest imaginary part discarded; zero up to rounding for real measures.
    pub max_imag: f64,
}

/// `M{k} = (1/2pi) int e^{-ikt} M(t) dt` by the midpoint rule on the grid, for
/// `k` in `[k_lo, k_hi]`. Exact for trigonometric polynomials whose frequencies
/// are distinct mod `N`.
pub fn invert_grid(grid: &CharFnGrid, k_lo: i64, k_hi: i64) -> Result<Inverted> {
    let n = grid.n_points();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Window(format!(
            "grid size {n} is not a power of two"
        )));
    }
    if k_hi < k_lo {
        return Err(Error::Window(format!("empty window [{k_lo}, {k_hi}]")));
    }
    let len = (k_hi - k_lo + 1) as usize;
    if 2 * len > n {
        return Err(Error::Window(format!(
            "window of {len} points exceeds half of the {n}-point grid"
        )));
    }
    Ok(invert_unchecked(grid, k_lo, k_hi))
}

fn invert_unchecked(grid: &CharFnGrid, k_lo: i64, k_hi: i64) -> Inverted {
    let n = grid.n_points();
    let mut buf = grid.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut max_imag: f64 = 0.0;
    let weights = (k_lo..=k_hi)
        .map(|k| {
            let v = buf[k.rem_euclid(n as i64) as usize] * grid_phase(k, n).conj() * scale;
            max_imag = max_imag.max(v.im.abs());
            v.re
        })
        .collect();
    Inverted {
        measure: LatticeMeasure::new(k_lo, weights),
        max_imag,
    }
}

/// Which approximating measure to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ApproxVariant {
    /// `G^n V + E`
    #[serde(rename = "GV_E")]
    GvE,
    /// `G_1^n V_1 + E`
    #[serde(rename = "G1V1_E")]
    G1V1E,
    /// `G_1^n V_2 + E`
    #[serde(rename = "G1V2_E")]
    G1V2E,
    /// `E` alone
    #[serde(rename = "E_only")]
    EOnly,
}

impl ApproxVariant {
    pub const ALL: [ApproxVariant; 4] = [Self::GvE, Self::G1V1E, Self::G1V2E, Self::EOnly];

    pub fn name(self) -> &'static str {
        match self {
            Self::GvE => "GV_E",
            Self::G1V1E => "G1V1_E",
            Self::G1V2E => "G1V2_E",
            Self::EOnly => "E_only",
        }
    }

    fn tail_kinds(self) -> &'static [TailKind] {
        match self {
            Self::GvE => &[TailKind::Death, TailKind::FullCorrection],
            Self::G1V1E | Self::G1V2E => &[TailKind::Death, TailKind::SecondOrderCorrection],
            Self::EOnly => &[TailKind::Death],
        }
    }
}

impl fmt::Display for ApproxVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApproxVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Transform of the chosen approximation at `t`.
pub fn approximant_transform(p: &ModelParams, n: usize, variant: ApproxVariant, t: f64) -> C {
    let x = approx_transforms(p, t, n);
    match variant {
        ApproxVariant::GvE => x.g_pow(n) * x.v + x.e,
        ApproxVariant::G1V1E => x.g1_pow(n) * x.v1 + x.e,
        ApproxVariant::G1V2E => x.g1_pow(n) * x.v2 + x.e,
        ApproxVariant::EOnly => x.e,
    }
}

pub fn approximant_grid(
    p: &ModelParams,
    n: usize,
    variant: ApproxVariant,
    n_points: usize,
    shift: f64,
) -> CharFnGrid {
    CharFnGrid::sample_shifted(n_points, shift, |t| approximant_transform(p, n, variant, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    /// Extra lattice points kept on both sides of `[0, nd]`.
    pub guard: i64,
    /// Left-tail mass (relative) that may be cut off by the initial window.
    pub tail_eps: f64,
    /// TV change between refinements that counts as stable.
    pub tv_tol: f64,
    pub max_doublings: u32,
    /// Initial grid size is the smallest power of two at least this multiple
    /// of the window length.
    pub oversample: usize,
    /// Lower bound on the initial grid size.
    pub min_points: usize,
    /// Grid size ceiling; a window needing more is an error.
    pub max_points: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            guard: 64,
            tail_eps: 1e-17,
            tv_tol: 1e-10,
            max_doublings: 4,
            oversample: 4,
            min_points: 64,
            max_points: 1 << 24,
        }
    }
}

/// Decay exponent `s` such that the left tail behaves like `e^{-s|k|}`, from
/// the first sign change of the denominator on `z = e^{-s}`. `None` if the
/// denominator keeps its sign on `(0, 1)`.
pub(crate) fn left_tail_exponent(p: &ModelParams, kind: TailKind) -> Option<f64> {
    let f = |s: f64| tail_denominator(p, kind, (-s).exp());
    let near = f(1e-13).signum();
    let mut lo = 1e-13;
    let mut hi = 1e-12;
    while f(hi).signum() == near {
        lo = hi;
        hi *= 1.25;
        if hi > 60.0 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == near {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Lattice points needed left of zero for the variant's tail to fall below `eps`.
pub fn left_tail_length(p: &ModelParams, variant: ApproxVariant, eps: f64) -> i64 {
    variant
        .tail_kinds()
        .iter()
        .filter_map(|&k| left_tail_exponent(p, k))
        .map(|s| ((1.0 / eps).ln() / s).ceil() as i64)
        .max()
        .unwrap_or(0)
}

/// Outcome of the grid-doubling check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n_used: usize,
    pub tv_delta_last_doubling: f64,
    pub doublings: u32,
    pub converged: bool,
}

/// An approximating measure together with how it was resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub variant: ApproxVariant,
    pub measure: LatticeMeasure,
    pub max_imag: f64,
    pub probe: ProbeReport,
}

/// Invert `f` on windows `[k_hi - N/4 + 1, k_hi]`, doubling `N` (and thus the
/// window) until the TV change between successive results is below tolerance.
pub fn resolve_transform(
    f: impl Fn(f64) -> C + Sync,
    k_hi: i64,
    min_len: usize,
    cfg: &InversionConfig,
) -> Result<(Inverted, ProbeReport)> {
    let mut n_points = (cfg.oversample.max(2) * min_len.max(1))
        .max(cfg.min_points)
        .next_power_of_two();
    if n_points > cfg.max_points {
        return Err(Error::Window(format!(
            "window of {min_len} points needs a {n_points}-point grid, above the cap {}",
            cfg.max_points
        )));
    }
    let mut prev: Option<Inverted> = None;
    let mut delta = f64::INFINITY;
    let mut doublings = 0;
    loop {
        let grid = CharFnGrid::sample(n_points, &f);
        let lo = k_hi - (n_points / 4) as i64 + 1;
        let cur = invert_unchecked(&grid, lo, k_hi);
        if let Some(p) = &prev {
            delta = tv_norm(&cur.measure.sub(&p.measure));
            if delta < cfg.tv_tol {
                let report = ProbeReport {
                    n_used: n_points,
                    tv_delta_last_doubling: delta,
                    doublings,
                    converged: true,
                };
                return Ok((cur, report));
            }
        }
        if doublings == cfg.max_doublings || 2 * n_points > cfg.max_points {
            let report = ProbeReport {
                n_used: n_points,
                tv_delta_last_doubling: delta,
                doublings,
                converged: false,
            };
            return Ok((cur, report));
        }
        prev = Some(cur);
        n_points *= 2;
        doublings += 1;
    }
}

fn variant_window(
    p: &ModelParams,
    n: usize,
    variant: ApproxVariant,
    cfg: &InversionConfig,
) -> (i64, usize) {
    let k_hi = n as i64 * p.d() as i64 + cfg.guard;
    let left = left_tail_length(p, variant, cfg.tail_eps).max(cfg.guard);
    (k_hi, (k_hi + left + 1) as usize)
}

/// Doubling diagnostics for one approximation, without failing on non-convergence.
pub fn aliasing_probe(
    p: &ModelParams,
    n: usize,
    variant: ApproxVariant,
    cfg: &InversionConfig,
) -> Result<ProbeReport> {
    let (k_hi, len) = variant_window(p, n, variant, cfg);
    let (_, report) =
        resolve_transform(|t| approximant_transform(p, n, variant, t), k_hi, len, cfg)?;
    Ok(report)
}

/// The approximating measure for `variant` at `n` steps.
pub fn approximation_measure(
    p: &ModelParams,
    n: usize,
    variant: ApproxVariant,
    cfg: &InversionConfig,
) -> Result<Approximation> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let (k_hi, len) = variant_window(p, n, variant, cfg);
    let (inv, probe) =
        resolve_transform(|t| approximant_transform(p, n, variant, t), k_hi, len, cfg)?;
    if !probe.converged {
        return Err(Error::NonConvergent {
            doublings: probe.doublings,
            delta: probe.tv_delta_last_doubling,
        });
    }
    Ok(Approximation {
        variant,
        measure: inv.measure,
        max_imag: inv.max_imag,
        probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use crate::exact::exact_distribution_dp;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 0.1, 0.02, 3).unwrap()
    }

    #[test]
    fn unit_atoms() {
        let one = CharFnGrid::sample(64, |_| C::new(1.0, 0.0));
        let m = invert_grid(&one, -8, 8).unwrap().measure;
        for (k, w) in m.iter() {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((w - want).abs() < 1e-15, "k={k} w={w}");
        }
        let shifted = CharFnGrid::sample(64, |t| C::cis(3.0 * t));
        let m = invert_grid(&shifted, -8, 8).unwrap().measure;
        assert!((m.get(3) - 1.0).abs() < 1e-15);
        assert!(m
            .iter()
            .filter(|&(k, _)| k != 3)
            .all(|(_, w)| w.abs() < 1e-15));
    }

    #[test]
    fn window_must_fit() {
        let g = CharFnGrid::sample(32, |_| C::new(1.0, 0.0));
        assert!(invert_grid(&g, 0, 16).is_err());
        assert!(invert_grid(&g, 0, 15).is_ok());
        let odd = CharFnGrid {
            values: vec![C::new(1.0, 0.0); 48],
        };
        assert!(invert_grid(&odd, 0, 3).is_err());
    }

    #[test]
    fn round_trip_exact_law() {
        let p = params();
        let f = exact_distribution_dp(&p, 6).unwrap();
        let n_points = 64;
        let grid = CharFnGrid {
            values: f.charfn_midpoint_grid(n_points, 0.0),
        };
        let back = invert_grid(&grid, -4, 27).unwrap();
        assert!(back.max_imag < 1e-14);
        for k in -4..=27 {
            assert!((back.measure.get(k) - f.get(k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn phase_reduction_is_exact() {
        for n in [8usize, 1024] {
            for k in [-3i64, 0, 5, 1_000_003] {
                let direct = C::cis(k as f64 * (-PI + PI / n as f64));
                let tol = 1e-15 * (1.0 + k.abs() as f64);
                assert!((grid_phase(k, n) - direct).norm() < tol);
            }
        }
    }

    #[test]
    fn variant_names_parse() {
        for v in ApproxVariant::ALL {
            assert_eq!(v.name().parse::<ApproxVariant>().unwrap(), v);
            let js = serde_json::to_string(&v).unwrap();
            assert_eq!(js, format!("\"{}\"", v.name()));
        }
        assert!("GV".parse::<ApproxVariant>().is_err());
    }

    #[test]
    fn transform_at_zero_is_one() {
        let p = params();
        for v in ApproxVariant::ALL {
            let x = approximant_transform(&p, 9, v, 0.0);
            assert!((x - C::new(1.0, 0.0)).norm() < 1e-14, "{v}");
        }
    }

    #[test]
    fn tail_exponent_for_unit_death_payment() {
        // For d = 1 the death denominator is linear in z with its root at
        // 1 - g + g (1 - a - b) / (1 - b).
        let p = ModelParams::new(0.5, 0.1, 0.02, 1).unwrap();
        let z = 1.0 - 0.02 + 0.02 * 0.4 / 0.9;
        let s = left_tail_exponent(&p, TailKind::Death).unwrap();
        assert!(((-s).exp() - z).abs() < 1e-12);
    }

    #[test]
    fn e_only_has_unit_mass() {
        let p = params();
        let cfg = InversionConfig::default();
        for n in [1, 16] {
            let a = approximation_measure(&p, n, ApproxVariant::EOnly, &cfg).unwrap();
            assert!((a.measure.mass() - 1.0).abs() < 1e-10);
            assert!(a.max_imag < 1e-11);
            assert!(a.probe.converged);
        }
    }

    #[test]
    fn approximations_have_unit_mass() {
        let p = params();
        let cfg = InversionConfig::default();
        for v in ApproxVariant::ALL {
            let a = approximation_measure(&p, 24, v, &cfg).unwrap();
            assert!(
                (a.measure.mass() - 1.0).abs() < 2e-9,
                "{v}: {}",
                a.measure.mass()
            );
            assert!(a.max_imag < 1e-11);
        }
    }

    #[test]
    fn probe_on_polynomial_transform_converges_at_once() {
        let p = params();
        let f = exact_distribution_dp(&p, 10).unwrap();
        let cfg = InversionConfig::default();
        let (inv, rep) = resolve_transform(|t| f.charfn(t), f.end() + 4, 40, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.doublings, 1);
        assert!(tv_norm(&inv.measure.sub(&f)) < 1e-12);
    }
}
