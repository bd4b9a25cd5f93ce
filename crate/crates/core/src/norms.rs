//! Local, Kolmogorov and total-variation norms of lattice measures, their
//! non-uniform weighted versions, and quadrature upper bounds from the
//! Fourier-side inversion inequalities.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::{midpoint_node, CharFnGrid};
use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;

type C = Complex64;

/// `sup_k |M{k}|`.
pub fn local_norm(m: &LatticeMeasure) -> f64 {
    m.weights.iter().fold(0.0, |acc, w| acc.max(w.abs()))
}

/// `sup_x |M{(-inf, x]}|`.
pub fn kolmogorov_norm(m: &LatticeMeasure) -> f64 {
    let mut s = 0.0;
    let mut best: f64 = 0.0;
    for w in &m.weights {
        s += w;
        best = best.max(s.abs());
    }
    best
}

/// `sum_k |M{k}|`.
pub fn tv_norm(m: &LatticeMeasure) -> f64 {
    m.weights.iter().map(|w| w.abs()).sum()
}

/// Distribution function `M{(-inf, x]}`.
pub fn df_value(m: &LatticeMeasure, x: i64) -> f64 {
    m.iter().take_while(|&(k, _)| k <= x).map(|(_, w)| w).sum()
}

/// `(k, value)` pairs of a weighted sequence.
pub type Weighted = Vec<(i64, f64)>;

/// The sequences `|k - a| |M{k}|` and `|k - a| |M(k)|` over the stored window.
pub fn nonuniform(m: &LatticeMeasure, a: f64) -> (Weighted, Weighted) {
    let mut s = 0.0;
    let mut local = Vec::with_capacity(m.len());
    let mut df = Vec::with_capacity(m.len());
    for (k, w) in m.iter() {
        s += w;
        let r = (k as f64 - a).abs();
        local.push((k, r * w.abs()));
        df.push((k, r * s.abs()));
    }
    (local, df)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub local: f64,
    pub kolmogorov: f64,
    pub total_variation: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonuniform_local: Vec<(i64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonuniform_df: Vec<(i64, f64)>,
}

impl NormReport {
    pub fn of(m: &LatticeMeasure) -> Self {
        NormReport {
            local: local_norm(m),
            kolmogorov: kolmogorov_norm(m),
            total_variation: tv_norm(m),
            nonuniform_local: Vec::new(),
            nonuniform_df: Vec::new(),
        }
    }

    /// Norms plus the weighted sequences centred at `a`.
    pub fn with_nonuniform(m: &LatticeMeasure, a: f64) -> Self {
        let (nonuniform_local, nonuniform_df) = nonuniform(m, a);
        NormReport {
            nonuniform_local,
            nonuniform_df,
            ..Self::of(m)
        }
    }

    /// Norm selected by name: `local`, `kolmogorov` or `tv`.
    pub fn get(&self, norm: NormKind) -> f64 {
        match norm {
            NormKind::Local => self.local,
            NormKind::Kolmogorov => self.kolmogorov,
            NormKind::TotalVariation => self.total_variation,
        }
    }

    /// Rows `k,local,df` of the weighted sequences.
    pub fn write_nonuniform_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,local,df")?;
        for ((k, l), (_, d)) in self.nonuniform_local.iter().zip(&self.nonuniform_df) {
            writeln!(w, "{k},{l:.16e},{d:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Local,
    Kolmogorov,
    #[serde(rename = "tv")]
    TotalVariation,
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "local" => Ok(NormKind::Local),
            "kolmogorov" | "k" => Ok(NormKind::Kolmogorov),
            "tv" | "total_variation" => Ok(NormKind::TotalVariation),
            _ => Err(Error::InvalidArgument(format!("unknown norm {s:?}"))),
        }
    }
}

/// Quadrature values of the right-hand sides of the inversion inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionBounds {
    /// Bounds the Kolmogorov norm: `(1/2pi) int |M(t)| / |e^{it} - 1| dt`.
    pub tsaregradskii: f64,
    /// Bounds the local norm: `(1/2pi) int |M(t)| dt`.
    pub local_bound: f64,
    /// Bounds the total variation:
    /// `(1 + b pi)^{1/2} ((1/2pi) int |M|^2 + b^{-2} |(e^{-ita} M)'|^2 dt)^{1/2}`.
    pub tv_bound: f64,
    /// Bounds `sup_k |k - a| |M{k}|`.
    pub nonuniform_local_bound: f64,
    /// Bounds `sup_k |k - a| |M(k)|`, using `M(t) / (1 - e^{it})` as the
    /// transform of the distribution function.
    pub nonuniform_df_bound: f64,
    pub a: f64,
    pub b: f64,
    pub n_points: usize,
}

/// Bounds from a transform grid and a grid of its derivative at the same nodes.
pub fn inversion_bounds(
    m: &CharFnGrid,
    dm: &CharFnGrid,
    a: f64,
    b: f64,
) -> Result<InversionBounds> {
    let n = m.n_points();
    if n == 0 || dm.n_points() != n {
        return Err(Error::InvalidArgument(
            "transform and derivative grids must match".into(),
        ));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "b must be positive, got {b}"
        )));
    }
    // (1/2pi) int f dt by the midpoint rule is the plain mean over nodes.
    let mut tsar = 0.0;
    let mut loc = 0.0;
    let mut sq = 0.0;
    let mut nu_loc = 0.0;
    let mut nu_df = 0.0;
    let ia = C::new(0.0, a);
    for j in 0..n {
        let t = midpoint_node(n, j);
        let z = C::cis(t);
        let v = m.values[j];
        let dv = dm.values[j];
        let rot = C::cis(-a * t);
        let one_minus = C::new(1.0, 0.0) - z;
        loc += v.norm();
        tsar += v.norm() / one_minus.norm();
        // (e^{-ita} M)'
        let shifted = rot * (dv - ia * v);
        sq += v.norm_sqr() + shifted.norm_sqr() / (b * b);
        nu_loc += shifted.norm();
        // (e^{-ita} M / (1 - e^{it}))'
        let q = rot * ((dv - ia * v) / one_minus + v * C::i() * z / (one_minus * one_minus));
        nu_df += q.norm();
    }
    let nf = n as f64;
    Ok(InversionBounds {
        tsaregradskii: tsar / nf,
        local_bound: loc / nf,
        tv_bound: (1.0 + b * PI).sqrt() * (sq / nf).sqrt(),
        nonuniform_local_bound: nu_loc / nf,
        nonuniform_df_bound: nu_df / nf,
        a,
        b,
        n_points: n,
    })
}

/// Central finite-difference derivative of `f` at the midpoint nodes, with
/// step half the grid spacing.
pub fn derivative_fd(n_points: usize, f: impl Fn(f64) -> C + Sync) -> CharFnGrid {
    let h = PI / n_points as f64;
    CharFnGrid::sample(n_points, |t| (f(t + h) - f(t - h)) / (2.0 * h))
}

/// Transform of `m` and its exact derivative `sum_k ik M{k} e^{ikt}` on the
/// midpoint grid.
pub fn measure_grids(m: &LatticeMeasure, n_points: usize) -> (CharFnGrid, CharFnGrid) {
    let values = m.charfn_midpoint_grid(n_points, 0.0);
    let km = LatticeMeasure::new(m.offset, m.iter().map(|(k, w)| k as f64 * w).collect());
    let deriv = km
        .charfn_midpoint_grid(n_points, 0.0)
        .into_iter()
        .map(|v| v * C::i())
        .collect();
    (CharFnGrid { values }, CharFnGrid { values: deriv })
}

/// Where the transform comes from when refining the quadrature.
pub enum TransformSource<'a> {
    /// A lattice measure; transform and derivative are exact on every grid.
    Measure(&'a LatticeMeasure),
    /// A closed-form transform; the derivative is taken by finite differences.
    Function(&'a (dyn Fn(f64) -> C + Sync)),
}

fn bounds_at(src: &TransformSource<'_>, n: usize, a: f64, b: f64) -> Result<InversionBounds> {
    match src {
        TransformSource::Measure(m) => {
            let (v, dv) = measure_grids(m, n);
            inversion_bounds(&v, &dv, a, b)
        }
        TransformSource::Function(f) => {
            let v = CharFnGrid::sample(n, f);
            let dv = derivative_fd(n, f);
            inversion_bounds(&v, &dv, a, b)
        }
    }
}

fn rel_change(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / x.abs().max(y.abs())
    }
}

/// Bounds on successively doubled grids starting at `n_points`, until every
/// bound moves by less than `rel_tol` between refinements. Returns the finest
/// grid's bounds.
pub fn inversion_bounds_refined(
    src: &TransformSource<'_>,
    n_points: usize,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_doublings: u32,
) -> Result<InversionBounds> {
    let mut n = n_points.next_power_of_two().max(64);
    let mut prev = bounds_at(src, n, a, b)?;
    for _ in 0..max_doublings {
        n *= 2;
        let cur = bounds_at(src, n, a, b)?;
        let change = [
            rel_change(cur.tsaregradskii, prev.tsaregradskii),
            rel_change(cur.local_bound, prev.local_bound),
            rel_change(cur.tv_bound, prev.tv_bound),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if change < rel_tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergent {
        doublings: max_doublings,
        delta: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_distribution_dp, exact_distribution_enum};
    use crate::model::ModelParams;
    use proptest::prelude::*;

    fn unit_dipole() -> LatticeMeasure {
        LatticeMeasure::dirac(0).sub(&LatticeMeasure::dirac(1))
    }

    #[test]
    fn dipole_norms() {
        let m = unit_dipole();
        assert_eq!(local_norm(&m), 1.0);
        assert_eq!(kolmogorov_norm(&m), 1.0);
        assert_eq!(tv_norm(&m), 2.0);
        assert_eq!(df_value(&m, 0), 1.0);
        assert_eq!(df_value(&m, 1), 0.0);
        assert_eq!(df_value(&m, -1), 0.0);
    }

    #[test]
    fn cancelled_measure_is_zero() {
        let z = LatticeMeasure::dirac(0).sub(&LatticeMeasure::dirac(0));
        let r = NormReport::of(&z);
        assert_eq!((r.local, r.kolmogorov, r.total_variation), (0.0, 0.0, 0.0));
        assert_eq!(local_norm(&LatticeMeasure::zero()), 0.0);
    }

    #[test]
    fn one_step_local_norm() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let f = exact_distribution_dp(&p, 1).unwrap();
        assert_eq!(local_norm(&f), 0.98);
    }

    #[test]
    fn dual_oracles_agree_in_every_norm() {
        let p = ModelParams::new(0.3, 0.07, 0.04, 5).unwrap();
        let d = exact_distribution_dp(&p, 2)
            .unwrap()
            .sub(&exact_distribution_enum(&p, 2).unwrap());
        let r = NormReport::of(&d);
        assert!(r.total_variation <= 1e-12);
        assert!(r.kolmogorov <= 1e-12 && r.local <= 1e-12);
    }

    #[test]
    fn nonuniform_centering() {
        let (l, df) = nonuniform(&LatticeMeasure::dirac(3), 0.0);
        assert_eq!(l, vec![(3, 3.0)]);
        assert_eq!(df, vec![(3, 3.0)]);
        let (l, _) = nonuniform(&LatticeMeasure::dirac(3), 3.0);
        assert_eq!(l, vec![(3, 0.0)]);
    }

    #[test]
    fn dipole_bounds_dominate() {
        let m = unit_dipole();
        let b =
            inversion_bounds_refined(&TransformSource::Measure(&m), 64, 0.0, 1.0, 1e-3, 8).unwrap();
        assert!(b.tsaregradskii >= 1.0 - 1e-12);
        assert!(b.local_bound >= 1.0);
        assert!(b.tv_bound >= 2.0);
        assert!(b.nonuniform_local_bound >= 1.0);
    }

    #[test]
    fn zero_measure_bounds_vanish() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let f = exact_distribution_dp(&p, 4).unwrap();
        let z = f.sub(&f);
        let b =
            inversion_bounds_refined(&TransformSource::Measure(&z), 64, 0.0, 1.0, 1e-3, 2).unwrap();
        assert_eq!(b.tsaregradskii, 0.0);
        assert_eq!(b.tv_bound, 0.0);
    }

    #[test]
    fn fd_matches_exact_derivative() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let f = exact_distribution_dp(&p, 6).unwrap();
        let n = 256;
        let (_, exact) = measure_grids(&f, n);
        let fd = derivative_fd(n, |t| f.charfn(t));
        for (x, y) in exact.values.iter().zip(&fd.values) {
            assert!((x - y).norm() < 0.05 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn function_and_measure_sources_agree() {
        let p = ModelParams::new(0.5, 0.1, 0.02, 3).unwrap();
        let f = exact_distribution_dp(&p, 5).unwrap();
        let g = exact_distribution_dp(&ModelParams::new(0.4, 0.1, 0.03, 3).unwrap(), 5).unwrap();
        let m = f.sub(&g);
        let func = |t: f64| m.charfn(t);
        let a = inversion_bounds_refined(&TransformSource::Measure(&m), 128, 2.0, 1.0, 1e-4, 6)
            .unwrap();
        let b = inversion_bounds_refined(&TransformSource::Function(&func), 128, 2.0, 1.0, 1e-4, 6)
            .unwrap();
        assert!(rel_change(a.tsaregradskii, b.tsaregradskii) < 1e-3);
        assert!(rel_change(a.tv_bound, b.tv_bound) < 1e-3);
        assert!(
            a.nonuniform_df_bound
                >= nonuniform(&m, 2.0)
                    .1
                    .iter()
                    .map(|x| x.1)
                    .fold(0.0, f64::max)
        );
    }

    fn signed_measure() -> impl Strategy<Value = LatticeMeasure> {
        (-20i64..20, prop::collection::vec(-1.0f64..1.0, 0..40))
            .prop_map(|(o, w)| LatticeMeasure::new(o, w))
    }

    /// Zero total mass keeps the Kolmogorov-side integrands finite.
    fn balanced_measure() -> impl Strategy<Value = LatticeMeasure> {
        signed_measure().prop_map(|m| {
            let s = m.mass();
            let mut w = m.weights.clone();
            w.push(-s);
            LatticeMeasure::new(m.offset, w)
        })
    }

    proptest! {
        #[test]
        fn ordering_chain(m in signed_measure()) {
            let r = NormReport::of(&m);
            prop_assert!(r.local <= r.total_variation + 1e-15);
            prop_assert!(r.kolmogorov <= r.total_variation + 1e-12);
            for (_, w) in m.iter() {
                prop_assert!(w.abs() <= r.local);
            }
        }

        #[test]
        fn triangle_and_homogeneity(a in signed_measure(), b in signed_measure(), c in -3.0f64..3.0) {
            let s = a.add(&b);
            for f in [local_norm, kolmogorov_norm, tv_norm] {
                prop_assert!(f(&s) <= f(&a) + f(&b) + 1e-12);
                prop_assert!((f(&a.scaled(c)) - c.abs() * f(&a)).abs() <= 1e-12 * (1.0 + f(&a)));
            }
        }

        #[test]
        fn inversion_bounds_dominate_on_random_measures(m in balanced_measure(), a in -5.0f64..5.0) {
            let b = inversion_bounds_refined(&TransformSource::Measure(&m), 256, a, 1.0, 1e-3, 6).unwrap();
            let r = NormReport::with_nonuniform(&m, a);
            let slack = 1.01;
            prop_assert!(r.local <= b.local_bound * slack + 1e-12);
            prop_assert!(r.kolmogorov <= b.tsaregradskii * slack + 1e-12);
            prop_assert!(r.total_variation <= b.tv_bound * slack + 1e-12);
            let nu = r.nonuniform_local.iter().map(|x| x.1).fold(0.0, f64::max);
            prop_assert!(nu <= b.nonuniform_local_bound * slack + 1e-12);
        }
    }
}
