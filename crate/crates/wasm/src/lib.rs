//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string; the pure functions behind them are usable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use markov_claims::charfn::{approx_transforms, eigen_weights, midpoint_nodes};
use markov_claims::exact::{exact_charfn, exact_distribution_dp};
use markov_claims::inversion::{approximant_transform, approximation_measure};
use markov_claims::{ApproxVariant, InversionConfig, ModelParams, NormReport, RawParams};

/// Largest `n` the page may request; keeps grids small enough for a tab.
pub const MAX_N: usize = 512;

#[derive(Debug, Clone, Serialize)]
pub struct Distributions {
    pub k: Vec<i64>,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
    pub kolmogorov: f64,
    pub total_variation: f64,
    pub local: f64,
    pub n_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub t: Vec<f64>,
    pub lambda1: Vec<Option<f64>>,
    pub lambda2: Vec<Option<f64>>,
    pub g: Vec<f64>,
    pub g1: Vec<f64>,
    /// `|F_n(t)|` and the approximation's modulus at the same `n`.
    pub exact_n: Vec<f64>,
    pub approx_n: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorCurve {
    pub n: Vec<usize>,
    pub kolmogorov: Vec<f64>,
    pub total_variation: Vec<f64>,
    pub local: Vec<f64>,
}

fn params(alpha: f64, beta: f64, gamma: f64, d: u32) -> Result<ModelParams, String> {
    RawParams::new(alpha, beta, gamma, d)
        .validate()
        .map_err(|e| e.to_string())
}

fn check_n(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_N {
        return Err(format!("n must be in 1..={MAX_N}, got {n}"));
    }
    Ok(())
}

/// Exact law and approximation side by side on the exact law's support.
pub fn distributions(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    n: usize,
    variant: &str,
) -> Result<Distributions, String> {
    check_n(n)?;
    let p = params(alpha, beta, gamma, d)?;
    let v: ApproxVariant = variant
        .parse()
        .map_err(|e: markov_claims::Error| e.to_string())?;
    let exact = exact_distribution_dp(&p, n).map_err(|e| e.to_string())?;
    let a =
        approximation_measure(&p, n, v, &InversionConfig::default()).map_err(|e| e.to_string())?;
    let r = NormReport::of(&exact.sub(&a.measure));
    let k: Vec<i64> = (0..=exact.end()).collect();
    Ok(Distributions {
        exact: k.iter().map(|&j| exact.get(j)).collect(),
        approx: k.iter().map(|&j| a.measure.get(j)).collect(),
        k,
        kolmogorov: r.kolmogorov,
        total_variation: r.total_variation,
        local: r.local,
        n_used: a.probe.n_used,
    })
}

/// Moduli of the eigenvalues and compound Poisson factors on the midpoint grid.
pub fn spectrum(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    n: usize,
    variant: &str,
    n_points: usize,
) -> Result<Spectrum, String> {
    check_n(n)?;
    if !(2..=1 << 14).contains(&n_points) {
        return Err(format!("n_points must be in 2..=16384, got {n_points}"));
    }
    let p = params(alpha, beta, gamma, d)?;
    let v: ApproxVariant = variant
        .parse()
        .map_err(|e: markov_claims::Error| e.to_string())?;
    let t = midpoint_nodes(n_points);
    let eig: Vec<_> = t.iter().map(|&x| eigen_weights(&p, x).ok()).collect();
    let x: Vec<_> = t.iter().map(|&s| approx_transforms(&p, s, n)).collect();
    Ok(Spectrum {
        lambda1: eig.iter().map(|e| e.map(|s| s.lambda1.norm())).collect(),
        lambda2: eig.iter().map(|e| e.map(|s| s.lambda2.norm())).collect(),
        g: x.iter().map(|a| a.g().norm()).collect(),
        g1: x.iter().map(|a| a.g1().norm()).collect(),
        exact_n: t.iter().map(|&s| exact_charfn(&p, n, s).norm()).collect(),
        approx_n: t
            .iter()
            .map(|&s| approximant_transform(&p, n, v, s).norm())
            .collect(),
        t,
    })
}

/// Distances between the exact law and the approximation for `n = 1, 2, 4, ..., n_max`.
pub fn error_curve(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    variant: &str,
    n_max: usize,
) -> Result<ErrorCurve, String> {
    check_n(n_max)?;
    let p = params(alpha, beta, gamma, d)?;
    let v: ApproxVariant = variant
        .parse()
        .map_err(|e: markov_claims::Error| e.to_string())?;
    let cfg = InversionConfig::default();
    let mut out = ErrorCurve {
        n: Vec::new(),
        kolmogorov: Vec::new(),
        total_variation: Vec::new(),
        local: Vec::new(),
    };
    let mut n = 1;
    while n <= n_max {
        let exact = exact_distribution_dp(&p, n).map_err(|e| e.to_string())?;
        let a = approximation_measure(&p, n, v, &cfg).map_err(|e| e.to_string())?;
        let r = NormReport::of(&exact.sub(&a.measure));
        out.n.push(n);
        out.kolmogorov.push(r.kolmogorov);
        out.total_variation.push(r.total_variation);
        out.local.push(r.local);
        n *= 2;
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = compareDistributions)]
pub fn compare_distributions(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    n: usize,
    variant: &str,
) -> Result<String, JsValue> {
    to_js(distributions(alpha, beta, gamma, d, n, variant))
}

#[wasm_bindgen(js_name = spectrumCurves)]
pub fn spectrum_curves(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    n: usize,
    variant: &str,
    n_points: usize,
) -> Result<String, JsValue> {
    to_js(spectrum(alpha, beta, gamma, d, n, variant, n_points))
}

#[wasm_bindgen(js_name = errorCurve)]
pub fn error_curve_js(
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: u32,
    variant: &str,
    n_max: usize,
) -> Result<String, JsValue> {
    to_js(error_curve(alpha, beta, gamma, d, variant, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distributions_cover_the_exact_support() {
        let r = distributions(0.5, 0.1, 0.02, 3, 8, "G1V2_E").unwrap();
        // healthy start: one ill step precedes death, so the top claim is 1 + d(n - 1)
        assert_eq!(r.k.len(), 1 + 3 * 7 + 1);
        assert!((r.exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.kolmogorov <= r.total_variation);
    }

    #[test]
    fn spectrum_is_bounded_by_one() {
        let s = spectrum(0.5, 0.1, 0.02, 3, 4, "GV_E", 64).unwrap();
        assert_eq!(s.t.len(), 64);
        assert!(s.lambda1.iter().flatten().all(|&x| x <= 1.0 + 1e-12));
        assert!(s.exact_n.iter().all(|&x| x <= 1.0 + 1e-12));
        assert!(s.g.iter().all(|&x| x <= 1.0 + 1e-12));
    }

    #[test]
    fn error_curve_doubles_n() {
        let c = error_curve(0.5, 0.1, 0.04, 3, "E_only", 16).unwrap();
        assert_eq!(c.n, vec![1, 2, 4, 8, 16]);
        assert!(c.total_variation.last() < c.total_variation.first());
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(distributions(0.5, 0.3, 0.02, 3, 8, "GV_E").is_err());
        assert!(distributions(0.5, 0.1, 0.02, 3, 8, "nope").is_err());
        assert!(error_curve(0.5, 0.1, 0.02, 3, "GV_E", 0).is_err());
    }
}
