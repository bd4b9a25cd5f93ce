//! Finite signed measures on the integer lattice.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A signed measure on `Z` stored as a contiguous block of weights starting at
/// `offset`. Points outside the block carry zero weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatticeMeasure {
    pub offset: i64,
    pub weights: Vec<f64>,
}

impl LatticeMeasure {
    pub fn new(offset: i64, weights: Vec<f64>) -> Self {
        LatticeMeasure { offset, weights }
    }

    pub fn zero() -> Self {
        LatticeMeasure {
            offset: 0,
            weights: Vec::new(),
        }
    }

    /// Unit atom at `k`.
    pub fn dirac(k: i64) -> Self {
        LatticeMeasure {
            offset: k,
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Last stored lattice point (inclusive). Meaningless for an empty measure.
    pub fn end(&self) -> i64 {
        self.offset + self.weights.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.weights.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.offset + i as i64, w))
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same measure stored on `[lo, hi]`; weights outside the range are dropped.
    pub fn restricted(&self, lo: i64, hi: i64) -> Self {
        let weights = (lo..=hi).map(|k| self.get(k)).collect();
        LatticeMeasure {
            offset: lo,
            weights,
        }
    }

    /// `self - other` on the union of both supports.
    pub fn sub(&self, other: &LatticeMeasure) -> LatticeMeasure {
        self.combine(other, -1.0)
    }

    pub fn add(&self, other: &LatticeMeasure) -> LatticeMeasure {
        self.combine(other, 1.0)
    }

    fn combine(&self, other: &LatticeMeasure, sign: f64) -> LatticeMeasure {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.scaled(sign);
        }
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        let weights = (lo..=hi)
            .map(|k| self.get(k) + sign * other.get(k))
            .collect();
        LatticeMeasure {
            offset: lo,
            weights,
        }
    }

    pub fn scaled(&self, c: f64) -> LatticeMeasure {
        LatticeMeasure {
            offset: self.offset,
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    /// Characteristic function `sum_k M{k} e^{ikt}` at one point.
    pub fn charfn(&self, t: f64) -> Complex64 {
        self.iter()
            .map(|(k, w)| Complex64::cis(k as f64 * t) * w)
            .sum()
    }

    /// Characteristic function on the midpoint grid
    /// `t_j = -pi + (2j+1) pi / n + shift`, `j = 0..n`, via one FFT.
    ///
    /// Exact for any support length: each weight is folded into its residue
    /// class mod `n` after multiplying by the `k`-dependent phase.
    pub fn charfn_midpoint_grid(&self, n: usize, shift: f64) -> Vec<Complex64> {
        assert!(n > 0);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, w) in self.iter() {
            let idx = k.rem_euclid(n as i64) as usize;
            let mut phase = grid_phase(k, n);
            if shift != 0.0 {
                phase *= Complex64::cis(k as f64 * shift);
            }
            buf[idx] += phase * w;
        }
        // sum_m buf[m] e^{+2 pi i j m / n}
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,weight")?;
        for (k, x) in self.iter() {
            writeln!(w, "{k},{x:.16e}")?;
        }
        Ok(())
    }

    /// Parses `k,weight` rows. Lines starting with `#` and the header are skipped;
    /// missing lattice points between rows are zero.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut pts: Vec<(i64, f64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("k,") {
                continue;
            }
            let (k, x) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidArgument(format!("bad csv row: {line}")))?;
            let k: i64 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad lattice index: {k}")))?;
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad weight: {x}")))?;
            pts.push((k, x));
        }
        if pts.is_empty() {
            return Ok(LatticeMeasure::zero());
        }
        pts.sort_by_key(|p| p.0);
        let lo = pts[0].0;
        let hi = pts[pts.len() - 1].0;
        let mut weights = vec![0.0; (hi - lo + 1) as usize];
        for (k, x) in pts {
            weights[(k - lo) as usize] += x;
        }
        Ok(LatticeMeasure {
            offset: lo,
            weights,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `e^{ik(-pi + pi/n)}` with the argument reduced exactly, so large `|k|` keep
/// full precision.
pub(crate) fn grid_phase(k: i64, n: usize) -> Complex64 {
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let r = k.rem_euclid(2 * n as i64) as f64;
    Complex64::cis(PI * r / n as f64) * sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_charfn() {
        let m = LatticeMeasure::dirac(3);
        let v = m.charfn(0.7);
        assert!((v - Complex64::cis(2.1)).norm() < 1e-15);
    }

    #[test]
    fn sub_aligns_supports() {
        let a = LatticeMeasure::new(0, vec![0.5, 0.5]);
        let b = LatticeMeasure::new(1, vec![0.25, 0.75]);
        let d = a.sub(&b);
        assert_eq!(d.offset, 0);
        assert_eq!(d.weights, vec![0.5, 0.25, -0.75]);
        assert!(d.mass().abs() < 1e-15);
    }

    #[test]
    fn grid_charfn_matches_direct_sum() {
        let m = LatticeMeasure::new(-5, vec![0.1, -0.2, 0.3, 0.0, 0.4, 0.25, 0.15]);
        let n = 8; // support longer than n on purpose
        for shift in [0.0, 0.013] {
            let g = m.charfn_midpoint_grid(n, shift);
            for (j, v) in g.iter().enumerate() {
                let t = -PI + (2 * j + 1) as f64 * PI / n as f64 + shift;
                assert!((v - m.charfn(t)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let m = LatticeMeasure::new(-2, vec![0.1, 1.0 / 3.0, -2.5e-17]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = LatticeMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_shape() {
        let m = LatticeMeasure::new(4, vec![0.5, 0.5]);
        let s = m.to_json().unwrap();
        assert_eq!(s, r#"{"offset":4,"weights":[0.5,0.5]}"#);
        assert_eq!(LatticeMeasure::from_json(&s).unwrap(), m);
    }
}
