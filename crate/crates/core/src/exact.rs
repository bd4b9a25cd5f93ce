//! Reference laws of the aggregate claim `S_n = f(xi_1) + ... + f(xi_n)` with
//! the chain started healthy.
//!
//! Three engines that share no code path: a lattice DP, brute-force path
//! enumeration, and the characteristic function from powers of the Fourier
//! twisted transition matrix. A seeded sampler gives empirical laws.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;
use crate::model::{
    fourier_transition_matrix, transition_matrix, ComplexMatrix3, ModelParams, State,
};

/// Default cap on `n * d` for the DP engine.
pub const DEFAULT_SUPPORT_CAP: u64 = 10_000_000;
pub const MAX_ENUMERATION_STEPS: usize = 12;

/// Largest value `S_n` can take from a healthy start: one ill period, then dead.
pub fn max_claim(p: &ModelParams, n: usize) -> i64 {
    if n == 0 {
        0
    } else {
        1 + (n as i64 - 1) * p.d() as i64
    }
}

/// Exact law of `S_n` by dynamic programming over (state, accumulated sum).
pub fn exact_distribution_dp(p: &ModelParams, n: usize) -> Result<LatticeMeasure> {
    exact_distribution_dp_capped(p, n, DEFAULT_SUPPORT_CAP)
}

pub fn exact_distribution_dp_capped(p: &ModelParams, n: usize, cap: u64) -> Result<LatticeMeasure> {
    Ok(run_dp(p, n, cap)?.0)
}

/// Probability of being dead after `k` periods, for `k = 0..=n`.
pub fn death_probabilities(p: &ModelParams, n: usize) -> Result<Vec<f64>> {
    Ok(run_dp(p, n, DEFAULT_SUPPORT_CAP)?.1)
}

fn run_dp(p: &ModelParams, n: usize, cap: u64) -> Result<(LatticeMeasure, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let cells = n as u64 * p.d() as u64;
    if cells > cap {
        return Err(Error::SupportCap { cells, cap });
    }
    let m = transition_matrix(p);
    let d = p.d() as usize;
    let top = max_claim(p, n) as usize;
    let mut out = vec![0.0; top + 1];

    // While alive only ill periods pay, so after k steps the sum is at most k.
    let mut healthy = vec![0.0; n + 1];
    let mut ill = vec![0.0; n + 1];
    healthy[0] = 1.0;
    let mut dead_mass = vec![0.0; n + 1];

    let (hh, hi) = (m[0][0], m[0][1]);
    let (ih, ii, id) = (m[1][0], m[1][1], m[1][2]);

    for step in 1..=n {
        let mut nh = vec![0.0; n + 1];
        let mut ni = vec![0.0; n + 1];
        for s in 0..step {
            let h = healthy[s];
            let i = ill[s];
            if h == 0.0 && i == 0.0 {
                continue;
            }
            nh[s] += hh * h + ih * i;
            ni[s + 1] += hi * h + ii * i;
            if i != 0.0 {
                // Dead from this step on: d per remaining period, this one included.
                let remaining = n - step + 1;
                out[s + remaining * d] += id * i;
            }
        }
        let absorbed: f64 = ill[..step].iter().sum::<f64>() * id;
        dead_mass[step] = dead_mass[step - 1] + absorbed;
        healthy = nh;
        ill = ni;
    }
    for s in 0..=n {
        out[s] += healthy[s] + ill[s];
    }
    Ok((LatticeMeasure::new(0, out), dead_mass))
}

/// Exact law of `S_n` by enumerating every feasible state path. Independent
/// cross-check for the DP engine; exponential in `n`.
pub fn exact_distribution_enum(p: &ModelParams, n: usize) -> Result<LatticeMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > MAX_ENUMERATION_STEPS {
        return Err(Error::EnumerationTooLarge {
            n,
            max: MAX_ENUMERATION_STEPS,
        });
    }
    let top = max_claim(p, n) as usize;
    let mut out = vec![0.0; top + 1];
    walk(p, State::Healthy, n, 0, 1.0, &mut out);
    Ok(LatticeMeasure::new(0, out))
}

fn walk(p: &ModelParams, from: State, left: usize, sum: usize, prob: f64, out: &mut [f64]) {
    if left == 0 {
        out[sum] += prob;
        return;
    }
    for to in State::ALL {
        let q = p.transition_prob(from, to);
        if q == 0.0 {
            continue;
        }
        walk(p, to, left - 1, sum + p.payoff(to) as usize, prob * q, out);
    }
}

fn mat_mul(a: &ComplexMatrix3, b: &ComplexMatrix3) -> ComplexMatrix3 {
    let mut c = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

fn mat_pow(m: &ComplexMatrix3, mut n: usize) -> ComplexMatrix3 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = [[one, zero, zero], [zero, one, zero], [zero, zero, one]];
    let mut base = *m;
    while n > 0 {
        if n & 1 == 1 {
            acc = mat_mul(&acc, &base);
        }
        n >>= 1;
        if n > 0 {
            base = mat_mul(&base, &base);
        }
    }
    acc
}

/// `E[e^{itS_n}]` as `(1,0,0) P(t)^n (1,1,1)^T`.
pub fn exact_charfn(p: &ModelParams, n: usize, t: f64) -> Complex64 {
    let pn = mat_pow(&fourier_transition_matrix(p, t), n);
    pn[0][0] + pn[0][1] + pn[0][2]
}

/// Empirical law of `count` simulated paths, reproducible for a fixed seed.
pub fn sample_empirical(
    p: &ModelParams,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<LatticeMeasure> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let m = transition_matrix(p);
    let top = max_claim(p, n) as usize;
    let mut hist = vec![0u64; top + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let mut state = State::Healthy;
        let mut sum = 0usize;
        for step in 0..n {
            if state == State::Dead {
                sum += (n - step) * p.d() as usize;
                break;
            }
            let u: f64 = rng.random();
            let row = &m[state.index()];
            state = if u < row[0] {
                State::Healthy
            } else if u < row[0] + row[1] {
                State::Ill
            } else {
                State::Dead
            };
            sum += p.payoff(state) as usize;
        }
        hist[sum] += 1;
    }
    let c = count as f64;
    Ok(LatticeMeasure::new(
        0,
        hist.into_iter().map(|h| h as f64 / c).collect(),
    ))
}
