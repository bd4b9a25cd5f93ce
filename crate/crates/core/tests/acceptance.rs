//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use markov_claims::charfn::CharFnGrid;
use markov_claims::exact::{exact_charfn, exact_distribution_dp, exact_distribution_enum};
use markov_claims::inversion::InversionConfig;
use markov_claims::model::{ModelParams, RawParams, BETA_CAP, GAMMA_CAP};
use markov_claims::norms::tv_norm;
use markov_claims::verify::{
    geometric_ns, inversion_dominance, rate_fit, run_suite, spectral_residual, CheckConfig,
    ParamGrid, ScalingPolicy, Suite, TheoremConfig, TheoremError, TheoremId,
};
use markov_claims::LatticeMeasure;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(idx: usize, title: &str, elapsed: Duration, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "{tag} [{idx}] {title}: {} ({:.1}s)",
        o.detail,
        elapsed.as_secs_f64()
    );
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    loop {
        let raw = RawParams::new(
            rng.random_range(0.001..=0.9),
            rng.random_range(0.001..=BETA_CAP),
            rng.random_range(0.001..=GAMMA_CAP),
            rng.random_range(1..=10),
        );
        if let Ok(p) = raw.validate() {
            return p;
        }
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst_tv: f64 = 0.0;
    let mut worst_cf: f64 = 0.0;
    for _ in 0..50 {
        let p = random_params(&mut rng);
        for n in 1..=10 {
            let dp = exact_distribution_dp(&p, n).unwrap();
            let en = exact_distribution_enum(&p, n).unwrap();
            worst_tv = worst_tv.max(tv_norm(&dp.sub(&en)));
            let grid = CharFnGrid {
                values: dp.charfn_midpoint_grid(128, 0.0),
            };
            for j in 0..grid.n_points() {
                let want = exact_charfn(&p, n, grid.node(j));
                worst_cf = worst_cf.max((grid.values[j] - want).norm());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst_tv <= 1e-12 && worst_cf <= 1e-11 && secs < 60.0,
        detail: format!("max TV(DP, enum) = {worst_tv:.2e}, max |DFT - charfn| = {worst_cf:.2e}"),
    }
}

fn spectral_identity() -> Outcome {
    let start = Instant::now();
    let grid = ParamGrid::default_box(0.9).unwrap();
    let mut worst: f64 = 0.0;
    for p in &grid.points {
        for n in [1, 4, 16, 64] {
            worst = worst.max(spectral_residual(p, n, 512).unwrap());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-10 && secs < 60.0,
        detail: format!(
            "max residual {worst:.2e} over {} tuples x 512 nodes",
            grid.len()
        ),
    }
}

fn exact_constant_suite() -> Outcome {
    let start = Instant::now();
    let grid = ParamGrid::default_box(0.9).unwrap();
    let checks = run_suite(Suite::ExactConstant, &grid, &CheckConfig::default()).unwrap();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{}={:.4}", c.lemma_id, c.max_ratio))
        .collect();
    let worst = checks.iter().map(|c| c.max_ratio).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failed.is_empty() && secs < 300.0,
        detail: if failed.is_empty() {
            format!(
                "{} bounds, 0 violations, largest ratio {worst:.4}",
                checks.len()
            )
        } else {
            format!("violated: {}", failed.join(", "))
        },
    }
}

/// Measures produced by the rate criteria, kept for the dominance check.
struct Produced {
    label: String,
    difference: LatticeMeasure,
}

fn keep(out: &mut Vec<Produced>, tag: &str, runs: &[TheoremError]) {
    for r in runs {
        out.push(Produced {
            label: format!("{tag} n={}", r.n),
            difference: r.difference.clone(),
        });
    }
}

fn exponential_death_regime(cfg: &TheoremConfig, out: &mut Vec<Produced>) -> Outcome {
    let policy = ScalingPolicy::Fixed {
        params: RawParams::new(0.5, 0.1, 0.04, 3),
    };
    let (fit, runs) = rate_fit(TheoremId::EOnly, policy, &geometric_ns(8, 128), cfg).unwrap();
    keep(out, "E_only", &runs);
    let decreasing = fit.errors.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: fit.slope < 0.0 && fit.r_squared >= 0.98 && decreasing,
        detail: format!(
            "log error vs n ({:?} norm): slope {:.5}, r^2 {:.5}, errors {:?}",
            fit.norm,
            fit.slope,
            fit.r_squared,
            fit.errors
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
        ),
    }
}

fn polynomial_regime(
    id: TheoremId,
    policy: ScalingPolicy,
    band: (f64, f64),
    limit_secs: Option<f64>,
    cfg: &TheoremConfig,
    tag: &str,
    out: &mut Vec<Produced>,
) -> Outcome {
    let start = Instant::now();
    let (fit, runs) = rate_fit(id, policy, &geometric_ns(16, 1024), cfg).unwrap();
    keep(out, tag, &runs);
    let secs = start.elapsed().as_secs_f64();
    let in_band = fit.slope >= band.0 && fit.slope <= band.1;
    Outcome {
        pass: in_band && limit_secs.is_none_or(|l| secs < l),
        detail: format!(
            "log-log slope {:.4} (band [{}, {}]), r^2 {:.4}, Kolmogorov errors {:?}",
            fit.slope,
            band.0,
            band.1,
            fit.r_squared,
            fit.errors
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
        ),
    }
}

fn nonuniform_envelopes(cfg: &TheoremConfig, out: &mut Vec<Produced>) -> Outcome {
    use markov_claims::verify::theorem_error;
    let p = ModelParams::new(0.5, 0.1, 0.05, 3).unwrap();
    let fine = TheoremConfig {
        inversion: InversionConfig {
            oversample: 8,
            ..cfg.inversion
        },
        ..*cfg
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [32usize, 64] {
        let base = theorem_error(&p, n, TheoremId::Nonuniform, cfg).unwrap();
        let refined = theorem_error(&p, n, TheoremId::Nonuniform, &fine).unwrap();
        let sup = |v: &[(i64, f64)]| v.iter().map(|x| x.1).fold(0.0, f64::max);
        let (cl, cd) = (sup(&base.weighted_local), sup(&base.weighted_df));
        let (rl, rd) = (sup(&refined.weighted_local), sup(&refined.weighted_df));
        let stable = |a: f64, b: f64| (a - b).abs() <= 0.1 * a.abs().max(b.abs());
        let ok = cl.is_finite()
            && cd.is_finite()
            && cl > 0.0
            && cd > 0.0
            && stable(cl, rl)
            && stable(cd, rd);
        pass &= ok;
        parts.push(format!(
            "n={n}: local {cl:.4e} (refined {rl:.4e}), df {cd:.4e} (refined {rd:.4e}), grid {} -> {}",
            base.probe.n_used, refined.probe.n_used
        ));
        out.push(Produced {
            label: format!("nonuniform n={n}"),
            difference: base.difference,
        });
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn dominance(produced: &[Produced]) -> Outcome {
    let mut failures = Vec::new();
    let mut refinements = 0;
    let mut tightest: f64 = 0.0;
    for m in produced {
        let d = inversion_dominance(&m.difference).unwrap();
        refinements += d.extra_refinements;
        tightest = tightest
            .max(d.kolmogorov / d.bounds.tsaregradskii)
            .max(d.local / d.bounds.local_bound)
            .max(d.total_variation / d.bounds.tv_bound);
        if !d.holds {
            failures.push(m.label.clone());
        }
    }
    Outcome {
        pass: failures.is_empty() && !produced.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{} measures, all three bounds dominate; tightest norm/bound {tightest:.4}, {refinements} extra refinements",
                produced.len()
            )
        } else {
            format!("not dominated: {}", failures.join(", "))
        },
    }
}

fn main() -> ExitCode {
    // Cargo passes harness flags such as --nocapture; a name filter narrows the run.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return ExitCode::SUCCESS;
    }

    let cfg = TheoremConfig::default().calibrated().unwrap();
    println!(
        "exponent constants from the death-only decay: {:.4} (n gamma alpha), {:.4} (n gamma)",
        cfg.exp_alpha_gamma, cfg.exp_gamma
    );
    let mut produced = Vec::new();
    let mut all = true;
    let mut run = |idx: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(idx, title, t.elapsed(), &o);
        all &= o.pass;
    };

    run(
        1,
        "oracle equivalence (50 random tuples, n = 1..10)",
        &mut oracle_equivalence,
    );
    run(
        2,
        "spectral identity on the default box, n in {1, 4, 16, 64}",
        &mut spectral_identity,
    );
    run(
        3,
        "explicit-constant transform bounds on the default box",
        &mut exact_constant_suite,
    );
    run(
        4,
        "death-only approximation, alpha = 0.5, gamma = 0.04, n = 8..128",
        &mut || exponential_death_regime(&cfg, &mut produced),
    );
    run(
        5,
        "G^n V + E, alpha gamma = 0.16 / n, Kolmogorov slope over n = 16..1024",
        &mut || {
            let policy = ScalingPolicy::AlphaGammaInverseN {
                c: 0.16,
                beta: 0.1,
                gamma: 0.02,
                d: 3,
                c0: 0.9,
            };
            polynomial_regime(
                TheoremId::GvESqrtN,
                policy,
                (-0.80, -0.30),
                Some(600.0),
                &cfg,
                "GV_E",
                &mut produced,
            )
        },
    );
    run(
        6,
        "G1^n V1 + E, alpha = 0.5, gamma = 0.32 / n, Kolmogorov slope over n = 16..1024",
        &mut || {
            let policy = ScalingPolicy::GammaInverseN {
                c: 0.32,
                alpha: 0.5,
                beta: 0.1,
                d: 3,
                c0: 0.9,
            };
            polynomial_regime(
                TheoremId::G1v1E,
                policy,
                (-1.35, -0.70),
                None,
                &cfg,
                "G1V1_E",
                &mut produced,
            )
        },
    );
    run(
        7,
        "non-uniform envelopes, (0.5, 0.1, 0.05, d = 3), n in {32, 64}",
        &mut || nonuniform_envelopes(&cfg, &mut produced),
    );
    run(
        8,
        "inversion-inequality bounds dominate the exact norms",
        &mut || dominance(&produced),
    );

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
