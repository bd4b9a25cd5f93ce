//! `mclaims`: exact laws, approximations, distances, bound checks and rate
//! fits for aggregate claims of the three-state health chain.

mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use markov_claims::exact::{exact_distribution_dp, sample_empirical};
use markov_claims::inversion::{approximant_grid, approximation_measure};
use markov_claims::norms::{inversion_bounds_refined, TransformSource};
use markov_claims::verify::{
    rate_fit, run_suite, sweep, write_checks_csv, write_sweep_csv, CheckConfig, ParamGrid,
    ScalingPolicy, TheoremConfig,
};
use markov_claims::{Error, LatticeMeasure, ModelParams, NormReport};

use config::{Format, Overrides, RunConfig};

const TOOL: &str = concat!("mclaims ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "mclaims",
    version,
    about = "Aggregate claims of a three-state health chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact law of S_n (or an empirical law with --samples).
    Exact,
    /// Approximating signed measure for --variant.
    Approx {
        /// Write the transform on --grid-n midpoint nodes instead of the measure.
        #[arg(long)]
        dump_transform: bool,
    },
    /// Distances between the exact law and the approximation.
    Compare,
    /// Transform bound checks over the default parameter box.
    Verify,
    /// Error against n for --theorem, with a fitted rate.
    Rates,
    /// Errors for --theorem over the default box and --ns.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Approx { .. } => "approx",
            Command::Compare => "compare",
            Command::Verify => "verify",
            Command::Rates => "rates",
            Command::Sweep => "sweep",
        }
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    detail: Value,
}

impl Failure {
    fn config(message: String) -> Self {
        Failure {
            code: 2,
            kind: "config",
            message,
            detail: Value::Null,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (code, kind, detail) = match &e {
            Error::InvalidParams(v) => (3, "condition", json!(v)),
            Error::Hypothesis(_) => (4, "hypothesis", Value::Null),
            Error::NonConvergent { doublings, delta } => (
                5,
                "non_convergence",
                json!({ "doublings": doublings, "tv_delta": delta }),
            ),
            Error::InvalidArgument(_) | Error::DegenerateFit(_) | Error::Json(_) => {
                (2, "config", Value::Null)
            }
            Error::Io(_) => (1, "io", Value::Null),
            _ => (1, "numerical", Value::Null),
        };
        Failure {
            code,
            kind,
            message,
            detail,
        }
    }
}

/// Header shared by every output.
#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    n_used: Option<usize>,
}

struct Output {
    body: Vec<u8>,
    /// Non-zero exit after a successful write (failed verification).
    verdict: u8,
}

fn csv_header(h: &Header<'_>) -> Result<Vec<u8>, Failure> {
    let mut b = Vec::new();
    writeln!(b, "# tool: {}", h.tool).map_err(Error::from)?;
    writeln!(b, "# command: {}", h.command).map_err(Error::from)?;
    writeln!(
        b,
        "# config: {}",
        serde_json::to_string(h.config).map_err(Error::from)?
    )
    .map_err(Error::from)?;
    if let Some(n) = h.n_used {
        writeln!(b, "# n_used: {n}").map_err(Error::from)?;
    }
    Ok(b)
}

fn json_body(h: &Header<'_>, result: impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut b = serde_json::to_vec_pretty(&json!({ "header": h, "result": result }))
        .map_err(Error::from)?;
    b.push(b'\n');
    Ok(b)
}

fn measure_output(h: &Header<'_>, fmt: Format, m: &LatticeMeasure) -> Result<Vec<u8>, Failure> {
    match fmt {
        Format::Csv => {
            let mut b = csv_header(h)?;
            m.write_csv(&mut b)?;
            Ok(b)
        }
        Format::Json => json_body(h, m),
    }
}

fn params(cfg: &RunConfig) -> Result<ModelParams, Failure> {
    Ok(cfg.raw().validate()?)
}

fn cmd_exact(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = params(cfg)?;
    let m = if cfg.samples > 0 {
        sample_empirical(&p, cfg.n, cfg.samples, cfg.seed)?
    } else {
        exact_distribution_dp(&p, cfg.n)?
    };
    let h = Header {
        tool: TOOL,
        command: "exact",
        config: cfg,
        n_used: None,
    };
    Ok(Output {
        body: measure_output(&h, cfg.format_or(Format::Csv), &m)?,
        verdict: 0,
    })
}

fn cmd_approx(cfg: &RunConfig, dump_transform: bool) -> Result<Output, Failure> {
    let p = params(cfg)?;
    if dump_transform {
        let grid = approximant_grid(&p, cfg.n, cfg.variant, cfg.grid_n, 0.0);
        let h = Header {
            tool: TOOL,
            command: "approx",
            config: cfg,
            n_used: Some(cfg.grid_n),
        };
        let body = match cfg.format_or(Format::Csv) {
            Format::Csv => {
                let mut b = csv_header(&h)?;
                grid.write_csv(&mut b)?;
                b
            }
            Format::Json => {
                let rows: Vec<[f64; 3]> = (0..grid.n_points())
                    .map(|j| [grid.node(j), grid.values[j].re, grid.values[j].im])
                    .collect();
                json_body(&h, json!({ "columns": ["t", "re", "im"], "rows": rows }))?
            }
        };
        return Ok(Output { body, verdict: 0 });
    }
    let a = approximation_measure(&p, cfg.n, cfg.variant, &cfg.inversion)?;
    let h = Header {
        tool: TOOL,
        command: "approx",
        config: cfg,
        n_used: Some(a.probe.n_used),
    };
    let body = match cfg.format_or(Format::Csv) {
        Format::Csv => measure_output(&h, Format::Csv, &a.measure)?,
        Format::Json => json_body(
            &h,
            json!({ "measure": a.measure, "probe": a.probe, "max_imag": a.max_imag }),
        )?,
    };
    Ok(Output { body, verdict: 0 })
}

fn cmd_compare(cfg: &RunConfig) -> Result<Output, Failure> {
    let p = params(cfg)?;
    let exact = exact_distribution_dp(&p, cfg.n)?;
    let a = approximation_measure(&p, cfg.n, cfg.variant, &cfg.inversion)?;
    let diff = exact.sub(&a.measure);
    let report = NormReport::with_nonuniform(&diff, cfg.a);
    let start = diff.len().next_power_of_two().max(256);
    let bounds = inversion_bounds_refined(
        &TransformSource::Measure(&diff),
        start,
        cfg.a,
        cfg.b,
        1e-3,
        6,
    )?;
    let h = Header {
        tool: TOOL,
        command: "compare",
        config: cfg,
        n_used: Some(a.probe.n_used),
    };
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json_body(
            &h,
            json!({ "report": report, "selected": report.get(cfg.norm), "bounds": bounds, "probe": a.probe }),
        )?,
        Format::Csv => {
            let mut b = csv_header(&h)?;
            writeln!(b, "# local: {:.16e}", report.local).map_err(Error::from)?;
            writeln!(b, "# kolmogorov: {:.16e}", report.kolmogorov).map_err(Error::from)?;
            writeln!(b, "# total_variation: {:.16e}", report.total_variation)
                .map_err(Error::from)?;
            report.write_nonuniform_csv(&mut b)?;
            b
        }
    };
    Ok(Output { body, verdict: 0 })
}

fn cmd_verify(cfg: &RunConfig) -> Result<Output, Failure> {
    let grid = ParamGrid::default_box(cfg.c0)?;
    let check = CheckConfig {
        c2: cfg.c2,
        n_t: cfg.grid_n,
        ..CheckConfig::default()
    };
    let checks = run_suite(cfg.suite, &grid, &check)?;
    let violated = checks.iter().any(|c| c.violated == Some(true));
    let h = Header {
        tool: TOOL,
        command: "verify",
        config: cfg,
        n_used: Some(cfg.grid_n),
    };
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json_body(&h, &checks)?,
        Format::Csv => {
            let mut b = csv_header(&h)?;
            write_checks_csv(&checks, &mut b)?;
            b
        }
    };
    Ok(Output {
        body,
        verdict: if violated { 1 } else { 0 },
    })
}

fn theorem_config(cfg: &RunConfig) -> Result<TheoremConfig, Failure> {
    let base = TheoremConfig {
        c2: cfg.c2,
        inversion: cfg.inversion,
        ..TheoremConfig::default()
    };
    Ok(base.calibrated()?)
}

fn cmd_rates(cfg: &RunConfig) -> Result<Output, Failure> {
    let policy = cfg
        .policy
        .unwrap_or(ScalingPolicy::Fixed { params: cfg.raw() });
    let tc = theorem_config(cfg)?;
    let (fit, runs) = rate_fit(cfg.theorem, policy, &cfg.ns, &tc)?;
    let n_used = runs.iter().map(|r| r.probe.n_used).max();
    let h = Header {
        tool: TOOL,
        command: "rates",
        config: cfg,
        n_used,
    };
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json_body(&h, json!({ "fit": fit, "runs": runs }))?,
        Format::Csv => {
            let mut b = csv_header(&h)?;
            writeln!(b, "# slope: {:.16e}", fit.slope).map_err(Error::from)?;
            writeln!(b, "# intercept: {:.16e}", fit.intercept).map_err(Error::from)?;
            writeln!(b, "# r_squared: {:.16e}", fit.r_squared).map_err(Error::from)?;
            writeln!(b, "n,alpha,gamma,error,shape,ratio,n_used").map_err(Error::from)?;
            for r in &runs {
                writeln!(
                    b,
                    "{},{:?},{:?},{:.16e},{:.16e},{:.16e},{}",
                    r.n, r.params.alpha, r.params.gamma, r.error, r.shape, r.ratio, r.probe.n_used
                )
                .map_err(Error::from)?;
            }
            b
        }
    };
    Ok(Output { body, verdict: 0 })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Output, Failure> {
    let grid = ParamGrid::default_box(cfg.c0)?;
    let tc = theorem_config(cfg)?;
    let rows = sweep(cfg.theorem, &grid, &cfg.ns, &tc);
    let h = Header {
        tool: TOOL,
        command: "sweep",
        config: cfg,
        n_used: None,
    };
    let body = match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut b = csv_header(&h)?;
            write_sweep_csv(cfg.theorem, &rows, &mut b)?;
            b
        }
        Format::Json => json_body(&h, &rows)?,
    };
    Ok(Output { body, verdict: 0 })
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let cfg = cli.overrides.resolve().map_err(Failure::config)?;
    let out = match &cli.command {
        Command::Exact => cmd_exact(&cfg),
        Command::Approx { dump_transform } => cmd_approx(&cfg, *dump_transform),
        Command::Compare => cmd_compare(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Rates => cmd_rates(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
    }?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &out.body).map_err(Error::from)?,
        None => std::io::stdout()
            .write_all(&out.body)
            .map_err(Error::from)?,
    }
    Ok(out.verdict)
}

fn fail(command: Option<&str>, f: Failure) -> ExitCode {
    let body = json!({
        "error": f.kind,
        "exit_code": f.code,
        "message": f.message,
        "command": command,
        "detail": f.detail,
    });
    eprintln!("{body}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(None, Failure::config(e.to_string().trim().to_string())),
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => fail(Some(cli.command.name()), f),
    }
}
