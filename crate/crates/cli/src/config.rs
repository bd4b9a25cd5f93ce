//! Resolved run configuration: defaults, then a JSON config file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use markov_claims::inversion::InversionConfig;
use markov_claims::norms::NormKind;
use markov_claims::verify::{ScalingPolicy, Suite, TheoremId, DEFAULT_C2};
use markov_claims::{ApproxVariant, RawParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Embedded verbatim in every output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d: u32,
    pub c0: f64,
    pub n: usize,
    /// Step counts for `rates` and `sweep`.
    pub ns: Vec<usize>,
    pub variant: ApproxVariant,
    pub norm: NormKind,
    pub theorem: TheoremId,
    pub suite: Suite,
    /// How parameters move with `n` in `rates`; `null` keeps them fixed.
    pub policy: Option<ScalingPolicy>,
    /// Nodes for transform dumps and for the bound checks.
    pub grid_n: usize,
    pub seed: u64,
    /// Paths to simulate in `exact`; 0 gives the exact law.
    pub samples: usize,
    /// Centre and scale of the inversion-inequality bounds.
    pub a: f64,
    pub b: f64,
    pub c2: f64,
    pub inversion: InversionConfig,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.5,
            beta: 0.1,
            gamma: 0.02,
            d: 3,
            c0: markov_claims::model::DEFAULT_C0,
            n: 16,
            ns: vec![16, 32, 64, 128, 256],
            variant: ApproxVariant::GvE,
            norm: NormKind::Kolmogorov,
            theorem: TheoremId::GvE,
            suite: Suite::ExactConstant,
            policy: None,
            grid_n: 512,
            seed: 0,
            samples: 0,
            a: 0.0,
            b: 1.0,
            c2: DEFAULT_C2,
            inversion: InversionConfig::default(),
            format: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn raw(&self) -> RawParams {
        RawParams::new(self.alpha, self.beta, self.gamma, self.d).with_c0(self.c0)
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Flags shared by every subcommand. Each one set overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; its fields override the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub d: Option<u32>,
    #[arg(long, global = true)]
    pub c0: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated step counts for `rates` and `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// GV_E, G1V1_E, G1V2_E or E_only.
    #[arg(long, global = true)]
    pub variant: Option<ApproxVariant>,
    /// local, kolmogorov or tv.
    #[arg(long, global = true)]
    pub norm: Option<NormKind>,
    #[arg(long, global = true)]
    pub theorem: Option<TheoremId>,
    /// exact-constant, fitted or all.
    #[arg(long, global = true)]
    pub suite: Option<Suite>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        apply!(
            cfg, self, alpha, beta, gamma, d, c0, n, ns, variant, norm, theorem, suite, grid_n,
            seed, samples, a, b, c2
        );
        if self.format.is_some() {
            cfg.format = self.format;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if cfg.grid_n == 0 || !cfg.grid_n.is_power_of_two() {
            return Err(format!("grid_n must be a power of two, got {}", cfg.grid_n));
        }
        if !(cfg.b > 0.0) {
            return Err(format!("b must be positive, got {}", cfg.b));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig {
            policy: Some(ScalingPolicy::GammaInverseN {
                c: 0.32,
                alpha: 0.5,
                beta: 0.1,
                d: 3,
                c0: 0.9,
            }),
            format: Some(Format::Json),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_override_file_and_file_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("mclaims-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"alpha": 0.3, "n": 40}"#).unwrap();
        let o = Overrides {
            config: Some(path),
            n: Some(8),
            ..Overrides::default()
        };
        let cfg = o.resolve().unwrap();
        assert_eq!((cfg.alpha, cfg.n, cfg.beta), (0.3, 8, 0.1));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah": 0.3}"#).is_err());
    }
}
