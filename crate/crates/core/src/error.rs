use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single inequality of the admissible parameter box that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// `alpha <= 0`.
    AlphaNotPositive,
    /// `alpha > c0`.
    AlphaAboveCap,
    /// `beta <= 0`.
    BetaNotPositive,
    /// `beta > 0.15`.
    BetaAboveCap,
    /// `gamma <= 0`.
    GammaNotPositive,
    /// `gamma > 0.05`.
    GammaAboveCap,
    /// `alpha + beta >= 1`.
    AlphaPlusBetaNotBelowOne,
    /// `c0` outside `(0, 1)`.
    CapOutOfRange,
    /// `d == 0`.
    DeathPaymentZero,
    /// A field is NaN or infinite.
    NotFinite,
}

impl Violation {
    pub fn describe(self) -> &'static str {
        match self {
            Violation::AlphaNotPositive => "alpha > 0",
            Violation::AlphaAboveCap => "alpha <= c0",
            Violation::BetaNotPositive => "beta > 0",
            Violation::BetaAboveCap => "beta <= 0.15",
            Violation::GammaNotPositive => "gamma > 0",
            Violation::GammaAboveCap => "gamma <= 0.05",
            Violation::AlphaPlusBetaNotBelowOne => "alpha + beta < 1",
            Violation::CapOutOfRange => "0 < c0 < 1",
            Violation::DeathPaymentZero => "d >= 1",
            Violation::NotFinite => "all parameters finite",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violated: {}", self.describe())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameters outside the admissible box: {}", list(.0))]
    InvalidParams(Vec<Violation>),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("support cap exceeded: {cells} lattice cells requested, cap is {cap}")]
    SupportCap { cells: u64, cap: u64 },

    #[error("path enumeration limited to n <= {max}, got n = {n}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("square-root branch violation at t = {t}: {detail}")]
    BranchViolation { t: f64, detail: String },

    #[error("degenerate denominator at t = {t}: |lambda - e^(idt)| = {gap:e}")]
    DegenerateDenominator { t: f64, gap: f64 },

    #[error("invalid inversion window: {0}")]
    Window(String),

    #[error(
        "aliasing probe did not stabilize after {doublings} doublings (last TV delta {delta:e})"
    )]
    NonConvergent { doublings: u32, delta: f64 },

    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.describe())
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
