//! Aggregate claims of a three-state health chain (healthy, ill, dead) and
//! their signed compound Poisson approximations.
//!
//! * [`model`]: parameters, admissibility, transition matrices.
//! * [`exact`]: exact laws by DP, path enumeration and matrix powers.
//! * [`charfn`]: closed-form transforms and the spectral decomposition.
//! * [`inversion`]: lattice measures from transforms; the approximations.
//! * [`norms`]: distances and Fourier-side upper bounds.
//! * [`verify`]: bound checks over parameter grids and rate fits.

pub mod charfn;
pub mod error;
pub mod exact;
pub mod inversion;
pub mod measure;
pub mod model;
pub mod norms;
pub mod verify;

pub use error::{Error, Result, Violation};
pub use inversion::{ApproxVariant, Approximation, InversionConfig};
pub use measure::LatticeMeasure;
pub use model::{ModelParams, RawParams, State};
pub use norms::NormReport;
