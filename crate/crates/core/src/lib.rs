//! Evaluation and verification kernel for a family of planar Dirac spinor
//! fields with doubly-exponential annular structure.
//!
//! The crate builds a smooth spinor field `u` on the punctured plane together
//! with a matrix potential `V` such that `D u = V u` holds band by band for
//! the two-dimensional massless Dirac operator `D`, with the operator norm of
//! `V` staying within `(1/2 + eps) / |z|`. The field decays faster than every
//! power of `|z|` at the origin, which makes it a sharpness witness for the
//! `1/2` constant in strong unique continuation bounds. A Kelvin transform
//! carries the same construction to the point at infinity.
//!
//! Radii such as `exp(-exp(64))` underflow any hardware float, so all field
//! values are carried in sign/log-magnitude form ([`extrange`]) and every
//! radial formula is written in `t = log r`. The [`verify`] module turns the
//! defining identities and bounds into grid checks with reported worst-case
//! margins.

pub mod dirac;
pub mod extrange;
pub mod kelvin;
pub mod mollifier;
pub mod radii;
pub mod spinor;
pub mod verify;

pub use dirac::{apply_dirac_fd, clifford, dirac_residual, opnorm2, CliffordSet, FdStencil};
pub use extrange::{ExtComplex, ExtReal, Sign};
pub use kelvin::{infinity_example, transport_bound, KelvinField};
pub use mollifier::{select_delta, CutoffProfile};
pub use radii::{BandConstants, K0Conditions, Preset, RadiiSchedule};
pub use spinor::{Counterexample, PolarPoint, PotentialValue, Region, SpinorField, SpinorValue};
pub use verify::{run_all, CheckReport, RunReport, SampleGrid};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Cutoff sharpness parameter outside the admissible open interval.
    #[error("delta = {0} is outside (0, 0.25)")]
    InvalidDelta(f64),
    /// `delta^2 + delta <= epsilon` violated by an explicit override.
    #[error("delta = {delta} violates delta^2 + delta <= epsilon = {epsilon}")]
    DeltaBudget { delta: f64, epsilon: f64 },
    /// Requested annulus index beyond the resolved schedule.
    #[error("k = {k} exceeds schedule k_max = {k_max}")]
    KOutOfRange { k: u32, k_max: u32 },
    /// No starting index passes all five schedule conditions.
    #[error("no admissible k0 <= {k_max} for delta = {delta}")]
    NoAdmissibleK0 { delta: f64, k_max: u32 },
    /// Point below the innermost resolved radius.
    #[error("t = {t} lies below the resolved range (log rho_k_max = {limit})")]
    BelowResolvedRange { t: f64, limit: f64 },
    /// Clifford representation requested for an unsupported dimension.
    #[error("unsupported dimension n = {0} (expected 2 or 3)")]
    UnsupportedDimension(u32),
    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: residual {residual} > tolerance {tolerance}")]
    Quadrature { residual: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
