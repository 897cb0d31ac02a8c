//! Surface-code memory simulator built around prior-informed BPOSD decoding.
//!
//! The crate provides:
//!
//! - [`gf2`]: dense bit-packed GF(2) vectors and matrices (syndromes, parity
//!   checks, Gaussian elimination, restricted solves);
//! - [`codes`]: rotated and unrotated surface-code constructions with pinned
//!   qubit indexing and a brute-force distance oracle;
//! - [`bposd`]: sum-product belief propagation over the Tanner graph with an
//!   ordered-statistics (OSD-0) fallback, driven by per-qubit priors;
//! - [`noise`]: independent bit-flip error models, exact probabilities,
//!   weight-capped enumeration, and Poisson-binomial tail bounds;
//! - [`experiments`]: exhaustive logical-failure evaluation, scaling fits,
//!   and the known/unknown-location correction check;
//! - [`adaptive`]: closed-loop prior learning (Kalman-style updates from
//!   decoder soft output) and single-qubit gate calibration;
//! - [`cli`]: configuration parsing and command execution for the `priordec`
//!   binary.
//!
//! Numeric kernels are generic over the [`Scalar`] float type; the aliases
//! below pin the default `f64` instantiation used by the CLI and tests.

pub mod adaptive;
pub mod bposd;
pub mod cli;
pub mod codes;
pub mod experiments;
mod float;
pub mod gf2;
pub mod noise;

pub use float::Scalar;

/// Default scalar type for simulations.
pub type Real = f64;

/// Per-qubit decoder priors over the default scalar.
pub type Priors = bposd::PriorVector<Real>;
/// Bit-flip error model over the default scalar.
pub type Model = noise::ErrorModel<Real>;
/// Decode result over the default scalar.
pub type Decode = bposd::DecodeResult<Real>;
/// Prior-learning loop state over the default scalar.
pub type Learning = adaptive::LearningState<Real>;
/// Gate-calibration loop state over the default scalar.
pub type Calibration = adaptive::CalibrationState<Real>;
