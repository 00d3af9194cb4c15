//! Horizon-class edge images and a Monte Carlo risk laboratory for
//! classical image denoisers.
//!
//! The crate renders piecewise-constant images whose single edge contour is
//! a smooth one-dimensional function, adds reproducible Gaussian noise, and
//! measures the mean-square risk of several denoising algorithms:
//!
//! * periodic linear convolution (box and general kernels), together with
//!   the spectral constructions that pin down its bias floor,
//! * the Yaroslavsky/SUSAN neighborhood filter and its semi-oracle variant,
//! * nonlocal means with hard, tapered, and oracle patch weights,
//!   accelerated by per-offset integral-image distance sums,
//! * separable 2D Haar hard thresholding.
//!
//! The risk laboratory estimates risk by Monte Carlo with deterministic,
//! counter-based noise substreams, decomposes it into bias and variance,
//! fits log-log decay slopes over sweeps of the grid size, and reproduces
//! the edge-pixel mechanism that keeps nonlocal means from reaching the
//! optimal rate on sharp edges.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `horizon-risk` binary for a batch command-line front end.

pub mod cli;
pub mod contour;
pub mod denoiser;
pub mod error;
pub mod grid;
pub mod horizon;
pub mod linear;
pub mod nlm;
pub mod noise;
pub mod quad;
pub mod risk;
pub mod stats;
pub mod wavelet;
pub mod yaroslavsky;

pub use contour::EdgeContour;
pub use denoiser::{DenoiserFamily, DenoiserSpec};
pub use error::{Error, Result};
pub use grid::ImageGrid;
pub use nlm::{NlmParams, OracleLevel, SearchMode, WeightKind};
pub use noise::NoiseSpec;
pub use risk::{EdgeDiagnostics, RateFit, RiskEstimate};
pub use yaroslavsky::YfParams;
