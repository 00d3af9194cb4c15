//! Tagged denoiser descriptions and per-size parameter rules.
//!
//! A [`DenoiserSpec`] pins every tuning parameter of one algorithm and can
//! be applied to an image. A [`DenoiserFamily`] is the per-grid-size rule a
//! rate sweep follows (fixed parameters, a formula in `n`, or oracle grid
//! search for the box halfwidth).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;
use crate::linear::box_filter_fast;
use crate::nlm::{nlm_denoise, NlmParams, OracleLevel};
use crate::wavelet::wavelet_denoise;
use crate::yaroslavsky::{yaroslavsky, YfParams};

/// One concrete denoising algorithm with all parameters fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum DenoiserSpec {
    /// Pass the noisy image through.
    Identity,
    /// Replace every pixel with the global mean of the noisy image.
    GlobalMean,
    /// Box filter with the given halfwidth.
    Box { halfwidth: usize },
    /// Yaroslavsky/SUSAN neighborhood filter.
    Yaroslavsky { params: YfParams },
    /// Nonlocal means.
    Nlm { params: NlmParams },
    /// Haar hard thresholding at the universal threshold for `sigma`.
    Wavelet { sigma: f64 },
}

impl DenoiserSpec {
    /// Whether `apply` must be given the clean image.
    pub fn needs_clean(&self) -> bool {
        match self {
            DenoiserSpec::Yaroslavsky { params } => params.oracle,
            DenoiserSpec::Nlm { params } => params.oracle != OracleLevel::None,
            _ => false,
        }
    }

    /// Runs the denoiser.
    pub fn apply(&self, noisy: &ImageGrid, clean: Option<&ImageGrid>) -> Result<ImageGrid> {
        match self {
            DenoiserSpec::Identity => Ok(noisy.clone()),
            DenoiserSpec::GlobalMean => {
                let mean = noisy.mean();
                Ok(ImageGrid::from_fn(noisy.n(), |_, _| mean))
            }
            DenoiserSpec::Box { halfwidth } => box_filter_fast(noisy, *halfwidth),
            DenoiserSpec::Yaroslavsky { params } => yaroslavsky(noisy, clean, params),
            DenoiserSpec::Nlm { params } => nlm_denoise(noisy, clean, params),
            DenoiserSpec::Wavelet { sigma } => wavelet_denoise(noisy, *sigma),
        }
    }

    /// Short human-readable parameter description.
    pub fn describe(&self) -> String {
        match self {
            DenoiserSpec::Identity => "identity".into(),
            DenoiserSpec::GlobalMean => "global mean".into(),
            DenoiserSpec::Box { halfwidth } => format!("box halfwidth={halfwidth}"),
            DenoiserSpec::Yaroslavsky { params } => format!(
                "yf delta={} tau={}{}",
                params.delta,
                params.tau,
                if params.oracle { " oracle" } else { "" }
            ),
            DenoiserSpec::Nlm { params } => format!(
                "nlm delta={} t={:.4} {:?} {:?}",
                params.delta, params.t, params.weight_kind, params.oracle
            ),
            DenoiserSpec::Wavelet { sigma } => format!("haar universal sigma={sigma}"),
        }
    }
}

/// A per-size rule for instantiating a denoiser in rate sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DenoiserFamily {
    Identity,
    GlobalMean,
    /// Box filter with the risk-minimizing halfwidth found by grid search
    /// over `1..=ceil(2 n^(1/3))` against the clean image.
    BoxOracle,
    /// Box filter at a fixed halfwidth.
    BoxFixed { halfwidth: usize },
    /// Yaroslavsky filter with `delta ~ n^(1/3)` and `tau = sigma`;
    /// the oracle flag selects the semi-oracle reference value.
    Yf { oracle: bool },
    /// Yaroslavsky filter with size-independent parameters.
    YfFixed {
        delta: usize,
        tau: f64,
        oracle: bool,
    },
    /// Nonlocal means under the standard parameter rule.
    Nlm {
        epsilon: f64,
        oracle: OracleLevel,
    },
    /// Nonlocal means with tapered weights under its parameter rule.
    NlmTapered,
    /// Haar hard thresholding at the universal threshold.
    Wavelet,
}

impl DenoiserFamily {
    /// Stable tag used in CSV output and fit grouping.
    pub fn tag(&self) -> String {
        match self {
            DenoiserFamily::Identity => "identity".into(),
            DenoiserFamily::GlobalMean => "global_mean".into(),
            DenoiserFamily::BoxOracle => "box_oracle".into(),
            DenoiserFamily::BoxFixed { halfwidth } => format!("box{halfwidth}"),
            DenoiserFamily::Yf { oracle: false } => "yf".into(),
            DenoiserFamily::Yf { oracle: true } => "syf".into(),
            DenoiserFamily::YfFixed { oracle: false, .. } => "yf_fixed".into(),
            DenoiserFamily::YfFixed { oracle: true, .. } => "syf_fixed".into(),
            DenoiserFamily::Nlm {
                oracle: OracleLevel::None,
                ..
            } => "nlm".into(),
            DenoiserFamily::Nlm {
                oracle: OracleLevel::Semi,
                ..
            } => "snlm".into(),
            DenoiserFamily::Nlm {
                oracle: OracleLevel::Full,
                ..
            } => "fnlm".into(),
            DenoiserFamily::NlmTapered => "nlm_tapered".into(),
            DenoiserFamily::Wavelet => "wavelet".into(),
        }
    }

    /// Theoretical risk-decay exponent used as the CSV reference slope:
    /// -2/3 for the linear and neighborhood filters, -1 for nonlocal means
    /// and wavelet thresholding, 0 for the trivial estimators.
    pub fn slope_ref(&self) -> f64 {
        match self {
            DenoiserFamily::Identity | DenoiserFamily::GlobalMean => 0.0,
            DenoiserFamily::BoxOracle
            | DenoiserFamily::BoxFixed { .. }
            | DenoiserFamily::Yf { .. }
            | DenoiserFamily::YfFixed { .. } => -2.0 / 3.0,
            DenoiserFamily::Nlm { .. }
            | DenoiserFamily::NlmTapered
            | DenoiserFamily::Wavelet => -1.0,
        }
    }

    /// Whether sweeps must run the halfwidth grid search at each size.
    pub fn is_box_oracle(&self) -> bool {
        matches!(self, DenoiserFamily::BoxOracle)
    }

    /// Instantiates the family at grid size `n` and noise level `sigma`.
    /// `BoxOracle` has no closed-form instantiation; sweeps special-case it.
    pub fn instantiate(&self, n: usize, sigma: f64) -> Result<DenoiserSpec> {
        match self {
            DenoiserFamily::Identity => Ok(DenoiserSpec::Identity),
            DenoiserFamily::GlobalMean => Ok(DenoiserSpec::GlobalMean),
            DenoiserFamily::BoxOracle => Err(domain(
                "box_oracle has no fixed instantiation; use the sweep's grid search",
            )),
            DenoiserFamily::BoxFixed { halfwidth } => {
                if 2 * halfwidth + 1 > n {
                    return Err(Error::KernelTooLarge {
                        halfwidth: *halfwidth,
                        n,
                    });
                }
                Ok(DenoiserSpec::Box {
                    halfwidth: *halfwidth,
                })
            }
            DenoiserFamily::Yf { oracle } => {
                let delta = ((n as f64).powf(1.0 / 3.0).round() as usize).max(1);
                Ok(DenoiserSpec::Yaroslavsky {
                    params: YfParams {
                        delta,
                        tau: sigma,
                        oracle: *oracle,
                    },
                })
            }
            DenoiserFamily::YfFixed { delta, tau, oracle } => {
                if 2 * delta + 1 > n {
                    return Err(Error::DeltaTooLarge { delta: *delta, n });
                }
                Ok(DenoiserSpec::Yaroslavsky {
                    params: YfParams {
                        delta: *delta,
                        tau: *tau,
                        oracle: *oracle,
                    },
                })
            }
            DenoiserFamily::Nlm { epsilon, oracle } => {
                let mut params = NlmParams::defaults(n, *epsilon, sigma);
                params.oracle = *oracle;
                Ok(DenoiserSpec::Nlm { params })
            }
            DenoiserFamily::NlmTapered => Ok(DenoiserSpec::Nlm {
                params: NlmParams::tapered_defaults(n, sigma),
            }),
            DenoiserFamily::Wavelet => {
                if !n.is_power_of_two() {
                    return Err(Error::NotPowerOfTwo { n });
                }
                Ok(DenoiserSpec::Wavelet { sigma })
            }
        }
    }

    /// The halfwidth grid searched by the box oracle at size `n`.
    pub fn box_halfwidth_grid(n: usize) -> Vec<usize> {
        let top = (2.0 * (n as f64).powf(1.0 / 3.0)).ceil() as usize;
        let max_fit = (n - 1) / 2;
        (1..=top.min(max_fit)).collect()
    }
}
