//! The Yaroslavsky/SUSAN neighborhood filter.
//!
//! Pixels inside a `(2 delta + 1)`-square window are averaged with
//! photometric weights `exp(-(y(m,l) - r)^2 / (2 tau^2))`, where the
//! reference `r` is the noisy center value. The semi-oracle variant reads
//! the reference from the clean image instead, which is the version whose
//! risk the sweep machinery compares against the box filter. The standard
//! variant is the practical algorithm and is included for completeness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YfParams {
    /// Neighborhood half-size.
    pub delta: usize,
    /// Weight bandwidth, > 0.
    pub tau: f64,
    /// Read the reference value from the clean image.
    pub oracle: bool,
}

/// Applies the filter. Neighborhood indices wrap periodically, matching
/// the boundary convention of the other denoisers.
pub fn yaroslavsky(
    noisy: &ImageGrid,
    clean: Option<&ImageGrid>,
    params: &YfParams,
) -> Result<ImageGrid> {
    let n = noisy.n();
    if 2 * params.delta + 1 > n {
        return Err(Error::DeltaTooLarge {
            delta: params.delta,
            n,
        });
    }
    if !(params.tau > 0.0) {
        return Err(domain("tau must be positive"));
    }
    if params.oracle && clean.is_none() {
        return Err(Error::MissingCleanImage);
    }
    if let Some(c) = clean {
        if c.n() != n {
            return Err(domain("clean and noisy grids differ in size"));
        }
    }
    let d = params.delta as isize;
    let inv_two_tau_sq = 1.0 / (2.0 * params.tau * params.tau);
    let mut out = ImageGrid::zeros(n);
    out.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, slot) in row.iter_mut().enumerate() {
                let r = if params.oracle {
                    clean.unwrap().get(i, j)
                } else {
                    noisy.get(i, j)
                };
                let mut num = 0.0;
                let mut den = 0.0;
                for l in -d..=d {
                    for m in -d..=d {
                        let v = noisy.get_wrapped(i as isize + m, j as isize + l);
                        let diff = v - r;
                        let w = (-diff * diff * inv_two_tau_sq).exp();
                        num += w * v;
                        den += w;
                    }
                }
                *slot = num / den;
            }
        });
    Ok(out)
}

/// Expected photometric weight when the clean values of the reference and
/// candidate pixels differ by `gap` and the candidate carries `N(0,
/// sigma^2)` noise:
/// `tau / sqrt(sigma^2 + tau^2) * exp(-gap^2 / (2 (sigma^2 + tau^2)))`.
pub fn yf_weight_mean(sigma: f64, tau: f64, gap: f64) -> f64 {
    let s2t2 = sigma * sigma + tau * tau;
    tau / s2t2.sqrt() * (-gap * gap / (2.0 * s2t2)).exp()
}
