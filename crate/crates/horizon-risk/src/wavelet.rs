//! Separable orthonormal 2D Haar transform with hard thresholding.
//!
//! The full decomposition runs the pairwise step `(a, b) -> ((a+b)/sqrt2,
//! (a-b)/sqrt2)` on rows then columns of the shrinking approximation block
//! (standard Mallat layout), so the transform is orthonormal and exactly
//! invertible. Denoising kills all detail coefficients at or below the
//! universal threshold `sigma sqrt(2 ln n^2)`; the single coarsest
//! approximation coefficient is exempt so the image mean survives any
//! threshold.

use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;

/// Wavelet coefficients of an `n x n` image, `n` a power of two, in
/// standard Mallat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    n: usize,
    levels: u32,
    coeffs: Vec<f64>,
}

impl WaveletCoeffs {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coeffs[j * self.n + i]
    }

    /// `l2` norm of all coefficients; equals the image norm (Parseval).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn check_power_of_two(n: usize) -> Result<u32> {
    if n >= 2 && n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::NotPowerOfTwo { n })
    }
}

const SQRT1_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn forward_1d(values: &mut [f64], len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for k in 0..half {
        let a = values[2 * k];
        let b = values[2 * k + 1];
        scratch[k] = (a + b) * SQRT1_2;
        scratch[half + k] = (a - b) * SQRT1_2;
    }
    values[..len].copy_from_slice(&scratch[..len]);
}

fn inverse_1d(values: &mut [f64], len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for k in 0..half {
        let s = values[k];
        let d = values[half + k];
        scratch[2 * k] = (s + d) * SQRT1_2;
        scratch[2 * k + 1] = (s - d) * SQRT1_2;
    }
    values[..len].copy_from_slice(&scratch[..len]);
}

/// Full orthonormal Haar analysis of an image.
pub fn haar2_forward(image: &ImageGrid) -> Result<WaveletCoeffs> {
    let n = image.n();
    let levels = check_power_of_two(n)?;
    let mut coeffs = image.data().to_vec();
    let mut scratch = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut size = n;
    while size >= 2 {
        for j in 0..size {
            forward_1d(&mut coeffs[j * n..j * n + size], size, &mut scratch);
        }
        for i in 0..size {
            for j in 0..size {
                row[j] = coeffs[j * n + i];
            }
            forward_1d(&mut row, size, &mut scratch);
            for j in 0..size {
                coeffs[j * n + i] = row[j];
            }
        }
        size /= 2;
    }
    Ok(WaveletCoeffs { n, levels, coeffs })
}

/// Exact inverse of [`haar2_forward`].
pub fn haar2_inverse(coeffs: &WaveletCoeffs) -> ImageGrid {
    let n = coeffs.n;
    let mut data = coeffs.coeffs.clone();
    let mut scratch = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut size = 2;
    while size <= n {
        for i in 0..size {
            for j in 0..size {
                row[j] = data[j * n + i];
            }
            inverse_1d(&mut row, size, &mut scratch);
            for j in 0..size {
                data[j * n + i] = row[j];
            }
        }
        for j in 0..size {
            inverse_1d(&mut data[j * n..j * n + size], size, &mut scratch);
        }
        size *= 2;
    }
    ImageGrid::from_vec(n, data).expect("coefficient layout matches grid size")
}

/// Kills every detail coefficient with `|c| <= theta`; the coarsest
/// approximation coefficient at (0, 0) is left untouched.
pub fn hard_threshold(coeffs: &WaveletCoeffs, theta: f64) -> Result<WaveletCoeffs> {
    if !(theta >= 0.0) {
        return Err(domain("threshold must be nonnegative"));
    }
    let mut out = coeffs.clone();
    for (idx, c) in out.coeffs.iter_mut().enumerate() {
        if idx == 0 {
            continue;
        }
        if c.abs() <= theta {
            *c = 0.0;
        }
    }
    Ok(out)
}

/// The universal threshold `sigma sqrt(2 ln n^2)` for an `n x n` image.
pub fn universal_threshold(n: usize, sigma: f64) -> f64 {
    sigma * (2.0 * ((n * n) as f64).ln()).sqrt()
}

/// Hard-threshold denoising in the Haar basis at the universal threshold.
pub fn wavelet_denoise(noisy: &ImageGrid, sigma: f64) -> Result<ImageGrid> {
    let coeffs = haar2_forward(noisy)?;
    let kept = hard_threshold(&coeffs, universal_threshold(noisy.n(), sigma))?;
    Ok(haar2_inverse(&kept))
}
