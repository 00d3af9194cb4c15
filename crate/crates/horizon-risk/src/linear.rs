//! Periodic linear convolution denoisers and their spectral diagnostics.
//!
//! Convolution wraps at the image boundary, so spatial filtering agrees
//! with pointwise multiplication in the DFT domain. The DFT convention
//! throughout is `X(k1,k2) = (1/n) sum x * exp(-j 2 pi (k1 l1 + k2 l2)/n)`,
//! under which the closed-form transform of the half-plane image and the
//! optimal single-row response have the forms implemented below.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;

/// A square convolution kernel with unit weight sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    halfwidth: usize,
    weights: Vec<f64>,
    symmetric: bool,
}

impl Kernel {
    /// Validates that the weights sum to 1 (within 1e-12) and records
    /// whether the kernel is symmetric in each axis.
    pub fn new(halfwidth: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * halfwidth + 1;
        if weights.len() != side * side {
            return Err(domain(format!(
                "kernel needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(domain(format!("kernel weights sum to {sum}, expected 1")));
        }
        let mut kernel = Kernel {
            halfwidth,
            weights,
            symmetric: false,
        };
        kernel.symmetric = kernel.detect_symmetry();
        Ok(kernel)
    }

    /// The uniform running-average kernel.
    pub fn box_filter(halfwidth: usize) -> Kernel {
        let side = 2 * halfwidth + 1;
        let w = 1.0 / (side * side) as f64;
        Kernel {
            halfwidth,
            weights: vec![w; side * side],
            symmetric: true,
        }
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Weight at offset `(m, l)`, both in `[-halfwidth, halfwidth]`.
    #[inline]
    pub fn get(&self, m: isize, l: isize) -> f64 {
        let side = (2 * self.halfwidth + 1) as isize;
        let hw = self.halfwidth as isize;
        self.weights[((l + hw) * side + (m + hw)) as usize]
    }

    /// The kernel rotated a quarter turn: `g'(m, l) = g(l, -m)`.
    pub fn rotated_quarter(&self) -> Kernel {
        let hw = self.halfwidth as isize;
        let side = 2 * self.halfwidth + 1;
        let mut weights = vec![0.0; side * side];
        for l in -hw..=hw {
            for m in -hw..=hw {
                weights[((l + hw) as usize) * side + (m + hw) as usize] = self.get(l, -m);
            }
        }
        Kernel {
            halfwidth: self.halfwidth,
            weights,
            symmetric: self.symmetric,
        }
    }

    fn detect_symmetry(&self) -> bool {
        let hw = self.halfwidth as isize;
        for l in -hw..=hw {
            for m in -hw..=hw {
                let w = self.get(m, l);
                if (w - self.get(-m, l)).abs() > 1e-12 || (w - self.get(m, -l)).abs() > 1e-12 {
                    return false;
                }
            }
        }
        true
    }
}

/// Cyclic convolution by direct spatial summation:
/// `out(i,j) = sum_{m,l} g(m,l) y((i-m) mod n, (j-l) mod n)`.
pub fn convolve_periodic(image: &ImageGrid, kernel: &Kernel) -> Result<ImageGrid> {
    let n = image.n();
    let hw = kernel.halfwidth;
    if 2 * hw + 1 > n {
        return Err(Error::KernelTooLarge { halfwidth: hw, n });
    }
    let hwi = hw as isize;
    let out = ImageGrid::from_fn(n, |i, j| {
        let mut acc = 0.0;
        for l in -hwi..=hwi {
            for m in -hwi..=hwi {
                acc += kernel.get(m, l) * image.get_wrapped(i as isize - m, j as isize - l);
            }
        }
        acc
    });
    Ok(out)
}

/// Box filtering through separable periodic window sums; equal to
/// `convolve_periodic` with `Kernel::box_filter(halfwidth)` but `O(n^2 k)`.
pub fn box_filter_fast(image: &ImageGrid, halfwidth: usize) -> Result<ImageGrid> {
    let n = image.n();
    if 2 * halfwidth + 1 > n {
        return Err(Error::KernelTooLarge {
            halfwidth,
            n,
        });
    }
    let hwi = halfwidth as isize;
    let side = (2 * halfwidth + 1) as f64;
    // horizontal window sums
    let mut tmp = ImageGrid::zeros(n);
    for j in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for m in -hwi..=hwi {
                acc += image.get_wrapped(i as isize + m, j as isize);
            }
            tmp.set(i, j, acc);
        }
    }
    // vertical window sums of the horizontal sums
    let out = ImageGrid::from_fn(n, |i, j| {
        let mut acc = 0.0;
        for l in -hwi..=hwi {
            acc += tmp.get_wrapped(i as isize, j as isize + l);
        }
        acc / (side * side)
    });
    Ok(out)
}

/// A sampled frequency-domain object over DFT indices `(k1, k2)`.
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    n: usize,
    values: Vec<Complex<f64>>,
}

impl FrequencyResponse {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k1: usize, k2: usize) -> Complex<f64> {
        self.values[k2 * self.n + k1]
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    /// Squared Frobenius norm `sum |V(k1,k2)|^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Largest violation of `V(k1,k2) = conj(V(-k1,-k2))`; zero for
    /// transforms of real images.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for k2 in 0..n {
            for k1 in 0..n {
                let v = self.get(k1, k2);
                let w = self.get((n - k1) % n, (n - k2) % n).conj();
                worst = worst.max((v - w).norm());
            }
        }
        worst
    }
}

fn fft2_unnormalized(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // rows (transform over the column index k1)
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    // columns
    let mut col = vec![Complex::default(); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
}

/// The two-dimensional DFT of an image in the `1/n` normalization.
pub fn dft2(image: &ImageGrid) -> FrequencyResponse {
    let n = image.n();
    let mut data: Vec<Complex<f64>> = image
        .data()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft2_unnormalized(&mut data, n, false);
    let scale = 1.0 / n as f64;
    for v in &mut data {
        *v *= scale;
    }
    FrequencyResponse { n, values: data }
}

/// Cyclic convolution evaluated in the DFT domain; the spectral route the
/// spatial implementation is validated against.
pub fn convolve_via_dft(image: &ImageGrid, kernel: &Kernel) -> Result<ImageGrid> {
    let n = image.n();
    let hw = kernel.halfwidth as isize;
    if 2 * kernel.halfwidth + 1 > n {
        return Err(Error::KernelTooLarge {
            halfwidth: kernel.halfwidth,
            n,
        });
    }
    let mut img: Vec<Complex<f64>> = image
        .data()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    let mut ker = vec![Complex::default(); n * n];
    for l in -hw..=hw {
        for m in -hw..=hw {
            let i = (m.rem_euclid(n as isize)) as usize;
            let j = (l.rem_euclid(n as isize)) as usize;
            ker[j * n + i] += Complex::new(kernel.get(m, l), 0.0);
        }
    }
    fft2_unnormalized(&mut img, n, false);
    fft2_unnormalized(&mut ker, n, false);
    for (a, b) in img.iter_mut().zip(&ker) {
        *a *= b;
    }
    fft2_unnormalized(&mut img, n, true);
    let scale = 1.0 / (n * n) as f64;
    let data = img.iter().map(|v| v.re * scale).collect();
    ImageGrid::from_vec(n, data)
}

/// Closed-form DFT of the half-plane image (constant contour 1/2, `n`
/// even): zero off the `k1 = 0` column, and
/// `(1 - exp(-j pi k2)) / (1 - exp(-j 2 pi k2 / n))` on it.
pub fn halfplane_dft(n: usize) -> Result<FrequencyResponse> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::OddN { n });
    }
    let mut values = vec![Complex::default(); n * n];
    for k2 in 0..n {
        let v = if k2 == 0 {
            Complex::new(n as f64 / 2.0, 0.0)
        } else {
            let num = Complex::new(1.0, 0.0)
                - Complex::from_polar(1.0, -std::f64::consts::PI * k2 as f64);
            let den = Complex::new(1.0, 0.0)
                - Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * k2 as f64 / n as f64);
            num / den
        };
        values[k2 * n] = v;
    }
    Ok(FrequencyResponse { n, values })
}

/// The risk-minimizing response on the `k1 = 0` row for the half-plane
/// image: 1 at DC, `1 / (1 + 4 pi^4 sigma^2 k2^3 / n^2)` at odd `k2`, and 0
/// at even `k2 > 0` (where the image spectrum vanishes).
pub fn optimal_row_response(n: usize, sigma: f64) -> Vec<f64> {
    let four_pi4 = 4.0 * std::f64::consts::PI.powi(4);
    (0..n)
        .map(|k2| {
            if k2 == 0 {
                1.0
            } else if k2 % 2 == 0 {
                0.0
            } else {
                let k = k2 as f64;
                1.0 / (1.0 + four_pi4 * sigma * sigma * k * k * k / (n as f64 * n as f64))
            }
        })
        .collect()
}

/// Leading term of the squared-bias floor of any admissible linear filter
/// on the half-plane image:
/// `(4 pi^4 sigma^2 / (1 + 4 pi^4 sigma^2))^2 * n^(-2/3) / 40`.
pub fn linear_bias_floor(n: usize, sigma: f64) -> f64 {
    let four_pi4 = 4.0 * std::f64::consts::PI.powi(4);
    let s2 = sigma * sigma;
    let factor = four_pi4 * s2 / (1.0 + four_pi4 * s2);
    factor * factor * (n as f64).powf(-2.0 / 3.0) / 40.0
}

/// Continuous-frequency response of a kernel sampled on the `n x n` DFT
/// grid (frequencies `2 pi k / n` mapped to `(-pi, pi]`).
pub fn kernel_response(kernel: &Kernel, n: usize) -> Vec<Complex<f64>> {
    let hw = kernel.halfwidth as isize;
    let mut values = vec![Complex::default(); n * n];
    for k2 in 0..n {
        let w2 = angular_frequency(k2, n);
        for k1 in 0..n {
            let w1 = angular_frequency(k1, n);
            let mut acc = Complex::default();
            for l in -hw..=hw {
                for m in -hw..=hw {
                    acc += Complex::from_polar(
                        kernel.get(m, l),
                        -(w1 * m as f64 + w2 * l as f64),
                    );
                }
            }
            values[k2 * n + k1] = acc;
        }
    }
    values
}

fn angular_frequency(k: usize, n: usize) -> f64 {
    let signed = if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    };
    2.0 * std::f64::consts::PI * signed as f64 / n as f64
}

/// How far the sampled response is from being a function of radial
/// frequency alone: the largest deviation from the mean over rings of equal
/// radius, binned at resolution `2 pi / n`. Zero for perfectly isotropic
/// responses.
pub fn isotropy_deviation(kernel: &Kernel, n: usize) -> f64 {
    let values = kernel_response(kernel, n);
    let bin_width = 2.0 * std::f64::consts::PI / n as f64;
    let mut sums: Vec<(Complex<f64>, usize)> = vec![(Complex::default(), 0); 2 * n + 2];
    let mut bins = vec![0usize; n * n];
    for k2 in 0..n {
        let w2 = angular_frequency(k2, n);
        for k1 in 0..n {
            let w1 = angular_frequency(k1, n);
            let r = (w1 * w1 + w2 * w2).sqrt();
            let bin = (r / bin_width).round() as usize;
            bins[k2 * n + k1] = bin;
            sums[bin].0 += values[k2 * n + k1];
            sums[bin].1 += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for (idx, v) in values.iter().enumerate() {
        let (total, count) = sums[bins[idx]];
        let mean = total / count as f64;
        worst = worst.max((v - mean).norm());
    }
    worst
}

/// Largest gradient magnitude of the sampled kernel response; a validator
/// for the smooth-response hypothesis with a caller-supplied bound.
pub fn response_gradient_max(kernel: &Kernel, n: usize) -> f64 {
    let hw = kernel.halfwidth as isize;
    let mut worst: f64 = 0.0;
    for k2 in 0..n {
        let w2 = angular_frequency(k2, n);
        for k1 in 0..n {
            let w1 = angular_frequency(k1, n);
            let mut d1 = Complex::<f64>::default();
            let mut d2 = Complex::<f64>::default();
            for l in -hw..=hw {
                for m in -hw..=hw {
                    let e = Complex::from_polar(
                        kernel.get(m, l),
                        -(w1 * m as f64 + w2 * l as f64),
                    );
                    d1 += e * Complex::new(0.0, -(m as f64));
                    d2 += e * Complex::new(0.0, -(l as f64));
                }
            }
            worst = worst.max((d1.norm_sqr() + d2.norm_sqr()).sqrt());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::EdgeContour;
    use crate::horizon::render;
    use crate::noise::{add_noise, NoiseSpec};

    #[test]
    fn box_kernel_weights() {
        let k0 = Kernel::box_filter(0);
        assert_eq!(k0.get(0, 0), 1.0);
        let k1 = Kernel::box_filter(1);
        assert!((k1.get(0, 0) - 1.0 / 9.0).abs() < 1e-15);
        let k2 = Kernel::box_filter(2);
        let sum: f64 = (0..25).map(|_| 0.04).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((k2.get(2, -2) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn identity_kernel_is_identity() {
        let img = ImageGrid::from_fn(8, |i, j| (i * 3 + j) as f64 * 0.1);
        let out = convolve_periodic(&img, &Kernel::box_filter(0)).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn unit_sum_kernel_preserves_constants() {
        let img = ImageGrid::from_fn(8, |_, _| 0.37);
        let out = convolve_periodic(&img, &Kernel::box_filter(1)).unwrap();
        for v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_spreads_cyclically() {
        let mut img = ImageGrid::zeros(4);
        img.set(0, 0, 1.0);
        let out = convolve_periodic(&img, &Kernel::box_filter(1)).unwrap();
        for j in 0..4usize {
            for i in 0..4usize {
                let near = |a: usize| a == 0 || a == 1 || a == 3;
                let expect = if near(i) && near(j) { 1.0 / 9.0 } else { 0.0 };
                assert!((out.get(i, j) - expect).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn kernel_too_large_rejected() {
        let img = ImageGrid::zeros(4);
        assert!(matches!(
            convolve_periodic(&img, &Kernel::box_filter(2)),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn spatial_matches_dft_route() {
        let contour = EdgeContour::constant(0.5).unwrap();
        let clean = render(&contour, 16).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::new(0.5, 5, 0).unwrap());
        for hw in [1usize, 2, 3] {
            let k = Kernel::box_filter(hw);
            let a = convolve_periodic(&noisy, &k).unwrap();
            let b = convolve_via_dft(&noisy, &k).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fast_box_equals_direct_box() {
        let img = ImageGrid::from_fn(12, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0);
        for hw in [1usize, 2, 3] {
            let a = box_filter_fast(&img, hw).unwrap();
            let b = convolve_periodic(&img, &Kernel::box_filter(hw)).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halfplane_dft_matches_direct_transform() {
        for n in [4usize, 8, 16] {
            let closed = halfplane_dft(n).unwrap();
            let grid = render(&EdgeContour::constant(0.5).unwrap(), n).unwrap();
            let direct = dft2(&grid);
            for k2 in 0..n {
                for k1 in 0..n {
                    let d = (closed.get(k1, k2) - direct.get(k1, k2)).norm();
                    assert!(d < 1e-8, "n {n} k ({k1},{k2}): {d}");
                }
            }
        }
        assert!(matches!(halfplane_dft(5), Err(Error::OddN { .. })));
    }

    #[test]
    fn halfplane_dft_examples() {
        let fr = halfplane_dft(4).unwrap();
        for k2 in 0..4 {
            assert_eq!(fr.get(1, k2).norm(), 0.0);
        }
        assert!(fr.get(0, 2).norm() < 1e-15);
        assert!((fr.get(0, 1).norm() - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn optimal_row_response_examples() {
        let g = optimal_row_response(64, 1.0);
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 0.9131368812569678).abs() < 1e-12);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn bias_floor_examples() {
        assert!((linear_bias_floor(64, 1.0) - 1.554510472134953e-3).abs() < 1e-12);
        // n^{-2/3} scaling: value(512) = value(64) / 4
        let r = linear_bias_floor(64, 1.0) / linear_bias_floor(512, 1.0);
        assert!((r - 4.0).abs() < 1e-10);
        // prefactor tends to 1 from below as sigma grows
        let big = linear_bias_floor(64, 1e6);
        assert!((big - 0.0625 / 40.0).abs() < 1e-8);
    }

    #[test]
    fn isotropy_of_identity_and_box() {
        assert_eq!(isotropy_deviation(&Kernel::box_filter(0), 16), 0.0);
        assert!(isotropy_deviation(&Kernel::box_filter(1), 16) > 1e-3);
    }

    #[test]
    fn isotropy_invariant_under_quarter_turn() {
        // an asymmetric kernel, still unit sum
        let mut w = vec![0.0; 9];
        w[0] = 0.4;
        w[4] = 0.3;
        w[7] = 0.2;
        w[2] = 0.1;
        let k = Kernel::new(1, w).unwrap();
        let a = isotropy_deviation(&k, 12);
        let b = isotropy_deviation(&k.rotated_quarter(), 12);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gradient_validator_is_finite_and_positive() {
        let g = response_gradient_max(&Kernel::box_filter(1), 16);
        assert!(g.is_finite() && g > 0.0);
        // identity has flat response
        assert!(response_gradient_max(&Kernel::box_filter(0), 16) < 1e-12);
    }

    #[test]
    fn risk_identity_between_domains() {
        // On a fixed noise sample, the pixel-domain squared error equals
        // the DFT-domain Frobenius error under the 1/n normalization.
        let contour = EdgeContour::constant(0.5).unwrap();
        let clean = render(&contour, 16).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::new(0.5, 11, 0).unwrap());
        let est = convolve_periodic(&noisy, &Kernel::box_filter(1)).unwrap();
        let n2 = 16.0 * 16.0;
        let pixel = clean.mse(&est);
        let xf = dft2(&clean);
        let ef = dft2(&est);
        let mut frob = 0.0;
        for (a, b) in xf.values().iter().zip(ef.values()) {
            frob += (a - b).norm_sqr();
        }
        assert!((pixel - frob / n2).abs() < 1e-8);
    }

    #[test]
    fn dft_of_real_image_is_conjugate_symmetric() {
        let img = ImageGrid::from_fn(8, |i, j| ((i * 5 + j * 3) % 7) as f64 / 7.0);
        assert!(dft2(&img).conjugate_symmetry_error() < 1e-10);
    }
}
