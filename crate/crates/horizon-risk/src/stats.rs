//! Closed-form reference quantities used to cross-check the Monte Carlo
//! machinery: the edge pass probability, the variance of the limiting
//! distance statistic, chi-square tail bounds, and the Gaussian
//! squared-variate moment generating function.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// The limiting probability that a pixel just below the edge passes the
/// patch-distance threshold: `Phi(-1 / (sigma^2 sqrt(2))) / 2`.
pub fn p0_reference(sigma: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    0.5 * normal.cdf(-1.0 / (sigma * sigma * std::f64::consts::SQRT_2))
}

/// Variance of the centered distance statistic at finite patch size:
/// `2 sigma^4 + (8 sigma^2 delta - 2 sigma^4) / (2 delta + 1)^2`.
pub fn g_variance(sigma: f64, delta: usize) -> f64 {
    let s2 = sigma * sigma;
    let side = (2 * delta + 1) as f64;
    2.0 * s2 * s2 + (8.0 * s2 * delta as f64 - 2.0 * s2 * s2) / (side * side)
}

/// Chi-square concentration bounds for the mean of `n` squared standard
/// normals: returns `(upper, lower)` where
/// `P(mean - 1 > t) <= upper = exp(-n/2 (t - ln(1+t)))` and
/// `P(mean - 1 < -t) <= lower = exp(-n/2 (-t - ln(1-t)))`.
///
/// Both exponent arguments are positive on the valid domain, so the bounds
/// are genuine probabilities. The lower bound requires `t` in `(0, 1)`.
pub fn chisq_tail_bounds(n: u64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(domain("chi-square tail bounds need t > 0"));
    }
    if t >= 1.0 {
        return Err(domain("chi-square lower tail bound needs t < 1"));
    }
    let nf = n as f64;
    let upper = (-0.5 * nf * (t - (1.0 + t).ln())).exp();
    let lower = (-0.5 * nf * (-t - (1.0 - t).ln())).exp();
    Ok((upper, lower))
}

/// The upper tail bound alone, valid for every `t > 0`.
pub fn chisq_upper_bound(n: u64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("chi-square tail bounds need t > 0"));
    }
    let nf = n as f64;
    Ok((-0.5 * nf * (t - (1.0 + t).ln())).exp())
}

/// `E exp(lambda Z^2)` for `Z ~ N(0, sigma^2)`, requiring
/// `lambda < 1 / (2 sigma^2)`.
pub fn gaussian_sq_mgf(lambda: f64, sigma: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    if lambda >= 0.5 / s2 {
        return Err(domain(format!(
            "gaussian_sq_mgf diverges for lambda >= 1/(2 sigma^2) = {}",
            0.5 / s2
        )));
    }
    Ok(1.0 / (1.0 - 2.0 * lambda * s2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{context, standard_normal};

    #[test]
    fn p0_at_unit_sigma() {
        // Phi(-1/sqrt(2)) / 2
        assert!((p0_reference(1.0) - 0.11987503054673837).abs() < 1e-12);
    }

    #[test]
    fn g_variance_examples() {
        assert!((g_variance(1.0, 2) - 2.56).abs() < 1e-15);
        // correction vanishes as the patch grows
        assert!((g_variance(1.0, 50_000) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn chisq_bound_examples() {
        let up = chisq_upper_bound(10, 1.0).unwrap();
        assert!((up - 0.21561430397073494).abs() < 1e-12);
        assert!(chisq_tail_bounds(10, 1.0).is_err());
        let (u, l) = chisq_tail_bounds(10, 0.5).unwrap();
        assert!(u < 1.0 && l < 1.0);
        assert!((l - 0.3807029362719836).abs() < 1e-12);
    }

    #[test]
    fn mgf_examples() {
        assert_eq!(gaussian_sq_mgf(0.0, 3.0).unwrap(), 1.0);
        assert!((gaussian_sq_mgf(0.25, 1.0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(gaussian_sq_mgf(0.5, 1.0).is_err());
    }

    #[test]
    fn mgf_matches_monte_carlo() {
        // E exp(lambda Z^2) estimated from 10^6 draws, compared within 4
        // standard errors.
        for &lambda in &[-0.5, 0.1, 0.25] {
            let trials = 1_000_000u64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for k in 0..trials {
                let z = standard_normal(99, context::SCALAR_MC, 0, k);
                let v = (lambda * z * z).exp();
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / trials as f64;
            let var = (sumsq / trials as f64 - mean * mean).max(0.0);
            let se = (var / trials as f64).sqrt();
            let exact = gaussian_sq_mgf(lambda, 1.0).unwrap();
            assert!(
                (mean - exact).abs() < 4.0 * se + 1e-9,
                "lambda {lambda}: {mean} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn chisq_tail_frequencies_respect_bounds() {
        // Empirical tail frequencies never exceed the bound by more than 4
        // standard errors.
        for &n in &[10u64, 50] {
            for &t in &[0.3, 0.5, 1.0] {
                let trials = 100_000u64;
                let mut upper_hits = 0u64;
                let mut lower_hits = 0u64;
                for k in 0..trials {
                    let mut s = 0.0;
                    for e in 0..n {
                        let z = standard_normal(7 + n, context::SCALAR_MC, k, e);
                        s += z * z;
                    }
                    let dev = s / n as f64 - 1.0;
                    if dev > t {
                        upper_hits += 1;
                    }
                    if dev < -t {
                        lower_hits += 1;
                    }
                }
                let tf = trials as f64;
                let upper = chisq_upper_bound(n, t).unwrap();
                let freq = upper_hits as f64 / tf;
                let se = (freq * (1.0 - freq) / tf).sqrt();
                assert!(
                    freq <= upper + 4.0 * se + 1e-9,
                    "n {n} t {t}: freq {freq} bound {upper}"
                );
                if t < 1.0 {
                    let (_, lower) = chisq_tail_bounds(n, t).unwrap();
                    let freq = lower_hits as f64 / tf;
                    let se = (freq * (1.0 - freq) / tf).sqrt();
                    assert!(
                        freq <= lower + 4.0 * se + 1e-9,
                        "n {n} t {t}: lower freq {freq} bound {lower}"
                    );
                }
            }
        }
    }
}
