//! Edge contour functions `h : [0,1] -> [0,1]` and their smoothness checks.
//!
//! A contour defines a piecewise-constant image `1{t2 < h(t1)}`. Admissible
//! contours stay away from the image borders and are 1-Lipschitz; each also
//! declares a smoothness order `alpha` and seminorm bound `C` that are
//! verified on a dense sample grid at construction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Contours must keep this distance from 0 and 1 so that neighborhoods of
/// edge pixels stay inside the grid at every tested size.
pub const MARGIN: f64 = 0.1;

/// Number of intervals in the dense validation grid.
const VALIDATION_INTERVALS: usize = 10_000;

/// Number of points in the coarse all-pairs seminorm grid.
const PAIR_GRID_POINTS: usize = 129;

/// Slack for floating-point noise in the sampled checks.
const CHECK_SLACK: f64 = 1e-9;

/// Parametric form of an edge contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContourShape {
    Constant { level: f64 },
    /// `c0 + c1 t + c2 t^2 + ...`
    Polynomial { coeffs: Vec<f64> },
    /// `offset + amplitude * sin(2 pi frequency t)`
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        offset: f64,
    },
}

/// A validated edge contour with its declared smoothness class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeContour {
    shape: ContourShape,
    declared_alpha: f64,
    declared_c: f64,
}

impl EdgeContour {
    /// Builds a contour and runs the sampled admissibility checks: range
    /// within `[MARGIN, 1 - MARGIN]`, Lipschitz ratio at most 1, and the
    /// declared-order seminorm at most `declared_c`.
    pub fn new(shape: ContourShape, declared_alpha: f64, declared_c: f64) -> Result<Self> {
        let params_finite = match &shape {
            ContourShape::Constant { level } => level.is_finite(),
            ContourShape::Polynomial { coeffs } => {
                !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite())
            }
            ContourShape::Sinusoid {
                amplitude,
                frequency,
                offset,
            } => amplitude.is_finite() && frequency.is_finite() && offset.is_finite(),
        };
        if !params_finite {
            return Err(domain("contour parameters must be finite and non-empty"));
        }
        if !(declared_alpha >= 1.0) {
            return Err(domain("declared alpha must be >= 1"));
        }
        if !(declared_c > 0.0) {
            return Err(domain("declared C must be > 0"));
        }
        let contour = EdgeContour {
            shape,
            declared_alpha,
            declared_c,
        };
        contour.check_range()?;
        contour.check_lipschitz()?;
        contour.check_hoelder()?;
        Ok(contour)
    }

    /// Builds a contour without any admissibility checks. Useful for
    /// experiments with contours that intentionally leave the margin band.
    pub fn new_unchecked(shape: ContourShape, declared_alpha: f64, declared_c: f64) -> Self {
        EdgeContour {
            shape,
            declared_alpha,
            declared_c,
        }
    }

    /// Validated constant contour `h(t) = level`.
    pub fn constant(level: f64) -> Result<Self> {
        EdgeContour::new(ContourShape::Constant { level }, 2.0, 1.0)
    }

    /// Validated sinusoid `offset + amplitude sin(2 pi frequency t)`.
    pub fn sinusoid(
        amplitude: f64,
        frequency: f64,
        offset: f64,
        declared_alpha: f64,
        declared_c: f64,
    ) -> Result<Self> {
        EdgeContour::new(
            ContourShape::Sinusoid {
                amplitude,
                frequency,
                offset,
            },
            declared_alpha,
            declared_c,
        )
    }

    /// Validated polynomial with coefficients in increasing degree order.
    pub fn polynomial(coeffs: Vec<f64>, declared_alpha: f64, declared_c: f64) -> Result<Self> {
        EdgeContour::new(ContourShape::Polynomial { coeffs }, declared_alpha, declared_c)
    }

    pub fn shape(&self) -> &ContourShape {
        &self.shape
    }

    pub fn declared_alpha(&self) -> f64 {
        self.declared_alpha
    }

    pub fn declared_c(&self) -> f64 {
        self.declared_c
    }

    /// Evaluates `h(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match &self.shape {
            ContourShape::Constant { level } => *level,
            ContourShape::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            ContourShape::Sinusoid {
                amplitude,
                frequency,
                offset,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin(),
        }
    }

    /// Evaluates the `order`-th derivative `h^(order)(t)` in closed form.
    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        if order == 0 {
            return self.value(t);
        }
        match &self.shape {
            ContourShape::Constant { .. } => 0.0,
            ContourShape::Polynomial { coeffs } => {
                // Differentiate the coefficient list `order` times.
                let m = order as usize;
                if coeffs.len() <= m {
                    return 0.0;
                }
                let mut acc = 0.0;
                for k in (m..coeffs.len()).rev() {
                    let mut fac = 1.0;
                    for r in 0..m {
                        fac *= (k - r) as f64;
                    }
                    acc = acc * t + coeffs[k] * fac;
                }
                acc
            }
            ContourShape::Sinusoid {
                amplitude,
                frequency,
                ..
            } => {
                let w = 2.0 * std::f64::consts::PI * frequency;
                amplitude
                    * w.powi(order as i32)
                    * (w * t + order as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
        }
    }

    /// A rigorous upper bound on `sup |h'(t)|` over `[0, 1]`.
    pub fn derivative_sup_bound(&self) -> f64 {
        match &self.shape {
            ContourShape::Constant { .. } => 0.0,
            ContourShape::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c.abs())
                .sum(),
            ContourShape::Sinusoid {
                amplitude,
                frequency,
                ..
            } => amplitude.abs() * 2.0 * std::f64::consts::PI * frequency.abs(),
        }
    }

    /// A rigorous enclosure of the range of `h` over `[a, b]`: the value
    /// interval at the endpoints widened by the derivative bound times half
    /// the interval length.
    pub fn range_bound(&self, a: f64, b: f64) -> (f64, f64) {
        let ha = self.value(a);
        let hb = self.value(b);
        let slack = self.derivative_sup_bound() * 0.5 * (b - a);
        (ha.min(hb) - slack, ha.max(hb) + slack)
    }

    fn check_range(&self) -> Result<()> {
        let lo = MARGIN;
        let hi = 1.0 - MARGIN;
        for s in 0..=VALIDATION_INTERVALS {
            let t = s as f64 / VALIDATION_INTERVALS as f64;
            let v = self.value(t);
            if !(lo - CHECK_SLACK..=hi + CHECK_SLACK).contains(&v) {
                return Err(Error::ContourOutOfRange {
                    t,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    fn check_lipschitz(&self) -> Result<()> {
        let step = 1.0 / VALIDATION_INTERVALS as f64;
        let mut prev = self.value(0.0);
        let mut worst: f64 = 0.0;
        for s in 1..=VALIDATION_INTERVALS {
            let t = s as f64 * step;
            let v = self.value(t);
            worst = worst.max((v - prev).abs() / step);
            prev = v;
        }
        if worst > 1.0 + CHECK_SLACK {
            return Err(Error::HoelderViolation {
                which: "Lipschitz ratio of h",
                observed: worst,
                declared: 1.0,
            });
        }
        Ok(())
    }

    fn check_hoelder(&self) -> Result<()> {
        let k = self.declared_alpha.floor() as u32;
        let exponent = self.declared_alpha - k as f64;
        let points: Vec<f64> = (0..PAIR_GRID_POINTS)
            .map(|s| s as f64 / (PAIR_GRID_POINTS - 1) as f64)
            .collect();
        let values: Vec<f64> = points.iter().map(|&t| self.derivative(k, t)).collect();
        let mut worst: f64 = 0.0;
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                let dt = points[b] - points[a];
                let ratio = (values[b] - values[a]).abs() / dt.powf(exponent);
                worst = worst.max(ratio);
            }
        }
        if worst > self.declared_c + CHECK_SLACK {
            return Err(Error::HoelderViolation {
                which: "declared-order seminorm",
                observed: worst,
                declared: self.declared_c,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_half_passes() {
        let c = EdgeContour::constant(0.5).unwrap();
        assert_eq!(c.value(0.3), 0.5);
        assert_eq!(c.derivative(1, 0.3), 0.0);
    }

    #[test]
    fn small_sinusoid_passes() {
        // max |h'| = 0.05 * 2 pi = 0.1 pi < 1ced by the Lipschitz check.
        let c = EdgeContour::sinusoid(0.05, 1.0, 0.5, 2.0, 4.0).unwrap();
        let max_slope = 0.05 * 2.0 * std::f64::consts::PI;
        assert!(max_slope < 1.0);
        assert!((c.value(0.25) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn large_sinusoid_leaves_range() {
        let err = EdgeContour::sinusoid(0.5, 4.0, 0.5, 2.0, 400.0).unwrap_err();
        assert!(matches!(err, Error::ContourOutOfRange { .. }));
    }

    #[test]
    fn steep_polynomial_fails_lipschitz() {
        // h(t) = 0.2 + 1.2 t - 0.6 t^2 stays in [0.2, 0.8] but h'(0) = 1.2.
        let err = EdgeContour::polynomial(vec![0.2, 1.2, -0.6], 2.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::HoelderViolation { .. }));
    }

    #[test]
    fn undeclared_oscillation_fails_seminorm() {
        // Oscillation of h'' is 2 * 0.05 * (2 pi)^2 ~ 3.95, above C = 1.
        let err = EdgeContour::sinusoid(0.05, 1.0, 0.5, 2.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::HoelderViolation {
                which: "declared-order seminorm",
                ..
            }
        ));
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let c = EdgeContour::new_unchecked(
            ContourShape::Polynomial {
                coeffs: vec![0.5, 0.1, -0.2, 0.05],
            },
            2.0,
            4.0,
        );
        // h(t) = 0.5 + 0.1 t - 0.2 t^2 + 0.05 t^3 at t = 0.4
        let t: f64 = 0.4;
        assert!((c.value(t) - (0.5 + 0.1 * t - 0.2 * t * t + 0.05 * t * t * t)).abs() < 1e-15);
        assert!((c.derivative(1, t) - (0.1 - 0.4 * t + 0.15 * t * t)).abs() < 1e-15);
        assert!((c.derivative(2, t) - (-0.4 + 0.3 * t)).abs() < 1e-15);
        assert_eq!(c.derivative(4, t), 0.0);
    }

    #[test]
    fn range_bound_encloses_samples() {
        let c = EdgeContour::sinusoid(0.05, 2.0, 0.5, 2.0, 16.0).unwrap();
        let (lo, hi) = c.range_bound(0.1, 0.35);
        for s in 0..=100 {
            let t = 0.1 + 0.25 * s as f64 / 100.0;
            let v = c.value(t);
            assert!(v >= lo && v <= hi);
        }
    }
}
