//! Square pixel grids.

use serde::Serialize;

use crate::error::{Error, Result};

/// An `n`-by-`n` grid of real pixel values.
///
/// `(i, j)` addresses column `i`, row `j`; the value is understood as the
/// average of the underlying image over the cell
/// `[i/n, (i+1)/n) x [j/n, (j+1)/n)`. Storage is row-major in `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageGrid {
    n: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(n: usize) -> Self {
        ImageGrid {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Domain(format!(
                "grid data length {} does not match n = {}",
                data.len(),
                n
            )));
        }
        Ok(ImageGrid { n, data })
    }

    /// Builds a grid by evaluating `f(i, j)` at every pixel.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                data[j * n + i] = f(i, j);
            }
        }
        ImageGrid { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.n + i] = value;
    }

    /// Pixel access with periodic wrapping of possibly-negative indices.
    #[inline]
    pub fn get_wrapped(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        let ii = i.rem_euclid(n) as usize;
        let jj = j.rem_euclid(n) as usize;
        self.data[jj * self.n + ii]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / (self.data.len() as f64)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean squared difference against another grid of the same size.
    pub fn mse(&self, other: &ImageGrid) -> f64 {
        assert_eq!(self.n, other.n, "grid sizes differ");
        let mut acc = 0.0;
        let mut comp = 0.0; // Neumaier compensation
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a - b;
            let term = d * d;
            let t = acc + term;
            comp += if acc.abs() >= term.abs() {
                (acc - t) + term
            } else {
                (term - t) + acc
            };
            acc = t;
        }
        (acc + comp) / (self.data.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_column_then_row() {
        let mut g = ImageGrid::zeros(3);
        g.set(1, 2, 7.0);
        assert_eq!(g.data()[2 * 3 + 1], 7.0);
        assert_eq!(g.get(1, 2), 7.0);
    }

    #[test]
    fn wrapped_access() {
        let g = ImageGrid::from_fn(4, |i, j| (j * 4 + i) as f64);
        assert_eq!(g.get_wrapped(-1, 0), g.get(3, 0));
        assert_eq!(g.get_wrapped(4, -3), g.get(0, 1));
    }

    #[test]
    fn mse_of_shifted_constant() {
        let a = ImageGrid::from_fn(8, |_, _| 1.0);
        let b = ImageGrid::from_fn(8, |_, _| 1.5);
        assert!((a.mse(&b) - 0.25).abs() < 1e-15);
    }
}
