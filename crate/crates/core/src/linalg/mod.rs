//! Dense 2-D/3-D containers, same-size convolution with its adjoint, and a
//! compact one-sided Jacobi SVD. Everything else in the crate builds on this.

mod conv;
mod svd;

pub use conv::{conv2d_backward, conv2d_same, ConvGrads};
pub use svd::{svd, SvdFactors};

use crate::error::{Error, Result};

/// 2-D grayscale intensity grid, row-major, working range [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("image contains non-finite values".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> ImageMatrix {
        ImageMatrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageMatrix {
        ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Maximum absolute entrywise difference; matrices must share a shape.
    pub fn max_abs_diff(&self, other: &ImageMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// 3-D activation volume passed between network layers. Depth-major storage:
/// channel d occupies one contiguous rows*cols block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    rows: usize,
    cols: usize,
    depth: usize,
    data: Vec<f64>,
}

impl FeatureStack {
    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        Self { rows, cols, depth, data: vec![0.0; rows * cols * depth] }
    }

    pub fn from_matrix(m: &ImageMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), depth: 1, data: m.data().to_vec() }
    }

    /// Collapses a depth-1 stack back to a matrix.
    pub fn to_matrix(&self) -> Result<ImageMatrix> {
        if self.depth != 1 {
            return Err(Error::Dimension(format!(
                "expected depth 1, got {}",
                self.depth
            )));
        }
        ImageMatrix::new(self.rows, self.cols, self.data.clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn channel(&self, d: usize) -> &[f64] {
        let plane = self.rows * self.cols;
        &self.data[d * plane..(d + 1) * plane]
    }

    #[inline]
    pub fn channel_mut(&mut self, d: usize) -> &mut [f64] {
        let plane = self.rows * self.cols;
        &mut self.data[d * plane..(d + 1) * plane]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One convolutional filter: height x width x depth weights plus a scalar bias.
/// Weights are stored row-major over (row, col, depth).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub height: usize,
    pub width: usize,
    pub depth: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ConvKernel {
    pub fn new(height: usize, width: usize, depth: usize, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != height * width * depth {
            return Err(Error::Dimension(format!(
                "weight length {} does not match {height}x{width}x{depth}",
                weights.len()
            )));
        }
        Ok(Self { height, width, depth, weights, bias })
    }

    pub fn zeros(height: usize, width: usize, depth: usize) -> Self {
        Self { height, width, depth, weights: vec![0.0; height * width * depth], bias: 0.0 }
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize, d: usize) -> f64 {
        self.weights[(i * self.width + j) * self.depth + d]
    }

    #[inline]
    pub fn weight_mut(&mut self, i: usize, j: usize, d: usize) -> &mut f64 {
        &mut self.weights[(i * self.width + j) * self.depth + d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }
}
