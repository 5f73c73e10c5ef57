//! The two structural priors applied to the network output: a smooth
//! differentiable rank surrogate driven by the singular values, and a
//! variance-of-Laplacian sharpness measure. Both come with hand-derived
//! gradients validated against finite differences.

use crate::error::{Error, Result};
use crate::linalg::{conv2d_same, svd, ConvKernel, FeatureStack, ImageMatrix};

/// Width of the Gaussian that decides how small a singular value must be to
/// count as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSurrogateParams {
    delta: f64,
}

impl RankSurrogateParams {
    pub fn new(delta: f64) -> Result<Self> {
        if delta <= 0.0 || !delta.is_finite() {
            return Err(Error::Configuration(format!(
                "rank surrogate delta must be positive, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// The fixed 3x3 Laplacian stencil: center 4, edge neighbors -1, corners 0.
pub fn laplacian_kernel() -> ConvKernel {
    ConvKernel::new(
        3,
        3,
        1,
        vec![0.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 0.0],
        0.0,
    )
    .unwrap()
}

/// Smooth rank surrogate: R - sum_i exp(-sigma_i^2 / 2 delta^2) with
/// R = min(rows, cols). Lies in [0, R] and approaches the exact rank as the
/// singular values separate from delta.
pub fn smooth_rank(y: &ImageMatrix, params: RankSurrogateParams) -> Result<f64> {
    Ok(smooth_rank_from_sigma(&svd(y)?.sigma, params))
}

/// [`smooth_rank`] evaluated from precomputed singular values.
pub fn smooth_rank_from_sigma(sigma: &[f64], params: RankSurrogateParams) -> f64 {
    let r = sigma.len() as f64;
    let two_d2 = 2.0 * params.delta * params.delta;
    let g: f64 = sigma.iter().map(|s| (-s * s / two_d2).exp()).sum();
    r - g
}

/// Gradient of [`smooth_rank`] w.r.t. the matrix entries:
/// U diag(sigma_i / delta^2 * exp(-sigma_i^2 / 2 delta^2)) Z^T.
pub fn smooth_rank_gradient(y: &ImageMatrix, params: RankSurrogateParams) -> Result<ImageMatrix> {
    Ok(smooth_rank_gradient_from_svd(&svd(y)?, params))
}

/// [`smooth_rank_gradient`] evaluated from a precomputed decomposition.
pub fn smooth_rank_gradient_from_svd(
    f: &crate::linalg::SvdFactors,
    params: RankSurrogateParams,
) -> ImageMatrix {
    let d2 = params.delta * params.delta;
    let coeff: Vec<f64> = f
        .sigma
        .iter()
        .map(|s| s / d2 * (-s * s / (2.0 * d2)).exp())
        .collect();
    ImageMatrix::from_fn(f.u.rows(), f.z.rows(), |r, c| {
        coeff
            .iter()
            .enumerate()
            .map(|(i, k)| k * f.u.at(r, i) * f.z.at(c, i))
            .sum()
    })
}

/// Same-size zero-padded cross-correlation with the 3x3 Laplacian stencil.
pub fn laplacian(y: &ImageMatrix) -> Result<ImageMatrix> {
    if y.rows() < 3 || y.cols() < 3 {
        return Err(Error::Dimension(format!(
            "laplacian needs at least a 3x3 image, got {}x{}",
            y.rows(),
            y.cols()
        )));
    }
    conv2d_same(&FeatureStack::from_matrix(y), &[laplacian_kernel()])?.to_matrix()
}

/// Variance of the Laplacian, sample denominator (pixel count - 1).
/// Higher values indicate a sharper image.
pub fn sharpness(y: &ImageMatrix) -> Result<f64> {
    Ok(sharpness_from_laplacian(&laplacian(y)?))
}

/// [`sharpness`] evaluated from a precomputed Laplacian.
pub fn sharpness_from_laplacian(p: &ImageMatrix) -> f64 {
    let n = (p.rows() * p.cols()) as f64;
    let mean = p.data().iter().sum::<f64>() / n;
    let ss: f64 = p.data().iter().map(|v| (v - mean) * (v - mean)).sum();
    ss / (n - 1.0)
}

/// Gradient of [`sharpness`] w.r.t. the image: the adjoint chain of
/// (Laplacian -> sample variance). dV/dP has entries
/// 2/(n-1) * (p_ij - mean(P)); the Laplacian stencil is flip-symmetric, so its
/// adjoint is the same correlation.
pub fn sharpness_gradient(y: &ImageMatrix) -> Result<ImageMatrix> {
    sharpness_gradient_from_laplacian(&laplacian(y)?)
}

/// [`sharpness_gradient`] evaluated from a precomputed Laplacian.
pub fn sharpness_gradient_from_laplacian(p: &ImageMatrix) -> Result<ImageMatrix> {
    let n = (p.rows() * p.cols()) as f64;
    let mean = p.data().iter().sum::<f64>() / n;
    let dv_dp = p.map(|v| 2.0 / (n - 1.0) * (v - mean));
    laplacian(&dv_dp)
}
