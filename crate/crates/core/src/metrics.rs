//! PSNR and SSIM evaluation.

use crate::error::{Error, Result};
use crate::linalg::ImageMatrix;

#[derive(Debug, Clone, Copy)]
pub struct MetricConfig {
    pub dynamic_range: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { dynamic_range: 1.0, ssim_window: 11, ssim_sigma: 1.5, k1: 0.01, k2: 0.03 }
    }
}

impl MetricConfig {
    fn validate(&self) -> Result<()> {
        if self.ssim_window < 3 || self.ssim_window % 2 == 0 {
            return Err(Error::Configuration(format!(
                "ssim window must be odd and >= 3, got {}",
                self.ssim_window
            )));
        }
        if self.dynamic_range <= 0.0 || self.ssim_sigma <= 0.0 || self.k1 <= 0.0 || self.k2 <= 0.0 {
            return Err(Error::Configuration(
                "dynamic range, ssim sigma, k1 and k2 must all be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_same_dims(a: &ImageMatrix, b: &ImageMatrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB. Identical images give +inf.
pub fn psnr(a: &ImageMatrix, b: &ImageMatrix, cfg: &MetricConfig) -> Result<f64> {
    check_same_dims(a, b)?;
    cfg.validate()?;
    let n = (a.rows() * a.cols()) as f64;
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (cfg.dynamic_range * cfg.dynamic_range / mse).log10())
}

/// Mean structural similarity over Gaussian-weighted windows, valid positions
/// only. Result is in [-1, 1]; 1 exactly for identical images.
pub fn ssim(a: &ImageMatrix, b: &ImageMatrix, cfg: &MetricConfig) -> Result<f64> {
    check_same_dims(a, b)?;
    cfg.validate()?;
    let w = cfg.ssim_window;
    if a.rows() < w || a.cols() < w {
        return Err(Error::Dimension(format!(
            "image {}x{} smaller than ssim window {w}",
            a.rows(),
            a.cols()
        )));
    }

    let weights = gaussian_window(w, cfg.ssim_sigma);
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);

    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=a.rows() - w {
        for c0 in 0..=a.cols() - w {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for i in 0..w {
                for j in 0..w {
                    let wt = weights[i * w + j];
                    mu_a += wt * a.at(r0 + i, c0 + j);
                    mu_b += wt * b.at(r0 + i, c0 + j);
                }
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..w {
                for j in 0..w {
                    let wt = weights[i * w + j];
                    let da = a.at(r0 + i, c0 + j) - mu_a;
                    let db = b.at(r0 + i, c0 + j) - mu_b;
                    var_a += wt * da * da;
                    var_b += wt * db * db;
                    cov += wt * da * db;
                }
            }
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Normalized 2-D Gaussian weights for one window.
fn gaussian_window(w: usize, sigma: f64) -> Vec<f64> {
    let half = (w / 2) as isize;
    let mut weights = Vec::with_capacity(w * w);
    for i in -half..=half {
        for j in -half..=half {
            let d2 = (i * i + j * j) as f64;
            weights.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = weights.iter().sum();
    for v in &mut weights {
        *v /= sum;
    }
    weights
}
