//! LR simulation pipeline: Gaussian blur, decimation, bicubic upscaling,
//! patch extraction, plus synthetic phantoms and PGM file I/O.

mod pgm;
mod phantom;

pub use pgm::{read_pgm, write_pgm};
pub use phantom::synth_phantom;

use crate::error::{Error, Result};
use crate::linalg::ImageMatrix;

/// How a high-resolution image is degraded to simulate the LR input.
#[derive(Debug, Clone, Copy)]
pub struct DegradationSpec {
    pub blur_sigma: f64,
    pub scale: usize,
}

impl DegradationSpec {
    pub fn new(blur_sigma: f64, scale: usize) -> Result<Self> {
        if blur_sigma <= 0.0 || !blur_sigma.is_finite() {
            return Err(Error::Configuration(format!(
                "blur sigma must be positive, got {blur_sigma}"
            )));
        }
        if scale == 0 {
            return Err(Error::Configuration("scale must be >= 1".into()));
        }
        Ok(Self { blur_sigma, scale })
    }
}

/// Aligned (degraded input, ground-truth target) patch pairs.
#[derive(Debug, Clone)]
pub struct PatchSet {
    pub pairs: Vec<(ImageMatrix, ImageMatrix)>,
    /// Images skipped because they were smaller than the patch size.
    pub skipped: usize,
}

/// Reflected index with the edge sample repeated (..2,1,0 | 0,1,2..).
/// Conserves total mass under symmetric kernels.
#[inline]
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -1 - i;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable normalized Gaussian correlation, reflect padding, same size.
/// Kernel radius is ceil(3 sigma).
pub fn gaussian_blur(img: &ImageMatrix, sigma: f64) -> Result<ImageMatrix> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::Configuration(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }

    let horizontal = convolve_rows(img, &kernel, radius);
    Ok(convolve_rows(&horizontal.transpose(), &kernel, radius).transpose())
}

fn convolve_rows(img: &ImageMatrix, kernel: &[f64], radius: isize) -> ImageMatrix {
    ImageMatrix::from_fn(img.rows(), img.cols(), |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| w * img.at(r, reflect(c as isize + k as isize - radius, img.cols())))
            .sum()
    })
}

/// Decimation: keeps every s-th pixel starting at index 0.
pub fn downsample(img: &ImageMatrix, s: usize) -> Result<ImageMatrix> {
    if s == 0 {
        return Err(Error::Configuration("downsample factor must be >= 1".into()));
    }
    if img.rows() % s != 0 || img.cols() % s != 0 {
        return Err(Error::Dimension(format!(
            "image {}x{} not divisible by factor {s}",
            img.rows(),
            img.cols()
        )));
    }
    Ok(ImageMatrix::from_fn(img.rows() / s, img.cols() / s, |r, c| {
        img.at(r * s, c * s)
    }))
}

/// Keys cubic convolution kernel with a = -0.5.
#[inline]
fn keys_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x * x * x - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x * x * x - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic upscaling by an integer factor; reflect boundary. s = 1 is the
/// identity.
pub fn bicubic_upscale(img: &ImageMatrix, s: usize) -> Result<ImageMatrix> {
    if s == 0 {
        return Err(Error::Configuration("upscale factor must be >= 1".into()));
    }
    if s == 1 {
        return Ok(img.clone());
    }
    let horizontal = upscale_rows(img, s);
    Ok(upscale_rows(&horizontal.transpose(), s).transpose())
}

fn upscale_rows(img: &ImageMatrix, s: usize) -> ImageMatrix {
    let out_cols = img.cols() * s;
    ImageMatrix::from_fn(img.rows(), out_cols, |r, c| {
        let src = (c as f64 + 0.5) / s as f64 - 0.5;
        let base = src.floor();
        let frac = src - base;
        let mut acc = 0.0;
        for k in -1..=2isize {
            let w = keys_weight(frac - k as f64);
            if w != 0.0 {
                acc += w * img.at(r, reflect(base as isize + k, img.cols()));
            }
        }
        acc
    })
}

/// Builds the training set: inputs are bicubic-upscaled decimations of the
/// blurred originals, targets are patches of the originals, on an aligned
/// stride grid.
pub fn make_training_pairs(
    hires: &[ImageMatrix],
    spec: &DegradationSpec,
    patch: usize,
    stride: usize,
) -> Result<PatchSet> {
    if patch == 0 || stride == 0 {
        return Err(Error::Configuration("patch and stride must be positive".into()));
    }
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for img in hires {
        if img.rows() < patch || img.cols() < patch {
            skipped += 1;
            continue;
        }
        let blurred = gaussian_blur(img, spec.blur_sigma)?;
        let lr = downsample(&blurred, spec.scale)?;
        let input = bicubic_upscale(&lr, spec.scale)?;
        let mut r0 = 0;
        while r0 + patch <= img.rows() {
            let mut c0 = 0;
            while c0 + patch <= img.cols() {
                let cut = |m: &ImageMatrix| {
                    ImageMatrix::from_fn(patch, patch, |r, c| m.at(r0 + r, c0 + c))
                };
                pairs.push((cut(&input), cut(img)));
                c0 += stride;
            }
            r0 += stride;
        }
    }
    Ok(PatchSet { pairs, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blur_preserves_constants() {
        let img = ImageMatrix::filled(10, 10, 0.7);
        let out = gaussian_blur(&img, 1.3).unwrap();
        for v in out.data() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_of_impulse_is_sampled_gaussian() {
        let mut img = ImageMatrix::zeros(21, 21);
        img.set(10, 10, 1.0);
        let sigma = 1.0;
        let out = gaussian_blur(&img, sigma).unwrap();
        // closed form: normalized separable kernel product
        let radius = 3isize;
        let k1d: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = k1d.iter().sum();
        for di in -radius..=radius {
            for dj in -radius..=radius {
                let expect =
                    k1d[(di + radius) as usize] / sum * k1d[(dj + radius) as usize] / sum;
                let got = out.at((10 + di) as usize, (10 + dj) as usize);
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blur_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let img = ImageMatrix::from_fn(12, 17, |_, _| rng.gen_range(0.0..1.0));
        let total: f64 = img.data().iter().sum();
        for sigma in [0.5, 1.0, 2.0] {
            let out = gaussian_blur(&img, sigma).unwrap();
            let out_total: f64 = out.data().iter().sum();
            assert!((total - out_total).abs() < 1e-9, "sigma {sigma}");
        }
    }

    #[test]
    fn downsample_cases() {
        let ramp = ImageMatrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        assert_eq!(downsample(&ramp, 1).unwrap(), ramp);
        let half = downsample(&ramp, 2).unwrap();
        assert_eq!(half.data(), &[0.0, 2.0, 8.0, 10.0]);
        let constant = ImageMatrix::filled(6, 6, 0.4);
        assert_eq!(downsample(&constant, 3).unwrap(), ImageMatrix::filled(2, 2, 0.4));
        assert!(downsample(&ramp, 3).is_err());
    }

    #[test]
    fn bicubic_identity_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let img = ImageMatrix::from_fn(7, 9, |_, _| rng.gen_range(0.0..1.0));
        assert_eq!(bicubic_upscale(&img, 1).unwrap(), img);
        let constant = ImageMatrix::filled(6, 6, 0.25);
        for s in [2, 3] {
            let up = bicubic_upscale(&constant, s).unwrap();
            assert_eq!(up.rows(), 6 * s);
            for v in up.data() {
                assert!((v - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bicubic_reproduces_linear_ramps_in_the_interior() {
        let img = ImageMatrix::from_fn(16, 16, |r, c| r as f64 + 0.5 * c as f64);
        let up = bicubic_upscale(&img, 2).unwrap();
        // output pixel o samples source coordinate (o + 0.5)/2 - 0.5
        for r in 8..24 {
            for c in 8..24 {
                let sr = (r as f64 + 0.5) / 2.0 - 0.5;
                let sc = (c as f64 + 0.5) / 2.0 - 0.5;
                let expect = sr + 0.5 * sc;
                assert!((up.at(r, c) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn training_pair_grid_counts() {
        let imgs = vec![ImageMatrix::filled(80, 80, 0.5)];
        let spec = DegradationSpec::new(1.0, 2).unwrap();
        let set = make_training_pairs(&imgs, &spec, 40, 40).unwrap();
        assert_eq!(set.pairs.len(), 4);
        assert_eq!(set.skipped, 0);

        let imgs = vec![ImageMatrix::filled(120, 120, 0.5)];
        let set = make_training_pairs(&imgs, &spec, 40, 20).unwrap();
        assert_eq!(set.pairs.len(), 25);
    }

    #[test]
    fn degenerate_degradation_is_near_identity() {
        let img = synth_phantom(7, 64).unwrap();
        let spec = DegradationSpec::new(1e-6, 1).unwrap();
        let set = make_training_pairs(&[img], &spec, 40, 40).unwrap();
        for (input, target) in &set.pairs {
            assert!(input.max_abs_diff(target) < 1e-6);
        }
    }

    #[test]
    fn undersized_images_are_skipped_with_count() {
        let imgs = vec![ImageMatrix::filled(20, 20, 0.5), ImageMatrix::filled(80, 80, 0.5)];
        let spec = DegradationSpec::new(1.0, 2).unwrap();
        let set = make_training_pairs(&imgs, &spec, 40, 40).unwrap();
        assert_eq!(set.skipped, 1);
        assert_eq!(set.pairs.len(), 4);
    }

    #[test]
    fn round_trip_beats_nearest_neighbor_on_smooth_phantom() {
        use crate::metrics::{psnr, MetricConfig};
        let img = synth_phantom(3, 128).unwrap();
        let small = downsample(&img, 2).unwrap();
        let bicubic = bicubic_upscale(&small, 2).unwrap();
        let nearest =
            ImageMatrix::from_fn(128, 128, |r, c| small.at(r / 2, c / 2));
        let cfg = MetricConfig::default();
        let p_b = psnr(&img, &bicubic, &cfg).unwrap();
        let p_n = psnr(&img, &nearest, &cfg).unwrap();
        assert!(p_b >= p_n, "bicubic {p_b} vs nearest {p_n}");
    }

    #[test]
    fn blur_is_monotone_in_sharpness() {
        use crate::priors::sharpness;
        let img = synth_phantom(11, 128).unwrap();
        let mut last = f64::INFINITY;
        for sigma in [0.5, 1.0, 1.5, 2.0, 2.5] {
            let v = sharpness(&gaussian_blur(&img, sigma).unwrap()).unwrap();
            assert!(v < last, "sigma {sigma}: {v} !< {last}");
            last = v;
        }
    }
}
