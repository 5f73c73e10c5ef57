use crate::error::{Error, Result};
use crate::linalg::ImageMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    cos_t: f64,
    sin_t: f64,
    intensity: f64,
    feather: f64,
}

impl Ellipse {
    fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64, intensity: f64) -> Self {
        Self { cx, cy, a, b, cos_t: theta.cos(), sin_t: theta.sin(), intensity, feather: 0.12 }
    }

    /// Normalized quadratic form; < 1 inside the ellipse.
    fn q(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let xr = dx * self.cos_t + dy * self.sin_t;
        let yr = -dx * self.sin_t + dy * self.cos_t;
        (xr / self.a).powi(2) + (yr / self.b).powi(2)
    }

    /// Soft coverage in [0, 1] with a feathered rim.
    fn coverage(&self, x: f64, y: f64) -> f64 {
        ((1.0 - self.q(x, y)) / self.feather).clamp(0.0, 1.0)
    }
}

/// Deterministic brain-like test image: bright skull ring, mid-intensity
/// interior, dark ventricles, a handful of seeded internal structures and
/// low-amplitude texture. Values lie in [0, 1].
pub fn synth_phantom(seed: u64, size: usize) -> Result<ImageMatrix> {
    if size < 64 {
        return Err(Error::Configuration(format!(
            "phantom size must be >= 64, got {size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let skull = Ellipse::new(0.5, 0.5, 0.46, 0.40, 0.0, 0.85);
    let brain = Ellipse::new(0.5, 0.5, 0.41, 0.35, 0.0, 0.45);
    let ventricles = [
        Ellipse::new(0.44, 0.48, 0.045, 0.11, 0.25, 0.12),
        Ellipse::new(0.56, 0.48, 0.045, 0.11, -0.25, 0.12),
    ];
    let n_blobs = rng.gen_range(5..=8);
    let blobs: Vec<Ellipse> = (0..n_blobs)
        .map(|_| {
            Ellipse::new(
                0.5 + rng.gen_range(-0.22..0.22),
                0.5 + rng.gen_range(-0.20..0.20),
                rng.gen_range(0.03..0.12),
                rng.gen_range(0.03..0.12),
                rng.gen_range(0.0..std::f64::consts::PI),
                rng.gen_range(0.25..0.70),
            )
        })
        .collect();
    // texture waves: (orientation, frequency, phase)
    let waves: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.0..std::f64::consts::PI),
                rng.gen_range(8.0..24.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();

    let inv = 1.0 / size as f64;
    Ok(ImageMatrix::from_fn(size, size, |r, c| {
        let x = (c as f64 + 0.5) * inv;
        let y = (r as f64 + 0.5) * inv;
        let mut v = 0.02;
        for e in [&skull, &brain]
            .into_iter()
            .chain(ventricles.iter())
            .chain(blobs.iter())
        {
            let t = e.coverage(x, y);
            v = v * (1.0 - t) + e.intensity * t;
        }
        if brain.q(x, y) < 1.0 {
            let mut tex = 0.0;
            for &(theta, freq, phase) in &waves {
                let u = x * theta.cos() + y * theta.sin();
                tex += (std::f64::consts::TAU * freq * u + phase).sin();
            }
            v += 0.012 * tex;
        }
        v.clamp(0.0, 1.0)
    }))
}
