//! Self-contained verification suites: finite-difference gradient checks,
//! SVD factor quality, and prior sanity properties, all with fixed seeds.
//! The CLI exposes them as a release gate; the integration tests reuse them.

use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, synth_phantom};
use crate::linalg::{conv2d_backward, conv2d_same, svd, ConvKernel, FeatureStack, ImageMatrix};
use crate::network::{backward, forward, init_params, tiny_3_layer, NetworkParams};
use crate::priors::{
    sharpness, sharpness_gradient, smooth_rank, smooth_rank_gradient, RankSurrogateParams,
};
use crate::training::{loss, loss_output_gradient, HyperParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradients,
    Svd,
    Priors,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradients" => Ok(Suite::Gradients),
            "svd" => Ok(Suite::Svd),
            "priors" => Ok(Suite::Priors),
            "all" => Ok(Suite::All),
            other => Err(Error::Configuration(format!(
                "unknown suite '{other}', expected gradients, svd, priors or all"
            ))),
        }
    }
}

/// Outcome of one named check: worst-case residual against its threshold.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst < self.threshold
    }
}

/// Runs the named suite and returns one result per check.
pub fn run_suite(suite: Suite) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Gradients | Suite::All) {
        out.push(check_rank_gradient_fd()?);
        out.push(check_sharpness_gradient_fd()?);
        out.push(check_conv_backward_fd()?);
        out.push(check_full_parameter_fd()?);
    }
    if matches!(suite, Suite::Svd | Suite::All) {
        out.push(check_svd_quality()?);
    }
    if matches!(suite, Suite::Priors | Suite::All) {
        out.push(check_rank_surrogate_exactness()?);
        out.push(check_blur_monotone_sharpness()?);
    }
    Ok(out)
}

const FD_TOL: f64 = 1e-5;

fn rel_err(an: f64, fd: f64) -> f64 {
    (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6)
}

fn rand_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> ImageMatrix {
    ImageMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Central difference of a scalar field over every entry of `y`.
fn fd_gradient(y: &ImageMatrix, h: f64, f: &mut dyn FnMut(&ImageMatrix) -> f64) -> ImageMatrix {
    let mut g = ImageMatrix::zeros(y.rows(), y.cols());
    for r in 0..y.rows() {
        for c in 0..y.cols() {
            let mut plus = y.clone();
            plus.set(r, c, y.at(r, c) + h);
            let mut minus = y.clone();
            minus.set(r, c, y.at(r, c) - h);
            g.set(r, c, (f(&plus) - f(&minus)) / (2.0 * h));
        }
    }
    g
}

fn worst_against_fd(an: &ImageMatrix, fd: &ImageMatrix) -> f64 {
    an.data()
        .iter()
        .zip(fd.data())
        .map(|(&a, &f)| rel_err(a, f))
        .fold(0.0, f64::max)
}

fn check_rank_gradient_fd() -> Result<CheckResult> {
    // matrix entries scaled near delta so the surrogate is in its active band
    let params = RankSurrogateParams::new(0.05)?;
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let size = 6 + (seed as usize % 11);
        let y = rand_image(&mut rng, size, size, 0.1);
        let an = smooth_rank_gradient(&y, params)?;
        let fd = fd_gradient(&y, 1e-6, &mut |m| smooth_rank(m, params).unwrap());
        worst = worst.max(worst_against_fd(&an, &fd));
    }
    Ok(CheckResult {
        name: "smooth_rank_gradient vs central differences",
        worst,
        threshold: FD_TOL,
        detail: "20 seeded matrices, sizes 6x6 to 16x16, delta 0.05".into(),
    })
}

fn check_sharpness_gradient_fd() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let size = 6 + (seed as usize % 11);
        let y = rand_image(&mut rng, size, size, 1.0);
        let an = sharpness_gradient(&y)?;
        let fd = fd_gradient(&y, 1e-6, &mut |m| sharpness(m).unwrap());
        worst = worst.max(worst_against_fd(&an, &fd));
    }
    Ok(CheckResult {
        name: "sharpness_gradient vs central differences",
        worst,
        threshold: FD_TOL,
        detail: "20 seeded matrices, sizes 6x6 to 16x16".into(),
    })
}

fn check_conv_backward_fd() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let size = 6 + (seed as usize % 11);
        let depth = 1 + (seed as usize % 2);
        let count = 1 + (seed as usize % 3);
        let mut input = FeatureStack::zeros(size, size, depth);
        for v in input.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let mut kernels = Vec::new();
        for _ in 0..count {
            let mut k = ConvKernel::zeros(3, 3, depth);
            for v in k.weights_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            k.bias = rng.gen_range(-0.5..0.5);
            kernels.push(k);
        }
        // scalar field: half the squared Frobenius norm of the conv output
        let objective = |inp: &FeatureStack, ks: &[ConvKernel]| -> f64 {
            let out = conv2d_same(inp, ks).unwrap();
            out.data().iter().map(|v| v * v / 2.0).sum()
        };
        let out = conv2d_same(&input, &kernels)?;
        let grads = conv2d_backward(&input, &kernels, &out)?;
        // the objective is quadratic per parameter, so the central difference
        // is exact and a larger step only suppresses roundoff
        let h = 1e-4;
        for i in 0..input.data().len() {
            let mut plus = input.clone();
            plus.data_mut()[i] += h;
            let mut minus = input.clone();
            minus.data_mut()[i] -= h;
            let fd = (objective(&plus, &kernels) - objective(&minus, &kernels)) / (2.0 * h);
            worst = worst.max(rel_err(grads.input.data()[i], fd));
        }
        for (ki, k) in kernels.iter().enumerate() {
            for w in 0..k.weights().len() {
                let mut plus = kernels.clone();
                plus[ki].weights_mut()[w] += h;
                let mut minus = kernels.clone();
                minus[ki].weights_mut()[w] -= h;
                let fd = (objective(&input, &plus) - objective(&input, &minus)) / (2.0 * h);
                worst = worst.max(rel_err(grads.kernels[ki].weights()[w], fd));
            }
            let mut plus = kernels.clone();
            plus[ki].bias += h;
            let mut minus = kernels.clone();
            minus[ki].bias -= h;
            let fd = (objective(&input, &plus) - objective(&input, &minus)) / (2.0 * h);
            worst = worst.max(rel_err(grads.kernels[ki].bias, fd));
        }
    }
    Ok(CheckResult {
        name: "conv2d_backward vs central differences",
        worst,
        threshold: FD_TOL,
        detail: "20 seeded instances, inputs 6x6 to 16x16, 1-2 channels".into(),
    })
}

fn check_full_parameter_fd() -> Result<CheckResult> {
    let specs = tiny_3_layer();
    let hp = HyperParams { delta: 0.05, alpha: 0.1, beta: 5e-5, ..HyperParams::default() };
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let size = 6 + (seed as usize % 11);
        let x = rand_image(&mut rng, size, size, 0.1).map(|v| v.abs());
        let y_g = rand_image(&mut rng, size, size, 0.1).map(|v| v.abs());

        // weights scaled up so the ReLU layers see both signs; biases moved
        // off zero so no pre-activation sits exactly on the ReLU kink, where
        // the one-sided derivative makes the central difference ill-posed
        let mut params = init_params(&specs, 500 + seed)?;
        scale_params(&mut params, 300.0);
        for layer in &mut params.layers {
            for k in &mut layer.kernels {
                k.bias = rng.gen_range(0.01..0.05) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            }
        }

        let trace = forward(&x, &params)?;
        let upstream = loss_output_gradient(trace.output(), &y_g, &hp)?;
        let grads = backward(&trace, &params, &upstream)?;

        // a bias step shifts every pre-activation of its layer by exactly h,
        // so a pre-activation within a few h of the ReLU kink makes the
        // central difference one-sided; skip the bias check for such layers
        let h = 1e-5;
        let bias_checkable: Vec<bool> = trace
            .pre_activations()
            .iter()
            .zip(&params.layers)
            .map(|(pre, layer)| {
                layer.spec.activation == crate::network::Activation::Linear
                    || pre.data().iter().all(|z| z.abs() > 10.0 * h)
            })
            .collect();

        let total = |p: &NetworkParams| -> f64 {
            let out = forward(&x, p).unwrap();
            loss(out.output(), &y_g, &hp).unwrap().total
        };
        for l in 0..params.layers.len() {
            for k in 0..params.layers[l].kernels.len() {
                for w in 0..params.layers[l].kernels[k].weights().len() {
                    let mut plus = params.clone();
                    plus.layers[l].kernels[k].weights_mut()[w] += h;
                    let mut minus = params.clone();
                    minus.layers[l].kernels[k].weights_mut()[w] -= h;
                    let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                    worst = worst.max(rel_err(grads.layers[l][k].weights()[w], fd));
                }
                if bias_checkable[l] {
                    let mut plus = params.clone();
                    plus.layers[l].kernels[k].bias += h;
                    let mut minus = params.clone();
                    minus.layers[l].kernels[k].bias -= h;
                    let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                    worst = worst.max(rel_err(grads.layers[l][k].bias, fd));
                }
            }
        }
    }
    Ok(CheckResult {
        name: "full objective parameter gradient vs central differences",
        worst,
        threshold: FD_TOL,
        detail: "20 seeded instances, 3-layer toy network, full objective".into(),
    })
}

fn scale_params(params: &mut NetworkParams, factor: f64) {
    for layer in &mut params.layers {
        for k in &mut layer.kernels {
            for w in k.weights_mut() {
                *w *= factor;
            }
        }
    }
}

fn check_svd_quality() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let rows = rng.gen_range(2..=64);
        let cols = rng.gen_range(2..=64);
        let a = rand_image(&mut rng, rows, cols, 1.0);
        let f = svd(&a)?;
        worst = worst.max(f.reconstruct().max_abs_diff(&a));
        for mat in [&f.u, &f.z] {
            let r = f.sigma.len();
            for i in 0..r {
                for j in 0..r {
                    let dot: f64 =
                        (0..mat.rows()).map(|k| mat.at(k, i) * mat.at(k, j)).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - expect).abs());
                }
            }
        }
    }
    Ok(CheckResult {
        name: "svd reconstruction and orthonormality",
        worst,
        threshold: 1e-10,
        detail: "100 seeded random matrices up to 64x64".into(),
    })
}

fn check_rank_surrogate_exactness() -> Result<CheckResult> {
    let params = RankSurrogateParams::new(0.01)?;
    let mut worst = 0.0_f64;
    for seed in 0..10u64 {
        for k in 1..=3usize {
            let a = rank_k_matrix(700 + seed * 3 + k as u64, 12, 10, k);
            let r = smooth_rank(&a, params)?;
            worst = worst.max((r - k as f64).abs());
        }
    }
    Ok(CheckResult {
        name: "smooth rank equals exact rank on low-rank matrices",
        worst,
        threshold: 1e-8,
        detail: "rank 1-3 outer products, singular values >= 0.5, delta 0.01".into(),
    })
}

/// Exact rank-k matrix with singular values in [0.5, 2]: orthonormal factors
/// from Gram-Schmidt on random vectors.
pub fn rank_k_matrix(seed: u64, rows: usize, cols: usize, k: usize) -> ImageMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us = orthonormal_set(&mut rng, rows, k);
    let vs = orthonormal_set(&mut rng, cols, k);
    let sv: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
    ImageMatrix::from_fn(rows, cols, |r, c| {
        (0..k).map(|i| sv[i] * us[i][r] * vs[i][c]).sum()
    })
}

fn orthonormal_set(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let mut set: Vec<Vec<f64>> = Vec::new();
    while set.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &set {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for vi in &mut v {
                *vi /= norm;
            }
            set.push(v);
        }
    }
    set
}

fn check_blur_monotone_sharpness() -> Result<CheckResult> {
    let phantom = synth_phantom(42, 96)?;
    let sigmas = [0.5, 1.0, 1.5, 2.0, 2.5];
    let mut values = Vec::new();
    for s in sigmas {
        values.push(sharpness(&gaussian_blur(&phantom, s)?)?);
    }
    // worst = largest ratio of consecutive values; must stay below 1
    let mut worst = 0.0_f64;
    for w in values.windows(2) {
        worst = worst.max(w[1] / w[0]);
    }
    Ok(CheckResult {
        name: "variance of Laplacian strictly decreases with blur",
        worst,
        threshold: 1.0,
        detail: format!("sigmas {sigmas:?} on a fixed phantom"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for result in run_suite(Suite::All).unwrap() {
            assert!(
                result.passed(),
                "{}: worst {} vs threshold {}",
                result.name,
                result.worst,
                result.threshold
            );
        }
    }

    #[test]
    fn unknown_suite_name_is_rejected() {
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!("svd".parse::<Suite>().unwrap(), Suite::Svd);
    }

    #[test]
    fn rank_k_matrices_have_expected_rank() {
        let a = rank_k_matrix(5, 10, 8, 2);
        let f = svd(&a).unwrap();
        assert!(f.sigma[1] >= 0.5);
        assert!(f.sigma[2] < 1e-10);
    }
}
