//! The regularized objective, its gradient assembly, and the SGD loop,
//! including the alpha = beta = 0 ablation that reduces to the plain
//! MSE-trained baseline network.

use crate::error::{Error, Result};
use crate::imaging::{bicubic_upscale, PatchSet};
use crate::linalg::ImageMatrix;
use crate::metrics::{psnr, MetricConfig};
use crate::network::{
    backward, forward, init_params, sgd_apply, LayerSpec, NetworkParams, ParamGrads,
};
use crate::priors::{
    sharpness_from_laplacian, sharpness_gradient_from_laplacian, laplacian,
    smooth_rank_from_sigma, smooth_rank_gradient_from_svd, RankSurrogateParams,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::Instant;

/// Abort threshold: the (maximized) sharpness term is unbounded below in the
/// objective, so a runaway term fails loudly instead of silently degrading.
const SHARPNESS_CEILING_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct HyperParams {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub eta_last_layer_ratio: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            delta: 0.01,
            alpha: 0.1,
            beta: 5e-5,
            eta: 1e-4,
            eta_last_layer_ratio: 0.1,
            batch_size: 16,
            epochs: 100,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 || self.eta <= 0.0 || self.eta_last_layer_ratio <= 0.0 {
            return Err(Error::Configuration(
                "delta, eta and eta_last_layer_ratio must be positive".into(),
            ));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::Configuration("alpha and beta must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Configuration("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// The objective split into its three terms.
/// total = mse + rank_term - sharpness_term.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub mse: f64,
    pub rank_term: f64,
    pub sharpness_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: LossBreakdown,
    pub val_psnr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub checkpoint_path: Option<PathBuf>,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mse,rank_term,sharpness_term,total,val_psnr,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.3}\n",
                e.epoch,
                e.mean_loss.mse,
                e.mean_loss.rank_term,
                e.mean_loss.sharpness_term,
                e.mean_loss.total,
                e.val_psnr,
                e.seconds
            ));
        }
        out
    }
}

fn check_dims(y: &ImageMatrix, y_g: &ImageMatrix) -> Result<()> {
    if y.rows() != y_g.rows() || y.cols() != y_g.cols() {
        return Err(Error::Dimension(format!(
            "output {}x{} vs target {}x{}",
            y.rows(),
            y.cols(),
            y_g.rows(),
            y_g.cols()
        )));
    }
    Ok(())
}

/// mse = 1/2 ||y_g - y||_F^2; rank and sharpness terms are scaled by alpha
/// and beta. Zero coefficients skip the corresponding prior entirely.
pub fn loss(y: &ImageMatrix, y_g: &ImageMatrix, hp: &HyperParams) -> Result<LossBreakdown> {
    check_dims(y, y_g)?;
    hp.validate()?;
    let mse: f64 = y
        .data()
        .iter()
        .zip(y_g.data())
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        / 2.0;
    let rank_term = if hp.alpha > 0.0 {
        let params = RankSurrogateParams::new(hp.delta)?;
        hp.alpha * crate::priors::smooth_rank(y, params)?
    } else {
        0.0
    };
    let sharpness_term = if hp.beta > 0.0 {
        hp.beta * crate::priors::sharpness(y)?
    } else {
        0.0
    };
    Ok(LossBreakdown {
        mse,
        rank_term,
        sharpness_term,
        total: mse + rank_term - sharpness_term,
    })
}

/// Gradient of the total objective w.r.t. the network output:
/// G = -(y_g - y) + alpha * D_rank - beta * D_sharpness. Feeding G to the
/// network's backward pass yields the full parameter gradient.
pub fn loss_output_gradient(
    y: &ImageMatrix,
    y_g: &ImageMatrix,
    hp: &HyperParams,
) -> Result<ImageMatrix> {
    Ok(loss_and_gradient(y, y_g, hp)?.1)
}

/// Computes the breakdown and the output gradient sharing one SVD and one
/// Laplacian evaluation.
fn loss_and_gradient(
    y: &ImageMatrix,
    y_g: &ImageMatrix,
    hp: &HyperParams,
) -> Result<(LossBreakdown, ImageMatrix)> {
    check_dims(y, y_g)?;
    hp.validate()?;
    let mut mse = 0.0;
    let mut grad = ImageMatrix::zeros(y.rows(), y.cols());
    for (g, (a, b)) in grad
        .data_mut()
        .iter_mut()
        .zip(y.data().iter().zip(y_g.data()))
    {
        let diff = b - a;
        mse += diff * diff / 2.0;
        *g = -diff;
    }

    let mut rank_term = 0.0;
    if hp.alpha > 0.0 {
        let params = RankSurrogateParams::new(hp.delta)?;
        let factors = crate::linalg::svd(y)?;
        rank_term = hp.alpha * smooth_rank_from_sigma(&factors.sigma, params);
        let d_rank = smooth_rank_gradient_from_svd(&factors, params);
        for (g, d) in grad.data_mut().iter_mut().zip(d_rank.data()) {
            *g += hp.alpha * d;
        }
    }

    let mut sharpness_term = 0.0;
    if hp.beta > 0.0 {
        let p = laplacian(y)?;
        sharpness_term = hp.beta * sharpness_from_laplacian(&p);
        let d_sharp = sharpness_gradient_from_laplacian(&p)?;
        for (g, d) in grad.data_mut().iter_mut().zip(d_sharp.data()) {
            *g -= hp.beta * d;
        }
    }

    let breakdown = LossBreakdown {
        mse,
        rank_term,
        sharpness_term,
        total: mse + rank_term - sharpness_term,
    };
    Ok((breakdown, grad))
}

/// One plain SGD update; the final layer uses eta * eta_last_layer_ratio.
pub fn sgd_step(
    params: &NetworkParams,
    grads: &ParamGrads,
    hp: &HyperParams,
) -> Result<NetworkParams> {
    let mut next = params.clone();
    sgd_apply(&mut next, grads, hp.eta, hp.eta_last_layer_ratio)?;
    Ok(next)
}

/// Deterministic subsampling of a patch set, used for the training-fraction
/// study. fraction = 1.0 keeps everything in the original order.
pub fn subsample_pairs(set: &PatchSet, fraction: f64, seed: u64) -> Result<PatchSet> {
    if !(0.0..=1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::Configuration(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(set.clone());
    }
    let keep = ((set.pairs.len() as f64) * fraction).round().max(1.0) as usize;
    let mut indices: Vec<usize> = (0..set.pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    indices.truncate(keep);
    indices.sort_unstable();
    Ok(PatchSet {
        pairs: indices.iter().map(|&i| set.pairs[i].clone()).collect(),
        skipped: set.skipped,
    })
}

/// Full training loop: seeded shuffling, mean gradient per batch, one SGD
/// step per batch. Deterministic given seed and data.
pub fn train(
    pairs: &PatchSet,
    val: Option<&PatchSet>,
    specs: &[LayerSpec],
    hp: &HyperParams,
) -> Result<(NetworkParams, TrainReport)> {
    train_impl(pairs, val, specs, hp, true)
}

/// Identical loop with the prior code paths compiled out of the gradient:
/// the plain MSE baseline. With alpha = beta = 0 [`train`] takes the same
/// arithmetic path and produces a bit-identical checkpoint.
pub fn train_baseline(
    pairs: &PatchSet,
    val: Option<&PatchSet>,
    specs: &[LayerSpec],
    hp: &HyperParams,
) -> Result<(NetworkParams, TrainReport)> {
    let plain = HyperParams { alpha: 0.0, beta: 0.0, ..*hp };
    train_impl(pairs, val, specs, &plain, false)
}

fn train_impl(
    pairs: &PatchSet,
    val: Option<&PatchSet>,
    specs: &[LayerSpec],
    hp: &HyperParams,
    use_priors: bool,
) -> Result<(NetworkParams, TrainReport)> {
    hp.validate()?;
    if pairs.pairs.is_empty() {
        return Err(Error::Configuration("training patch set is empty".into()));
    }
    let mut params = init_params(specs, hp.seed)?;
    let mut report = TrainReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let metric_cfg = MetricConfig::default();

    let mut order: Vec<usize> = (0..pairs.pairs.len()).collect();
    for epoch in 0..hp.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_sum = LossBreakdown::default();

        for batch in order.chunks(hp.batch_size) {
            let mut acc = ParamGrads::zeros_like(&params);
            for &idx in batch {
                let (input, target) = &pairs.pairs[idx];
                let trace = forward(input, &params)?;
                let (breakdown, out_grad) = if use_priors {
                    loss_and_gradient(trace.output(), target, hp)?
                } else {
                    mse_only_gradient(trace.output(), target)?
                };
                if !breakdown.total.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        reason: "total loss is not finite".into(),
                    });
                }
                if breakdown.sharpness_term > SHARPNESS_CEILING_FACTOR * breakdown.mse.max(1e-12) {
                    return Err(Error::Diverged {
                        epoch,
                        reason: format!(
                            "sharpness term {} exceeded {SHARPNESS_CEILING_FACTOR}x mse {}",
                            breakdown.sharpness_term, breakdown.mse
                        ),
                    });
                }
                epoch_sum.mse += breakdown.mse;
                epoch_sum.rank_term += breakdown.rank_term;
                epoch_sum.sharpness_term += breakdown.sharpness_term;
                epoch_sum.total += breakdown.total;
                acc.add_assign(&backward(&trace, &params, &out_grad)?);
            }
            acc.scale(1.0 / batch.len() as f64);
            sgd_apply(&mut params, &acc, hp.eta, hp.eta_last_layer_ratio)?;
        }

        let n = pairs.pairs.len() as f64;
        let mean_loss = LossBreakdown {
            mse: epoch_sum.mse / n,
            rank_term: epoch_sum.rank_term / n,
            sharpness_term: epoch_sum.sharpness_term / n,
            total: epoch_sum.total / n,
        };
        let val_pairs: &[(ImageMatrix, ImageMatrix)] = match val {
            Some(v) => &v.pairs,
            None => &pairs.pairs[..pairs.pairs.len().min(4)],
        };
        let mut psnr_sum = 0.0;
        for (input, target) in val_pairs {
            let out = forward(input, &params)?;
            psnr_sum += psnr(out.output(), target, &metric_cfg)?;
        }
        report.epochs.push(EpochStats {
            epoch,
            mean_loss,
            val_psnr: psnr_sum / val_pairs.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((params, report))
}

fn mse_only_gradient(y: &ImageMatrix, y_g: &ImageMatrix) -> Result<(LossBreakdown, ImageMatrix)> {
    check_dims(y, y_g)?;
    let mut mse = 0.0;
    let mut grad = ImageMatrix::zeros(y.rows(), y.cols());
    for (g, (a, b)) in grad
        .data_mut()
        .iter_mut()
        .zip(y.data().iter().zip(y_g.data()))
    {
        let diff = b - a;
        mse += diff * diff / 2.0;
        *g = -diff;
    }
    Ok((LossBreakdown { mse, rank_term: 0.0, sharpness_term: 0.0, total: mse }, grad))
}

/// Inference: bicubic upscaling by s followed by the forward pass. The priors
/// take part in training only.
pub fn infer(x: &ImageMatrix, params: &NetworkParams, s: usize) -> Result<ImageMatrix> {
    let upscaled = bicubic_upscale(x, s)?;
    Ok(forward(&upscaled, params)?.output().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ConvKernel;
    use crate::network::{tiny_3_layer, Activation, Layer};
    use rand::{Rng, SeedableRng};

    fn rand_image(seed: u64, rows: usize, cols: usize) -> ImageMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..1.0))
    }

    fn hp_zero_priors() -> HyperParams {
        HyperParams { alpha: 0.0, beta: 0.0, ..HyperParams::default() }
    }

    #[test]
    fn loss_all_zero() {
        let z = ImageMatrix::zeros(4, 4);
        let lb = loss(&z, &z, &HyperParams::default()).unwrap();
        assert_eq!(lb.mse, 0.0);
        assert_eq!(lb.rank_term, 0.0);
        assert_eq!(lb.sharpness_term, 0.0);
        assert_eq!(lb.total, 0.0);
    }

    #[test]
    fn ablation_loss_is_pure_mse() {
        let y = rand_image(50, 8, 8);
        let y_g = rand_image(51, 8, 8);
        let lb = loss(&y, &y_g, &hp_zero_priors()).unwrap();
        let mse: f64 = y
            .data()
            .iter()
            .zip(y_g.data())
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / 2.0;
        assert_eq!(lb.total, lb.mse);
        assert!((lb.mse - mse).abs() < 1e-15);
    }

    #[test]
    fn loss_closed_form_identity_vs_zero() {
        let eye = ImageMatrix::from_fn(4, 4, |r, c| if r == c { 1.0 } else { 0.0 });
        let zero = ImageMatrix::zeros(4, 4);
        let hp = HyperParams { alpha: 0.1, beta: 0.0, delta: 0.01, ..HyperParams::default() };
        let lb = loss(&eye, &zero, &hp).unwrap();
        assert!((lb.mse - 2.0).abs() < 1e-12);
        assert!((lb.rank_term - 0.4).abs() < 1e-9);
        assert!((lb.total - 2.4).abs() < 1e-9);
    }

    #[test]
    fn loss_decomposition_is_exact() {
        let y = rand_image(52, 10, 10);
        let y_g = rand_image(53, 10, 10);
        let hp = HyperParams { delta: 0.1, ..HyperParams::default() };
        let lb = loss(&y, &y_g, &hp).unwrap();
        assert_eq!(lb.total, lb.mse + lb.rank_term - lb.sharpness_term);
    }

    #[test]
    fn output_gradient_zero_at_mse_minimum() {
        let y = rand_image(54, 6, 6);
        let g = loss_output_gradient(&y, &y, &hp_zero_priors()).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_gradient_matches_finite_differences() {
        let y = rand_image(55, 8, 8).map(|v| v * 0.1);
        let y_g = rand_image(56, 8, 8).map(|v| v * 0.1);
        let hp = HyperParams { delta: 0.1, alpha: 0.1, beta: 5e-3, ..HyperParams::default() };
        let g = loss_output_gradient(&y, &y_g, &hp).unwrap();
        let h = 1e-6;
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for r in 0..8 {
            for c in 0..8 {
                let mut plus = y.clone();
                plus.set(r, c, y.at(r, c) + h);
                let mut minus = y.clone();
                minus.set(r, c, y.at(r, c) - h);
                let fd = (loss(&plus, &y_g, &hp).unwrap().total
                    - loss(&minus, &y_g, &hp).unwrap().total)
                    / (2.0 * h);
                worst = worst.max((g.at(r, c) - fd).abs());
                scale = scale.max(fd.abs());
            }
        }
        assert!(worst / scale.max(1e-8) < 1e-6, "relative error {}", worst / scale);
    }

    #[test]
    fn output_gradient_additive_decomposition() {
        let y = rand_image(57, 6, 6).map(|v| 0.05 * v);
        let y_g = rand_image(58, 6, 6).map(|v| 0.05 * v);
        let hp = HyperParams { alpha: 0.2, beta: 0.0, delta: 0.01, ..HyperParams::default() };
        let g = loss_output_gradient(&y, &y_g, &hp).unwrap();
        let params = RankSurrogateParams::new(hp.delta).unwrap();
        let d_rank = crate::priors::smooth_rank_gradient(&y, params).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let expect = -(y_g.at(r, c) - y.at(r, c)) + hp.alpha * d_rank.at(r, c);
                assert!((g.at(r, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sgd_step_arithmetic() {
        let params = NetworkParams {
            layers: vec![Layer {
                spec: crate::network::LayerSpec::new(1, 1, 1, 1, Activation::Linear),
                kernels: vec![ConvKernel::new(1, 1, 1, vec![1.0], 0.5).unwrap()],
            }],
        };
        let mut grads = ParamGrads::zeros_like(&params);
        grads.layers[0][0].weights[0] = 2.0;
        let hp = HyperParams { eta: 0.1, eta_last_layer_ratio: 1.0, ..HyperParams::default() };
        let next = sgd_step(&params, &grads, &hp).unwrap();
        assert!((next.layers[0].kernels[0].weights[0] - 0.8).abs() < 1e-15);

        // zero grads and zero-eta-equivalent cases leave params unchanged
        let zero = ParamGrads::zeros_like(&params);
        assert_eq!(sgd_step(&params, &zero, &hp).unwrap(), params);
    }

    #[test]
    fn last_layer_uses_scaled_eta() {
        let specs = tiny_3_layer();
        let params = init_params(&specs, 1).unwrap();
        let mut grads = ParamGrads::zeros_like(&params);
        for layer in &mut grads.layers {
            for k in layer.iter_mut() {
                k.weights.fill(1.0);
            }
        }
        let hp = HyperParams { eta: 0.01, eta_last_layer_ratio: 0.1, ..HyperParams::default() };
        let next = sgd_step(&params, &grads, &hp).unwrap();
        let delta0 = params.layers[0].kernels[0].weights[0] - next.layers[0].kernels[0].weights[0];
        let delta2 = params.layers[2].kernels[0].weights[0] - next.layers[2].kernels[0].weights[0];
        assert!((delta0 - 0.01).abs() < 1e-15);
        assert!((delta2 - 0.001).abs() < 1e-15);
    }

    fn tiny_pairs(n: usize) -> PatchSet {
        // identity task: realizable by the tiny net, so it can be memorized
        let input = rand_image(60, 12, 12);
        let target = input.clone();
        PatchSet { pairs: (0..n).map(|_| (input.clone(), target.clone())).collect(), skipped: 0 }
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let pairs = tiny_pairs(2);
        let hp = HyperParams { epochs: 0, ..hp_zero_priors() };
        let (params, report) = train(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        assert_eq!(params, init_params(&tiny_3_layer(), hp.seed).unwrap());
        assert!(report.epochs.is_empty());
    }

    #[test]
    fn empty_patch_set_is_a_configuration_error() {
        let empty = PatchSet { pairs: vec![], skipped: 0 };
        assert!(matches!(
            train(&empty, None, &tiny_3_layer(), &HyperParams::default()),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn overfits_identical_pairs() {
        let pairs = tiny_pairs(4);
        let hp = HyperParams {
            epochs: 8000,
            eta: 5e-3,
            eta_last_layer_ratio: 1.0,
            batch_size: 4,
            ..hp_zero_priors()
        };
        let (_, report) = train(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        let initial = report.epochs.first().unwrap().mean_loss.mse;
        let final_ = report.epochs.last().unwrap().mean_loss.mse;
        assert!(
            final_ < 0.01 * initial,
            "mse went {initial} -> {final_}, not a 100x reduction"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let pairs = tiny_pairs(3);
        let hp = HyperParams { epochs: 5, ..HyperParams::default() };
        let (p1, r1) = train(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        let (p2, r2) = train(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1.to_csv(), r2.to_csv());
    }

    #[test]
    fn ablation_matches_prior_free_code_path_bitwise() {
        let pairs = tiny_pairs(3);
        let hp = HyperParams { epochs: 4, ..hp_zero_priors() };
        let (p1, r1) = train(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        let (p2, r2) = train_baseline(&pairs, None, &tiny_3_layer(), &hp).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1.to_csv(), r2.to_csv());
    }

    #[test]
    fn full_parameter_gradient_matches_finite_differences() {
        let specs = vec![
            crate::network::LayerSpec::new(3, 3, 1, 2, Activation::Relu),
            crate::network::LayerSpec::new(1, 1, 2, 1, Activation::Linear),
        ];
        let mut params = init_params(&specs, 70).unwrap();
        for layer in &mut params.layers {
            for k in &mut layer.kernels {
                for w in &mut k.weights {
                    *w *= 300.0;
                }
            }
        }
        let x = rand_image(71, 8, 8);
        let y_g = rand_image(72, 8, 8);
        let hp = HyperParams { delta: 0.1, alpha: 0.05, beta: 1e-3, ..HyperParams::default() };

        let total = |p: &NetworkParams| -> f64 {
            let out = forward(&x, p).unwrap();
            loss(out.output(), &y_g, &hp).unwrap().total
        };

        let trace = forward(&x, &params).unwrap();
        let out_grad = loss_output_gradient(trace.output(), &y_g, &hp).unwrap();
        let grads = backward(&trace, &params, &out_grad).unwrap();

        let h = 1e-5;
        let mut worst = 0.0_f64;
        for l in 0..params.layers.len() {
            for k in 0..params.layers[l].kernels.len() {
                for w in 0..params.layers[l].kernels[k].weights.len() {
                    let mut plus = params.clone();
                    plus.layers[l].kernels[k].weights[w] += h;
                    let mut minus = params.clone();
                    minus.layers[l].kernels[k].weights[w] -= h;
                    let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                    let an = grads.layers[l][k].weights[w];
                    worst = worst.max((an - fd).abs() / fd.abs().max(an.abs()).max(1e-4));
                }
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn subsample_is_deterministic_and_sized() {
        let pairs = PatchSet {
            pairs: (0..40)
                .map(|i| {
                    let m = ImageMatrix::filled(4, 4, i as f64 / 40.0);
                    (m.clone(), m)
                })
                .collect(),
            skipped: 0,
        };
        let a = subsample_pairs(&pairs, 0.25, 9).unwrap();
        let b = subsample_pairs(&pairs, 0.25, 9).unwrap();
        let c = subsample_pairs(&pairs, 0.25, 10).unwrap();
        assert_eq!(a.pairs.len(), 10);
        assert_eq!(
            a.pairs.iter().map(|p| p.0.at(0, 0)).collect::<Vec<_>>(),
            b.pairs.iter().map(|p| p.0.at(0, 0)).collect::<Vec<_>>()
        );
        assert_ne!(
            a.pairs.iter().map(|p| p.0.at(0, 0)).collect::<Vec<_>>(),
            c.pairs.iter().map(|p| p.0.at(0, 0)).collect::<Vec<_>>()
        );
        assert_eq!(subsample_pairs(&pairs, 1.0, 0).unwrap().pairs.len(), 40);
    }

    #[test]
    fn infer_shapes_and_zero_network() {
        let mut params = init_params(&tiny_3_layer(), 0).unwrap();
        for layer in &mut params.layers {
            for k in &mut layer.kernels {
                k.weights.fill(0.0);
            }
        }
        let x = rand_image(80, 16, 16);
        let out = infer(&x, &params, 2).unwrap();
        assert_eq!(out.rows(), 32);
        assert_eq!(out.cols(), 32);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn infer_identity_network_at_scale_one() {
        let params = NetworkParams {
            layers: vec![Layer {
                spec: crate::network::LayerSpec::new(1, 1, 1, 1, Activation::Linear),
                kernels: vec![ConvKernel::new(1, 1, 1, vec![1.0], 0.0).unwrap()],
            }],
        };
        let x = rand_image(81, 10, 10);
        assert_eq!(infer(&x, &params, 1).unwrap(), x);
    }
}
