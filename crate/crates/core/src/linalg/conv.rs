use super::{ConvKernel, FeatureStack};
use crate::error::{Error, Result};

fn check_kernels(input: &FeatureStack, kernels: &[ConvKernel]) -> Result<()> {
    if kernels.is_empty() {
        return Err(Error::Configuration("kernel list is empty".into()));
    }
    for (k, kernel) in kernels.iter().enumerate() {
        if kernel.depth != input.depth() {
            return Err(Error::Dimension(format!(
                "kernel {k} depth {} does not match input depth {}",
                kernel.depth,
                input.depth()
            )));
        }
        if kernel.height % 2 == 0 || kernel.width % 2 == 0 {
            return Err(Error::Configuration(format!(
                "kernel {k} spatial dims {}x{} must be odd",
                kernel.height, kernel.width
            )));
        }
    }
    Ok(())
}

/// Same-size zero-padded cross-correlation. Output channel c is
/// sum over input channels of input[d] correlated with kernel_c[d], plus bias_c.
pub fn conv2d_same(input: &FeatureStack, kernels: &[ConvKernel]) -> Result<FeatureStack> {
    check_kernels(input, kernels)?;
    let (rows, cols) = (input.rows(), input.cols());
    let mut out = FeatureStack::zeros(rows, cols, kernels.len());

    for (k, kernel) in kernels.iter().enumerate() {
        let out_ch = out.channel_mut(k);
        out_ch.fill(kernel.bias);
        let cm = (kernel.height / 2) as isize;
        let cn = (kernel.width / 2) as isize;
        for dep in 0..kernel.depth {
            let in_ch = input.channel(dep);
            for ki in 0..kernel.height {
                let di = ki as isize - cm;
                let (r0, r1) = shifted_range(rows, di);
                for kj in 0..kernel.width {
                    let w = kernel.weight(ki, kj, dep);
                    if w == 0.0 {
                        continue;
                    }
                    let dj = kj as isize - cn;
                    let (c0, c1) = shifted_range(cols, dj);
                    if c0 >= c1 {
                        continue;
                    }
                    for r in r0..r1 {
                        let src_row = ((r as isize + di) as usize) * cols;
                        let src = &in_ch[(src_row as isize + c0 as isize + dj) as usize
                            ..(src_row as isize + c1 as isize + dj) as usize];
                        let dst = &mut out_ch[r * cols + c0..r * cols + c1];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Valid output index range [r0, r1) such that r + shift stays in [0, len).
#[inline]
fn shifted_range(len: usize, shift: isize) -> (usize, usize) {
    let lo = if shift < 0 { (-shift) as usize } else { 0 };
    let hi = if shift > 0 { len.saturating_sub(shift as usize) } else { len };
    let lo = lo.min(len);
    (lo, hi.max(lo))
}

/// Gradients produced by [`conv2d_backward`]. `kernels[k].bias` carries the
/// bias gradient of output channel k.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: FeatureStack,
    pub kernels: Vec<ConvKernel>,
}

/// Adjoint of [`conv2d_same`]: given dL/d(output), returns dL/d(input),
/// dL/d(weights) and dL/d(bias).
pub fn conv2d_backward(
    input: &FeatureStack,
    kernels: &[ConvKernel],
    upstream: &FeatureStack,
) -> Result<ConvGrads> {
    check_kernels(input, kernels)?;
    let (rows, cols) = (input.rows(), input.cols());
    if upstream.rows() != rows || upstream.cols() != cols || upstream.depth() != kernels.len() {
        return Err(Error::Dimension(format!(
            "upstream gradient {}x{}x{} does not match output {}x{}x{}",
            upstream.rows(),
            upstream.cols(),
            upstream.depth(),
            rows,
            cols,
            kernels.len()
        )));
    }

    let mut input_grad = FeatureStack::zeros(rows, cols, input.depth());
    let mut kernel_grads: Vec<ConvKernel> = kernels
        .iter()
        .map(|k| ConvKernel::zeros(k.height, k.width, k.depth))
        .collect();

    for (k, kernel) in kernels.iter().enumerate() {
        let up_ch = upstream.channel(k);
        kernel_grads[k].bias = up_ch.iter().sum();
        let cm = (kernel.height / 2) as isize;
        let cn = (kernel.width / 2) as isize;
        for dep in 0..kernel.depth {
            let in_ch = input.channel(dep);
            let grad_ch = input_grad.channel_mut(dep);
            for ki in 0..kernel.height {
                let di = ki as isize - cm;
                let (r0, r1) = shifted_range(rows, di);
                for kj in 0..kernel.width {
                    let dj = kj as isize - cn;
                    let (c0, c1) = shifted_range(cols, dj);
                    if c0 >= c1 {
                        continue;
                    }
                    let w = kernel.weight(ki, kj, dep);
                    let mut wsum = 0.0;
                    for r in r0..r1 {
                        let src_row = ((r as isize + di) as usize) * cols;
                        let lo = (src_row as isize + c0 as isize + dj) as usize;
                        let hi = (src_row as isize + c1 as isize + dj) as usize;
                        let shifted_in = &in_ch[lo..hi];
                        let shifted_grad = &mut grad_ch[lo..hi];
                        let up = &up_ch[r * cols + c0..r * cols + c1];
                        for ((g, u), x) in shifted_grad.iter_mut().zip(up).zip(shifted_in) {
                            wsum += u * x;
                            *g += w * u;
                        }
                    }
                    *kernel_grads[k].weight_mut(ki, kj, dep) = wsum;
                }
            }
        }
    }
    Ok(ConvGrads { input: input_grad, kernels: kernel_grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_stack(rng: &mut ChaCha8Rng, rows: usize, cols: usize, depth: usize) -> FeatureStack {
        let mut s = FeatureStack::zeros(rows, cols, depth);
        for v in s.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        s
    }

    fn rand_kernel(rng: &mut ChaCha8Rng, h: usize, w: usize, d: usize) -> ConvKernel {
        let weights = (0..h * w * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ConvKernel::new(h, w, d, weights, rng.gen_range(-0.5..0.5)).unwrap()
    }

    /// Direct quadruple-loop definition of the same operation.
    fn conv_reference(input: &FeatureStack, kernels: &[ConvKernel]) -> FeatureStack {
        let (rows, cols) = (input.rows(), input.cols());
        let mut out = FeatureStack::zeros(rows, cols, kernels.len());
        for (k, kernel) in kernels.iter().enumerate() {
            let cm = (kernel.height / 2) as isize;
            let cn = (kernel.width / 2) as isize;
            for r in 0..rows as isize {
                for c in 0..cols as isize {
                    let mut acc = kernel.bias;
                    for dep in 0..kernel.depth {
                        for ki in 0..kernel.height as isize {
                            for kj in 0..kernel.width as isize {
                                let rr = r + ki - cm;
                                let cc = c + kj - cn;
                                if rr >= 0 && rr < rows as isize && cc >= 0 && cc < cols as isize {
                                    acc += kernel.weight(ki as usize, kj as usize, dep)
                                        * input.channel(dep)[rr as usize * cols + cc as usize];
                                }
                            }
                        }
                    }
                    out.channel_mut(k)[r as usize * cols + c as usize] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = rand_stack(&mut rng, 5, 7, 1);
        let kernel = ConvKernel::new(1, 1, 1, vec![1.0], 0.0).unwrap();
        let out = conv2d_same(&input, &[kernel]).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn constant_image_all_ones_kernel() {
        let mut input = FeatureStack::zeros(5, 5, 1);
        input.data_mut().fill(5.0);
        let kernel = ConvKernel::new(3, 3, 1, vec![1.0; 9], 0.0).unwrap();
        let out = conv2d_same(&input, &[kernel]).unwrap();
        // interior: 9 taps of 5; corner: 4 taps inside the zero padding
        assert_eq!(out.channel(0)[2 * 5 + 2], 45.0);
        assert_eq!(out.channel(0)[0], 20.0);
    }

    #[test]
    fn matches_reference_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = rand_stack(&mut rng, 6, 6, 1);
        let kernel = rand_kernel(&mut rng, 3, 3, 1);
        let fast = conv2d_same(&input, &[kernel.clone()]).unwrap();
        let slow = conv_reference(&input, &[kernel]);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_reference_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..30 {
            let rows = rng.gen_range(1..=16);
            let cols = rng.gen_range(1..=16);
            let depth = rng.gen_range(1..=3);
            let nk = rng.gen_range(1..=3);
            let input = rand_stack(&mut rng, rows, cols, depth);
            let kernels: Vec<_> = (0..nk)
                .map(|_| {
                    let h = 2 * rng.gen_range(0..=2) + 1;
                    let w = 2 * rng.gen_range(0..=2) + 1;
                    rand_kernel(&mut rng, h, w, depth)
                })
                .collect();
            let fast = conv2d_same(&input, &kernels).unwrap();
            let slow = conv_reference(&input, &kernels);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12, "trial {trial}");
            }
        }
    }

    #[test]
    fn rejects_depth_mismatch_and_even_kernels() {
        let input = FeatureStack::zeros(4, 4, 2);
        let bad_depth = ConvKernel::zeros(3, 3, 1);
        assert!(matches!(
            conv2d_same(&input, &[bad_depth]),
            Err(Error::Dimension(_))
        ));
        let even = ConvKernel::zeros(2, 3, 2);
        assert!(matches!(
            conv2d_same(&input, &[even]),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let input = rand_stack(&mut rng, 5, 5, 2);
        let kernels = vec![rand_kernel(&mut rng, 3, 3, 2)];
        let upstream = FeatureStack::zeros(5, 5, 1);
        let grads = conv2d_backward(&input, &kernels, &upstream).unwrap();
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
        assert!(grads.kernels[0].weights.iter().all(|&v| v == 0.0));
        assert_eq!(grads.kernels[0].bias, 0.0);
    }

    #[test]
    fn identity_kernel_adjoint_passes_upstream_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input = rand_stack(&mut rng, 4, 6, 1);
        let upstream = rand_stack(&mut rng, 4, 6, 1);
        let kernel = ConvKernel::new(1, 1, 1, vec![1.0], 0.0).unwrap();
        let grads = conv2d_backward(&input, &[kernel], &upstream).unwrap();
        assert_eq!(grads.input, upstream);
    }

    /// Finite-difference check of all three gradients against the scalar loss
    /// L = sum(output^2).
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let input = rand_stack(&mut rng, 5, 5, 2);
        let kernels = vec![rand_kernel(&mut rng, 3, 3, 2), rand_kernel(&mut rng, 1, 1, 2)];

        let loss = |input: &FeatureStack, kernels: &[ConvKernel]| -> f64 {
            conv2d_same(input, kernels)
                .unwrap()
                .data()
                .iter()
                .map(|v| v * v)
                .sum()
        };

        let out = conv2d_same(&input, &kernels).unwrap();
        let mut upstream = out.clone();
        for v in upstream.data_mut() {
            *v *= 2.0;
        }
        let grads = conv2d_backward(&input, &kernels, &upstream).unwrap();

        let h = 1e-5;
        let rel = |analytic: f64, fd: f64| {
            (analytic - fd).abs() / fd.abs().max(analytic.abs()).max(1e-8)
        };

        for idx in 0..input.data().len() {
            let mut plus = input.clone();
            plus.data_mut()[idx] += h;
            let mut minus = input.clone();
            minus.data_mut()[idx] -= h;
            let fd = (loss(&plus, &kernels) - loss(&minus, &kernels)) / (2.0 * h);
            assert!(rel(grads.input.data()[idx], fd) < 1e-6);
        }
        for k in 0..kernels.len() {
            for widx in 0..kernels[k].weights.len() {
                let mut plus = kernels.clone();
                plus[k].weights[widx] += h;
                let mut minus = kernels.clone();
                minus[k].weights[widx] -= h;
                let fd = (loss(&input, &plus) - loss(&input, &minus)) / (2.0 * h);
                assert!(rel(grads.kernels[k].weights[widx], fd) < 1e-6);
            }
            let mut plus = kernels.clone();
            plus[k].bias += h;
            let mut minus = kernels.clone();
            minus[k].bias -= h;
            let fd = (loss(&input, &plus) - loss(&input, &minus)) / (2.0 * h);
            assert!(rel(grads.kernels[k].bias, fd) < 1e-6);
        }
    }
}
