//! The 3-layer convolutional backbone: forward pass with cached activations
//! and full manual backpropagation. The shipped default is the 9-1-5
//! configuration (64 9x9x1, 32 1x1x64, one 5x5x32 filter), but everything is
//! data-driven so tests can use tiny nets.

use crate::error::{Error, Result};
use crate::linalg::{conv2d_backward, conv2d_same, ConvKernel, FeatureStack, ImageMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Relu),
            other => Err(Error::Format(format!("unknown activation tag {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kernel_rows: usize,
    pub kernel_cols: usize,
    pub input_depth: usize,
    pub kernel_count: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(
        kernel_rows: usize,
        kernel_cols: usize,
        input_depth: usize,
        kernel_count: usize,
        activation: Activation,
    ) -> Self {
        Self { kernel_rows, kernel_cols, input_depth, kernel_count, activation }
    }
}

/// The paper's 9-1-5 architecture.
pub fn srcnn_9_1_5() -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(9, 9, 1, 64, Activation::Relu),
        LayerSpec::new(1, 1, 64, 32, Activation::Relu),
        LayerSpec::new(5, 5, 32, 1, Activation::Linear),
    ]
}

/// A small 3-layer profile for quick experiments.
pub fn tiny_3_layer() -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(3, 3, 1, 4, Activation::Relu),
        LayerSpec::new(1, 1, 4, 3, Activation::Relu),
        LayerSpec::new(3, 3, 3, 1, Activation::Linear),
    ]
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Configuration("network needs at least one layer".into()));
    }
    if specs[0].input_depth != 1 {
        return Err(Error::Configuration("first layer input depth must be 1".into()));
    }
    if specs.last().unwrap().kernel_count != 1 {
        return Err(Error::Configuration("last layer must have exactly one filter".into()));
    }
    if specs.last().unwrap().activation != Activation::Linear {
        return Err(Error::Configuration("last layer activation must be linear".into()));
    }
    for w in specs.windows(2) {
        if w[1].input_depth != w[0].kernel_count {
            return Err(Error::Configuration(format!(
                "layer input depth {} does not match previous kernel count {}",
                w[1].input_depth, w[0].kernel_count
            )));
        }
    }
    for s in specs {
        if s.kernel_rows == 0
            || s.kernel_cols == 0
            || s.input_depth == 0
            || s.kernel_count == 0
            || s.kernel_rows % 2 == 0
            || s.kernel_cols % 2 == 0
        {
            return Err(Error::Configuration(format!(
                "kernel dims must be positive and odd, got {}x{}x{} ({} filters)",
                s.kernel_rows, s.kernel_cols, s.input_depth, s.kernel_count
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub kernels: Vec<ConvKernel>,
}

/// All filters and biases of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

impl NetworkParams {
    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Weights i.i.d. Gaussian(0, std 0.001), biases zero; deterministic per seed.
pub fn init_params(specs: &[LayerSpec], seed: u64) -> Result<NetworkParams> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = specs
        .iter()
        .map(|&spec| {
            let kernels = (0..spec.kernel_count)
                .map(|_| {
                    let weights = (0..spec.kernel_rows * spec.kernel_cols * spec.input_depth)
                        .map(|_| 0.001 * gaussian(&mut rng))
                        .collect();
                    ConvKernel::new(spec.kernel_rows, spec.kernel_cols, spec.input_depth, weights, 0.0)
                        .unwrap()
                })
                .collect();
            Layer { spec, kernels }
        })
        .collect();
    Ok(NetworkParams { layers })
}

/// Per-layer activations cached for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: FeatureStack,
    pre: Vec<FeatureStack>,
    post: Vec<FeatureStack>,
    output: ImageMatrix,
}

impl ForwardTrace {
    pub fn output(&self) -> &ImageMatrix {
        &self.output
    }

    pub fn pre_activations(&self) -> &[FeatureStack] {
        &self.pre
    }
}

/// Forward pass; output keeps the spatial size of the input.
pub fn forward(x: &ImageMatrix, params: &NetworkParams) -> Result<ForwardTrace> {
    let input = FeatureStack::from_matrix(x);
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut post = Vec::with_capacity(params.layers.len());
    let mut current = input.clone();
    for layer in &params.layers {
        let z = conv2d_same(&current, &layer.kernels)?;
        let a = match layer.spec.activation {
            Activation::Relu => {
                let mut a = z.clone();
                for v in a.data_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                a
            }
            Activation::Linear => z.clone(),
        };
        pre.push(z);
        post.push(a.clone());
        current = a;
    }
    let output = current.to_matrix()?;
    Ok(ForwardTrace { input, pre, post, output })
}

/// Gradients for every filter and bias, shaped like the parameters.
/// `layers[l][k].bias` carries the bias gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<Vec<ConvKernel>>,
}

impl ParamGrads {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| {
                    l.kernels
                        .iter()
                        .map(|k| ConvKernel::zeros(k.height, k.width, k.depth))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (ka, kb) in a.iter_mut().zip(b) {
                for (w, v) in ka.weights.iter_mut().zip(&kb.weights) {
                    *w += v;
                }
                ka.bias += kb.bias;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for k in layer {
                for w in &mut k.weights {
                    *w *= factor;
                }
                k.bias *= factor;
            }
        }
    }
}

/// Reverse-mode pass: contracts the upstream matrix against the network
/// Jacobian, yielding d(sum_ij G_ij * Y_ij)/d(theta) for every parameter.
/// ReLU gates by the sign of the cached pre-activation (subgradient 0 at 0).
pub fn backward(
    trace: &ForwardTrace,
    params: &NetworkParams,
    output_grad: &ImageMatrix,
) -> Result<ParamGrads> {
    if output_grad.rows() != trace.output.rows() || output_grad.cols() != trace.output.cols() {
        return Err(Error::Dimension(format!(
            "output grad {}x{} does not match output {}x{}",
            output_grad.rows(),
            output_grad.cols(),
            trace.output.rows(),
            trace.output.cols()
        )));
    }
    let mut grads = ParamGrads::zeros_like(params);
    let mut upstream = FeatureStack::from_matrix(output_grad);
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        if layer.spec.activation == Activation::Relu {
            let pre = trace.pre[l].data();
            for (g, &z) in upstream.data_mut().iter_mut().zip(pre) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        let layer_input = if l == 0 { &trace.input } else { &trace.post[l - 1] };
        let conv_grads = conv2d_backward(layer_input, &layer.kernels, &upstream)?;
        grads.layers[l] = conv_grads.kernels;
        upstream = conv_grads.input;
    }
    Ok(grads)
}

/// In-place SGD update: every weight and bias decremented by rate * grad,
/// where the final layer's rate is eta * last_layer_ratio.
pub fn sgd_apply(
    params: &mut NetworkParams,
    grads: &ParamGrads,
    eta: f64,
    last_layer_ratio: f64,
) -> Result<()> {
    if grads.layers.len() != params.layers.len() {
        return Err(Error::Dimension("gradient layer count mismatch".into()));
    }
    let last = params.layers.len() - 1;
    for (l, (layer, glayer)) in params.layers.iter_mut().zip(&grads.layers).enumerate() {
        let rate = if l == last { eta * last_layer_ratio } else { eta };
        if layer.kernels.len() != glayer.len() {
            return Err(Error::Dimension("gradient kernel count mismatch".into()));
        }
        for (k, g) in layer.kernels.iter_mut().zip(glayer) {
            if k.weights.len() != g.weights.len() {
                return Err(Error::Dimension("gradient weight count mismatch".into()));
            }
            for (w, gw) in k.weights.iter_mut().zip(&g.weights) {
                *w -= rate * gw;
            }
            k.bias -= rate * g.bias;
        }
    }
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"DNSP";
const CHECKPOINT_VERSION: u16 = 1;

/// Binary checkpoint: magic "DNSP", version u16, layer count u16, then per
/// layer m, n, d, k as u32 LE, activation tag u8, then k*(m*n*d + 1) f64 LE
/// values (weights row-major then bias, kernel by kernel).
pub fn write_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.layers.len() as u16).to_le_bytes());
    for layer in &params.layers {
        let s = layer.spec;
        for dim in [s.kernel_rows, s.kernel_cols, s.input_depth, s.kernel_count] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.push(s.activation.tag());
        for k in &layer.kernels {
            for w in &k.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
            out.extend_from_slice(&k.bias.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<NetworkParams> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };

    if take(&mut pos, 4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let layer_count = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        }
        let activation = Activation::from_tag(take(&mut pos, 1)?[0])?;
        let [m, n, d, k] = dims;
        let spec = LayerSpec::new(m, n, d, k, activation);
        let mut kernels = Vec::with_capacity(k);
        for _ in 0..k {
            let mut weights = Vec::with_capacity(m * n * d);
            for _ in 0..m * n * d {
                weights.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            let bias = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            kernels.push(ConvKernel::new(m, n, d, weights, bias)?);
        }
        layers.push(Layer { spec, kernels });
    }
    let params = NetworkParams { layers };
    validate_specs(&params.specs())?;
    Ok(params)
}
