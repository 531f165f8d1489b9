use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::MelFeatureMatrix;
use super::weights_file::FrontendConstants;
use crate::error::{Error, Result};

/// Max-pool factors along the Mel axis of the three convolution blocks.
pub const MEL_POOLS: [usize; 3] = [5, 4, 2];
pub const CONV_CHANNELS: usize = 32;
pub const GRU_UNITS: usize = 32;
const KERNEL: usize = 3;

/// 3x3 convolution (same padding, stride 1) + batch norm (inference) +
/// Leaky ReLU + max-pool over Mel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub in_channels: usize,
    /// Layout `[time][mel][in][out]`.
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub moving_mean: Vec<f64>,
    pub moving_variance: Vec<f64>,
}

/// GRU with gates ordered (update, reset, candidate) in the packed matrices
/// and the reset gate applied to the state before the recurrent product.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    pub input_dim: usize,
    /// `[input_dim][3 * units]`
    pub kernel: Vec<f64>,
    /// `[units][3 * units]`
    pub recurrent_kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub kernel: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrnnWeights {
    pub frontend: FrontendConstants,
    pub conv: Vec<ConvBlock>,
    pub gru: Vec<GruLayer>,
    pub dense: DenseLayer,
}

/// Mel bins left after the three pooling stages.
pub(crate) fn pooled_mels(n_mels: usize) -> usize {
    MEL_POOLS.iter().fold(n_mels, |n, p| n / p)
}

impl CrnnWeights {
    /// Expected `(name, dims)` of every parameter tensor, in file order.
    pub fn layer_shapes(frontend: &FrontendConstants) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::new();
        for i in 0..MEL_POOLS.len() {
            let cin = if i == 0 { 1 } else { CONV_CHANNELS };
            let n = i + 1;
            shapes.push((
                format!("conv{n}.kernel"),
                vec![KERNEL, KERNEL, cin, CONV_CHANNELS],
            ));
            shapes.push((format!("conv{n}.bias"), vec![CONV_CHANNELS]));
            for p in ["gamma", "beta", "moving_mean", "moving_variance"] {
                shapes.push((format!("bn{n}.{p}"), vec![CONV_CHANNELS]));
            }
        }
        let gru_in = [CONV_CHANNELS * pooled_mels(frontend.n_mels), GRU_UNITS];
        for (i, &d) in gru_in.iter().enumerate() {
            let n = i + 1;
            shapes.push((format!("gru{n}.kernel"), vec![d, 3 * GRU_UNITS]));
            shapes.push((
                format!("gru{n}.recurrent_kernel"),
                vec![GRU_UNITS, 3 * GRU_UNITS],
            ));
            shapes.push((format!("gru{n}.bias"), vec![3 * GRU_UNITS]));
        }
        shapes.push(("dense.kernel".into(), vec![GRU_UNITS, 1]));
        shapes.push(("dense.bias".into(), vec![1]));
        shapes
    }

    /// Build from named tensors in `layer_shapes` order.
    pub(crate) fn from_tensors(
        frontend: FrontendConstants,
        tensors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let shapes = Self::layer_shapes(&frontend);
        if tensors.len() != shapes.len() {
            return Err(Error::weights("*", "wrong number of tensors"));
        }
        for ((name, dims), t) in shapes.iter().zip(&tensors) {
            if t.len() != dims.iter().product::<usize>() {
                return Err(Error::weights(
                    name.clone(),
                    "element count does not match shape",
                ));
            }
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().unwrap();
        let conv = (0..MEL_POOLS.len())
            .map(|i| ConvBlock {
                in_channels: if i == 0 { 1 } else { CONV_CHANNELS },
                kernel: next(),
                bias: next(),
                gamma: next(),
                beta: next(),
                moving_mean: next(),
                moving_variance: next(),
            })
            .collect();
        let gru_in = [CONV_CHANNELS * pooled_mels(frontend.n_mels), GRU_UNITS];
        let gru = gru_in
            .iter()
            .map(|&d| GruLayer {
                input_dim: d,
                kernel: next(),
                recurrent_kernel: next(),
                bias: next(),
            })
            .collect();
        let dense = DenseLayer {
            kernel: next(),
            bias: next()[0],
        };
        let w = CrnnWeights {
            frontend,
            conv,
            gru,
            dense,
        };
        w.validate()?;
        Ok(w)
    }

    /// Tensors in `layer_shapes` order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for c in &self.conv {
            out.extend([
                &c.kernel[..],
                &c.bias,
                &c.gamma,
                &c.beta,
                &c.moving_mean,
                &c.moving_variance,
            ]);
        }
        for g in &self.gru {
            out.extend([&g.kernel[..], &g.recurrent_kernel, &g.bias]);
        }
        out.push(&self.dense.kernel);
        out.push(std::slice::from_ref(&self.dense.bias));
        out
    }

    pub fn validate(&self) -> Result<()> {
        if pooled_mels(self.frontend.n_mels) == 0 {
            return Err(Error::weights(
                "header",
                format!(
                    "{} Mel bands do not survive the pooling stages",
                    self.frontend.n_mels
                ),
            ));
        }
        if self.conv.len() != MEL_POOLS.len() || self.gru.len() != 2 {
            return Err(Error::weights("*", "unexpected layer count"));
        }
        let shapes = Self::layer_shapes(&self.frontend);
        for ((name, dims), t) in shapes.iter().zip(self.tensors()) {
            if t.len() != dims.iter().product::<usize>() {
                return Err(Error::weights(
                    name.clone(),
                    "element count does not match shape",
                ));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::weights(name.clone(), "non-finite value"));
            }
        }
        for (i, c) in self.conv.iter().enumerate() {
            if c.moving_variance
                .iter()
                .any(|&v| v + self.frontend.bn_epsilon <= 0.0)
            {
                return Err(Error::weights(
                    format!("bn{}.moving_variance", i + 1),
                    "variance plus epsilon must be positive",
                ));
            }
        }
        Ok(())
    }

    /// Every parameter zero except a unit batch-norm variance. The network
    /// then outputs exactly 0.5 for every frame.
    pub fn zeros(frontend: FrontendConstants) -> Self {
        let tensors = Self::layer_shapes(&frontend)
            .into_iter()
            .map(|(name, dims)| {
                let fill = if name.ends_with("moving_variance") {
                    1.0
                } else {
                    0.0
                };
                vec![fill; dims.iter().product()]
            })
            .collect();
        Self::from_tensors(frontend, tensors).expect("zero weights are valid")
    }

    /// Seeded random weights, uniform in `[-scale, scale]`, with batch-norm
    /// statistics near identity. Values are f32-representable so they survive
    /// a round trip through the weight file.
    pub fn random(frontend: FrontendConstants, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = Self::layer_shapes(&frontend)
            .into_iter()
            .map(|(name, dims)| {
                let n: usize = dims.iter().product();
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.gen_range(-1.0..1.0);
                        let v = if name.ends_with("gamma") {
                            1.0 + 0.2 * u
                        } else if name.ends_with("moving_variance") {
                            1.0 + 0.5 * u
                        } else {
                            scale * u
                        };
                        v as f32 as f64
                    })
                    .collect()
            })
            .collect();
        Self::from_tensors(frontend, tensors).expect("random weights are valid")
    }
}

fn hard_sigmoid(x: f64) -> f64 {
    (0.2 * x + 0.5).clamp(0.0, 1.0)
}

/// Logistic output kept strictly inside (0, 1).
fn sigmoid(x: f64) -> f64 {
    const EDGE: f64 = 1e-15;
    (1.0 / (1.0 + (-x).exp())).clamp(EDGE, 1.0 - EDGE)
}

/// Tensor layout `[time][mel][channel]`.
fn conv_block(
    input: &[f64],
    frames: usize,
    mels: usize,
    block: &ConvBlock,
    pool: usize,
    slope: f64,
    eps: f64,
) -> (Vec<f64>, usize) {
    let cin = block.in_channels;
    let cout = block.bias.len();
    let scale: Vec<f64> = block
        .gamma
        .iter()
        .zip(&block.moving_variance)
        .map(|(g, v)| g / (v + eps).sqrt())
        .collect();

    let mut act = vec![0.0; frames * mels * cout];
    for t in 0..frames {
        for f in 0..mels {
            let o = &mut act[(t * mels + f) * cout..][..cout];
            o.copy_from_slice(&block.bias);
            for dt in 0..KERNEL {
                let Some(ti) = (t + dt).checked_sub(1).filter(|&ti| ti < frames) else {
                    continue;
                };
                for df in 0..KERNEL {
                    let Some(fi) = (f + df).checked_sub(1).filter(|&fi| fi < mels) else {
                        continue;
                    };
                    let inp = &input[(ti * mels + fi) * cin..][..cin];
                    for (ci, &v) in inp.iter().enumerate() {
                        let k = &block.kernel[((dt * KERNEL + df) * cin + ci) * cout..][..cout];
                        for (oc, kc) in o.iter_mut().zip(k) {
                            *oc += v * kc;
                        }
                    }
                }
            }
            for (c, v) in o.iter_mut().enumerate() {
                let bn = (*v - block.moving_mean[c]) * scale[c] + block.beta[c];
                *v = if bn >= 0.0 { bn } else { slope * bn };
            }
        }
    }

    let out_mels = mels / pool;
    let mut out = vec![f64::NEG_INFINITY; frames * out_mels * cout];
    for t in 0..frames {
        for fo in 0..out_mels {
            let dst = &mut out[(t * out_mels + fo) * cout..][..cout];
            for j in 0..pool {
                let src = &act[(t * mels + fo * pool + j) * cout..][..cout];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = d.max(*s);
                }
            }
        }
    }
    (out, out_mels)
}

fn gru_layer(input: &[f64], frames: usize, layer: &GruLayer) -> Vec<f64> {
    let u = layer.bias.len() / 3;
    let d = layer.input_dim;
    let w3 = 3 * u;
    let mut h = vec![0.0; u];
    let mut out = Vec::with_capacity(frames * u);
    let mut gx = vec![0.0; w3];
    let mut gh = vec![0.0; w3];
    for t in 0..frames {
        let x = &input[t * d..(t + 1) * d];
        gx.copy_from_slice(&layer.bias);
        for (i, &xi) in x.iter().enumerate() {
            for (g, k) in gx.iter_mut().zip(&layer.kernel[i * w3..(i + 1) * w3]) {
                *g += xi * k;
            }
        }
        gh.iter_mut().for_each(|g| *g = 0.0);
        for (i, &hi) in h.iter().enumerate() {
            let row = &layer.recurrent_kernel[i * w3..(i + 1) * w3];
            for (g, k) in gh[..2 * u].iter_mut().zip(&row[..2 * u]) {
                *g += hi * k;
            }
        }
        let z: Vec<f64> = (0..u).map(|j| hard_sigmoid(gx[j] + gh[j])).collect();
        let r: Vec<f64> = (0..u)
            .map(|j| hard_sigmoid(gx[u + j] + gh[u + j]))
            .collect();
        for (i, (&hi, &ri)) in h.iter().zip(&r).enumerate() {
            let rh = ri * hi;
            let row = &layer.recurrent_kernel[i * w3 + 2 * u..(i + 1) * w3];
            for (g, k) in gh[2 * u..].iter_mut().zip(row) {
                *g += rh * k;
            }
        }
        for j in 0..u {
            let cand = (gx[2 * u + j] + gh[2 * u + j]).tanh();
            h[j] = z[j] * h[j] + (1.0 - z[j]) * cand;
        }
        out.extend_from_slice(&h);
    }
    out
}

/// Snore probability for every frame of `features`.
pub fn crnn_forward(features: &MelFeatureMatrix, weights: &CrnnWeights) -> Result<Vec<f64>> {
    let fe = &weights.frontend;
    if features.n_mels() != fe.n_mels {
        return Err(Error::invalid(format!(
            "features have {} Mel bands, weights expect {}",
            features.n_mels(),
            fe.n_mels
        )));
    }
    if features.config.win_ms != fe.win_ms || features.config.hop_ms != fe.hop_ms {
        return Err(Error::invalid(
            "feature framing does not match the weights' front-end constants",
        ));
    }
    let frames = features.frames();
    let mut x: Vec<f64> = features.rows().flatten().copied().collect();
    let mut mels = features.n_mels();
    for (block, &pool) in weights.conv.iter().zip(&MEL_POOLS) {
        let (y, m) = conv_block(&x, frames, mels, block, pool, fe.leaky_slope, fe.bn_epsilon);
        x = y;
        mels = m;
    }
    for layer in &weights.gru {
        x = gru_layer(&x, frames, layer);
    }
    Ok(x.chunks_exact(GRU_UNITS)
        .map(|h| {
            let logit: f64 = h
                .iter()
                .zip(&weights.dense.kernel)
                .map(|(a, b)| a * b)
                .sum();
            sigmoid(logit + weights.dense.bias)
        })
        .collect())
}
