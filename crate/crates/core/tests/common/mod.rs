//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use asc_core::sad::{CrnnWeights, MelFeatureMatrix};

/// Straight transcription of the majority-vote hangover as a pull loop over
/// zero-padded FIFO windows. Written independently of the streaming state
/// machine in the library.
pub fn reference_hangover(input: &[bool], x: usize, k: usize) -> Vec<bool> {
    let len = input.len();
    if len < x {
        return input.to_vec();
    }
    let window = |r: usize| -> Vec<bool> { (r..r + x).map(|i| i < len && input[i]).collect() };
    let mut out = vec![false; len];
    let mut r = 0;
    let mut idx = 0;
    while idx < len {
        let w = window(r);
        r += 1;
        let ones = w.iter().filter(|&&b| b).count();
        if ones > x / 2 {
            let s = idx;
            for p in (s + 1).saturating_sub(x)..=s {
                out[p] = true;
            }
            let mut j = 1;
            loop {
                let _discarded = window(r);
                r += 1;
                if j <= k - x && idx < len {
                    idx = s + j;
                    if idx < len {
                        out[idx] = true;
                    }
                    j += 1;
                } else {
                    idx += 1;
                    break;
                }
            }
        } else if idx == 0 {
            for (p, &b) in w.iter().enumerate() {
                out[p] = b;
            }
            idx = x;
        } else {
            out[idx] = w[x - 1];
            idx += 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reference CRNN: channel-major tensors, explicit zero padding, one scalar
// expression per output. Slow and deliberately unlike the library code.

pub type Tensor = Vec<Vec<Vec<f64>>>; // [channel][time][mel]

fn ref_conv_block(
    input: &Tensor,
    kernel: &[f64],
    bias: &[f64],
    bn: [&[f64]; 4],
    pool: usize,
    slope: f64,
    eps: f64,
) -> Tensor {
    let cin = input.len();
    let t_len = input[0].len();
    let f_len = input[0][0].len();
    let cout = bias.len();
    // K[dt][df][ci][co] flattened
    let k =
        |dt: usize, df: usize, ci: usize, co: usize| kernel[((dt * 3 + df) * cin + ci) * cout + co];
    let padded = |c: usize, t: isize, f: isize| -> f64 {
        if t < 0 || f < 0 || t as usize >= t_len || f as usize >= f_len {
            0.0
        } else {
            input[c][t as usize][f as usize]
        }
    };
    let [gamma, beta, mean, var] = bn;
    let mut out = vec![vec![vec![0.0; f_len / pool]; t_len]; cout];
    for co in 0..cout {
        for t in 0..t_len {
            let mut act = vec![0.0; f_len];
            for (f, a) in act.iter_mut().enumerate() {
                let mut s = bias[co];
                for ci in 0..cin {
                    for dt in 0..3 {
                        for df in 0..3 {
                            s += k(dt, df, ci, co)
                                * padded(
                                    ci,
                                    t as isize + dt as isize - 1,
                                    f as isize + df as isize - 1,
                                );
                        }
                    }
                }
                let normed = gamma[co] * (s - mean[co]) / (var[co] + eps).sqrt() + beta[co];
                *a = if normed < 0.0 { normed * slope } else { normed };
            }
            for fo in 0..f_len / pool {
                out[co][t][fo] = act[fo * pool..fo * pool + pool]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
    }
    out
}

fn ref_gru(seq: &[Vec<f64>], kernel: &[f64], rec: &[f64], bias: &[f64]) -> Vec<Vec<f64>> {
    let units = bias.len() / 3;
    let d = seq.first().map_or(0, |v| v.len());
    let hs = |v: f64| (0.2 * v + 0.5).max(0.0).min(1.0);
    let wx = |x: &[f64], col: usize| {
        (0..d)
            .map(|i| x[i] * kernel[i * 3 * units + col])
            .sum::<f64>()
    };
    let uh = |h: &[f64], col: usize| {
        (0..units)
            .map(|i| h[i] * rec[i * 3 * units + col])
            .sum::<f64>()
    };
    let mut h = vec![0.0; units];
    let mut outs = Vec::new();
    for x in seq {
        let z: Vec<f64> = (0..units)
            .map(|j| hs(wx(x, j) + uh(&h, j) + bias[j]))
            .collect();
        let r: Vec<f64> = (0..units)
            .map(|j| hs(wx(x, units + j) + uh(&h, units + j) + bias[units + j]))
            .collect();
        let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
        let hh: Vec<f64> = (0..units)
            .map(|j| (wx(x, 2 * units + j) + uh(&rh, 2 * units + j) + bias[2 * units + j]).tanh())
            .collect();
        h = (0..units)
            .map(|j| z[j] * h[j] + (1.0 - z[j]) * hh[j])
            .collect();
        outs.push(h.clone());
    }
    outs
}

/// Output of the three conv blocks, `[channel][time][mel]`.
pub fn reference_conv_stack(features: &MelFeatureMatrix, w: &CrnnWeights) -> Tensor {
    let t_len = features.frames();
    let mut x: Tensor = vec![(0..t_len).map(|t| features.row(t).to_vec()).collect()];
    for (block, pool) in w.conv.iter().zip([5, 4, 2]) {
        x = ref_conv_block(
            &x,
            &block.kernel,
            &block.bias,
            [
                &block.gamma,
                &block.beta,
                &block.moving_mean,
                &block.moving_variance,
            ],
            pool,
            w.frontend.leaky_slope,
            w.frontend.bn_epsilon,
        );
    }
    x
}

pub fn reference_crnn(features: &MelFeatureMatrix, w: &CrnnWeights) -> Vec<f64> {
    let t_len = features.frames();
    let x = reference_conv_stack(features, w);
    // flatten [channel][time][mel] to per-frame vectors ordered (mel, channel)
    let mels = x[0][0].len();
    let mut seq: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            (0..mels)
                .flat_map(|f| x.iter().map(move |ch| ch[t][f]))
                .collect()
        })
        .collect();
    for g in &w.gru {
        seq = ref_gru(&seq, &g.kernel, &g.recurrent_kernel, &g.bias);
    }
    seq.iter()
        .map(|h| {
            let z: f64 = h
                .iter()
                .zip(&w.dense.kernel)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + w.dense.bias;
            1.0 / (1.0 + (-z).exp())
        })
        .collect()
}
