use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{Dft, Signal};
use crate::error::{Error, Result};

/// Added to every Mel energy before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub n_mels: usize,
    pub win_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            n_mels: 40,
            win_ms: 30.0,
            hop_ms: 10.0,
        }
    }
}

impl FrameConfig {
    pub fn window_samples(&self, sample_rate_hz: u32) -> usize {
        (self.win_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate_hz: u32) -> usize {
        (self.hop_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }
}

/// `floor((n - win) / hop) + 1`, or zero when the signal is shorter than a window.
pub fn frame_count(num_samples: usize, window: usize, hop: usize) -> usize {
    if num_samples < window || hop == 0 {
        0
    } else {
        (num_samples - window) / hop + 1
    }
}

/// Natural-log Mel energies, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFeatureMatrix {
    frames: usize,
    n_mels: usize,
    data: Vec<f64>,
    pub config: FrameConfig,
}

impl MelFeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, config: FrameConfig) -> Result<Self> {
        let n_mels = config.n_mels;
        if rows.iter().any(|r| r.len() != n_mels) {
            return Err(Error::invalid("feature rows must have n_mels columns"));
        }
        Ok(MelFeatureMatrix {
            frames: rows.len(),
            n_mels,
            data: rows.into_iter().flatten().collect(),
            config,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.n_mels..(frame + 1) * self.n_mels]
    }

    pub fn get(&self, frame: usize, mel: usize) -> f64 {
        self.data[frame * self.n_mels + mel]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_mels.max(1)).take(self.frames)
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    // Slaney: linear below 1 kHz, logarithmic above
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if hz < MIN_LOG_HZ {
        hz / F_SP
    } else {
        min_log_mel + (hz / MIN_LOG_HZ).ln() / logstep
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel < min_log_mel {
        mel * F_SP
    } else {
        MIN_LOG_HZ * (logstep * (mel - min_log_mel)).exp()
    }
}

/// Triangular filters with Slaney band spacing from 0 Hz to Nyquist, peak
/// weight one. Returns `n_mels` rows of `n_fft/2 + 1` weights.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate_hz as f64 / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|b| {
                    let f = b as f64 * bin_hz;
                    let rising = (f - lo) / (mid - lo);
                    let falling = (hi - f) / (hi - mid);
                    rising.min(falling).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Log-Mel spectrogram: periodic Hann window, zero-padded power-of-two FFT,
/// power spectrum, triangular Mel filters, `ln(energy + 1e-10)`.
pub fn logmel(mono: &Signal, config: &FrameConfig) -> Result<MelFeatureMatrix> {
    let fs = mono.sample_rate_hz();
    let win = config.window_samples(fs);
    let hop = config.hop_samples(fs);
    if win == 0 || hop == 0 || config.n_mels == 0 {
        return Err(Error::invalid(
            "frame window, hop and Mel count must be positive",
        ));
    }
    let n_fft = win.next_power_of_two();
    let dft = Dft::new(n_fft)?;
    let window: Vec<f64> = (0..win)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / win as f64).cos())
        .collect();
    let filters = mel_filterbank(config.n_mels, n_fft, fs);
    // sparse support of each triangle
    let support: Vec<(usize, usize)> = filters
        .iter()
        .map(|f| {
            let first = f.iter().position(|&w| w > 0.0).unwrap_or(0);
            let last = f.iter().rposition(|&w| w > 0.0).map_or(0, |l| l + 1);
            (first, last.max(first))
        })
        .collect();

    let frames = frame_count(mono.len(), win, hop);
    let x = mono.samples();
    let mut buf = vec![Complex64::default(); n_fft];
    let mut power = vec![0.0; n_fft / 2 + 1];
    let mut data = Vec::with_capacity(frames * config.n_mels);
    for t in 0..frames {
        let seg = &x[t * hop..t * hop + win];
        for (b, (s, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex64::new(s * w, 0.0);
        }
        buf[win..]
            .iter_mut()
            .for_each(|b| *b = Complex64::default());
        dft.forward(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p = b.norm_sqr();
        }
        for (f, &(a, b)) in filters.iter().zip(&support) {
            let e: f64 = f[a..b].iter().zip(&power[a..b]).map(|(w, p)| w * p).sum();
            data.push((e + LOG_FLOOR).ln());
        }
    }
    Ok(MelFeatureMatrix {
        frames,
        n_mels: config.n_mels,
        data,
        config: *config,
    })
}

/// Frame is active iff the mean of its log-Mel values exceeds `threshold`
/// (natural-log units).
pub fn energy_detector(features: &MelFeatureMatrix, threshold: f64) -> Vec<bool> {
    features
        .rows()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64 > threshold)
        .collect()
}
