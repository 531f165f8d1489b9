//! Deterministic DSP primitives: FIR filtering, power-of-two transforms,
//! prototype design and the oversampled DFT analysis filter bank.

mod fft;
mod filterbank;
mod fir;
mod prototype;

pub use fft::{dft, idft, is_power_of_two, Dft};
pub use filterbank::{analysis_filterbank, AnalysisBank, SubbandFrame};
pub use fir::{fir_filter, DelayLine};
pub use prototype::{design_prototype, PrototypeFilter};

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// A uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Signal {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: u32) -> Result<Self> {
        Signal::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Finite impulse response of an acoustic path, p(n) or s(n).
#[derive(Debug, Clone, PartialEq)]
pub struct PathModel {
    taps: Vec<f64>,
}

impl PathModel {
    pub const DEFAULT_LEN: usize = 256;

    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("path model needs at least one tap"));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("path model has non-finite taps"));
        }
        Ok(PathModel { taps })
    }

    /// The identity path, a single unit tap.
    pub fn identity() -> Self {
        PathModel { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (xa, xb) in ca.zip(cb) {
        for j in 0..8 {
            acc[j] += xa[j] * xb[j];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
