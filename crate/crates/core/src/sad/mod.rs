//! Snoring activity detection: log-Mel front end, CRNN inference, thresholding
//! and a weight-free energy detector.

mod crnn;
mod features;
mod weights_file;

pub use crnn::{crnn_forward, ConvBlock, CrnnWeights, DenseLayer, GruLayer, MEL_POOLS};
pub use features::{
    energy_detector, frame_count, logmel, mel_filterbank, FrameConfig, MelFeatureMatrix, LOG_FLOOR,
};
pub use weights_file::{read_weights, write_weights, FrontendConstants, MelVariant, WEIGHTS_MAGIC};

use crate::dsp::Signal;
use crate::error::{Error, Result};

/// Decision threshold on snore probabilities; equality counts as non-snore.
pub const BINARIZE_THRESHOLD: f64 = 0.5;

/// Per-frame snore probabilities and their binary decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionStream {
    pub probabilities: Vec<f64>,
    pub binary: Vec<bool>,
    pub hop_ms: f64,
}

impl PredictionStream {
    pub fn from_probabilities(probabilities: Vec<f64>, hop_ms: f64) -> Self {
        let binary = binarize(&probabilities);
        PredictionStream {
            probabilities,
            binary,
            hop_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.binary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.binary.is_empty()
    }
}

/// Average the two channels of a stereo recording.
pub fn to_mono(left: &Signal, right: &Signal) -> Result<Signal> {
    if left.len() != right.len() {
        return Err(Error::invalid(format!(
            "channel lengths differ: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    if left.sample_rate_hz() != right.sample_rate_hz() {
        return Err(Error::invalid("channel sample rates differ"));
    }
    let mono = left
        .samples()
        .iter()
        .zip(right.samples())
        .map(|(l, r)| (l + r) / 2.0)
        .collect();
    Signal::new(mono, left.sample_rate_hz())
}

/// `p > 0.5` marks a snoring frame.
pub fn binarize(probabilities: &[f64]) -> Vec<bool> {
    probabilities
        .iter()
        .map(|&p| p > BINARIZE_THRESHOLD)
        .collect()
}
