use super::{dot, PathModel, Signal};
use crate::error::{Error, Result};

/// Causal convolution with silent pre-history; the output has the input's length.
pub fn fir_filter(input: &Signal, path: &PathModel) -> Result<Signal> {
    let taps = path.taps();
    if taps.is_empty() {
        return Err(Error::invalid("empty tap set"));
    }
    let reversed: Vec<f64> = taps.iter().rev().copied().collect();
    let pad = taps.len() - 1;
    let mut padded = vec![0.0; pad + input.len()];
    padded[pad..].copy_from_slice(input.samples());

    let out: Vec<f64> = (0..input.len())
        .map(|n| dot(&reversed, &padded[n..n + taps.len()]))
        .collect();
    Signal::new(out, input.sample_rate_hz())
}

/// Fixed-length history of the most recent samples, readable as one
/// contiguous slice ordered oldest to newest.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    len: usize,
    pos: usize,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "delay line length must be positive");
        DelayLine {
            buf: vec![0.0; 2 * len],
            len,
            pos: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        // every sample is written twice so that `recent` never wraps
        self.buf[self.pos] = x;
        self.buf[self.pos + self.len] = x;
        self.pos += 1;
        if self.pos == self.len {
            self.pos = 0;
        }
    }

    /// The last `len` samples, oldest first; the newest sample is the final element.
    #[inline]
    pub fn recent(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
    }

    pub fn is_silent(&self) -> bool {
        self.recent().iter().all(|&v| v == 0.0)
    }
}
