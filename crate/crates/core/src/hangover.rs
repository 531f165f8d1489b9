//! Majority-vote hangover smoothing of binary snore predictions.
//!
//! A FIFO of the last `X` predictions is read once per 10 ms frame. A window
//! with more ones than zeros marks the onset of an event: the window's `X`
//! output positions are set and the following `k - X` outputs are forced to
//! one while the corresponding reads are discarded. Otherwise predictions
//! pass through (the first window wholesale, then one sample per read).
//!
//! The read that ends a forced run is also discarded, so every event
//! advances the read position one frame past the output index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BUFFER: usize = 3;
pub const DEFAULT_EXTENSION: usize = 100;
/// Prediction count of a ten-minute file at 10 ms resolution.
pub const DEFAULT_STREAM_LEN: usize = 60_001;

/// `buffer` is the FIFO size `X` (odd); `extension` is the event length `k`
/// (`k >= X`). The stream length `L` is the length of the input sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HangoverParams {
    pub buffer: usize,
    pub extension: usize,
}

impl Default for HangoverParams {
    fn default() -> Self {
        HangoverParams {
            buffer: DEFAULT_BUFFER,
            extension: DEFAULT_EXTENSION,
        }
    }
}

impl HangoverParams {
    pub fn new(buffer: usize, extension: usize) -> Result<Self> {
        let p = HangoverParams { buffer, extension };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffer == 0 || self.buffer % 2 == 0 {
            return Err(Error::invalid(format!(
                "hangover buffer size must be odd and positive, got {}",
                self.buffer
            )));
        }
        if self.extension < self.buffer {
            return Err(Error::invalid(format!(
                "hangover extension {} is shorter than the buffer {}",
                self.extension, self.buffer
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Scan,
    Forcing { start: usize, step: usize },
}

/// Incremental hangover. Outputs become final `X - 1` frames behind the
/// output index, since an onset rewrites the window it was detected in.
#[derive(Debug, Clone)]
pub struct HangoverStream {
    params: HangoverParams,
    window: Vec<bool>,
    pushed: usize,
    out: Vec<bool>,
    out_idx: usize,
    emitted: usize,
    phase: Phase,
}

impl HangoverStream {
    pub fn new(params: HangoverParams) -> Result<Self> {
        params.validate()?;
        Ok(HangoverStream {
            params,
            window: Vec::with_capacity(params.buffer),
            pushed: 0,
            out: Vec::new(),
            out_idx: 0,
            emitted: 0,
            phase: Phase::Scan,
        })
    }

    fn set(&mut self, pos: usize, value: bool, limit: Option<usize>) {
        if limit.is_some_and(|l| pos >= l) {
            return;
        }
        if self.out.len() <= pos {
            self.out.resize(pos + 1, false);
        }
        self.out[pos] = value;
    }

    /// One FIFO read. `limit` is the stream length once known. Returns
    /// whether the loop continues.
    fn read(&mut self, limit: Option<usize>) -> bool {
        let x = self.params.buffer;
        let below_limit = |idx: usize| limit.map_or(true, |l| idx < l);
        match self.phase {
            Phase::Scan => {
                if !below_limit(self.out_idx) {
                    return false;
                }
                let ones = self.window.iter().filter(|&&b| b).count();
                if ones > x - ones {
                    let start = self.out_idx;
                    for pos in (start + 1).saturating_sub(x)..=start {
                        self.set(pos, true, limit);
                    }
                    self.phase = Phase::Forcing { start, step: 1 };
                } else if self.out_idx == 0 {
                    for pos in 0..x {
                        let v = self.window[pos];
                        self.set(pos, v, limit);
                    }
                    self.out_idx = x;
                } else {
                    let v = self.window[x - 1];
                    self.set(self.out_idx, v, limit);
                    self.out_idx += 1;
                }
            }
            Phase::Forcing { start, step } => {
                // this read is discarded
                if step <= self.params.extension - x && below_limit(self.out_idx) {
                    self.out_idx = start + step;
                    self.set(self.out_idx, true, limit);
                    self.phase = Phase::Forcing {
                        start,
                        step: step + 1,
                    };
                } else {
                    self.out_idx += 1;
                    self.phase = Phase::Scan;
                }
            }
        }
        true
    }

    fn shift_in(&mut self, bit: bool) {
        if self.window.len() == self.params.buffer {
            self.window.remove(0);
        }
        self.window.push(bit);
    }

    /// Feed one prediction; returns the outputs that became final.
    pub fn push(&mut self, bit: bool) -> Vec<bool> {
        self.shift_in(bit);
        self.pushed += 1;
        if self.pushed >= self.params.buffer {
            self.read(None);
        }
        self.drain_final()
    }

    fn drain_final(&mut self) -> Vec<bool> {
        let settled = (self.out_idx + 1).saturating_sub(self.params.buffer);
        let settled = settled.min(self.out.len());
        if settled <= self.emitted {
            return Vec::new();
        }
        let chunk = self.out[self.emitted..settled].to_vec();
        self.emitted = settled;
        chunk
    }

    /// End of stream: finish the algorithm over zero-padded reads and return
    /// every output not yet emitted.
    pub fn finish(mut self) -> Vec<bool> {
        let len = self.pushed;
        if len < self.params.buffer {
            // the FIFO never fills; pass the stream through unchanged
            let mut all = self.window.clone();
            all.drain(..self.emitted.min(all.len()));
            return all;
        }
        self.out.truncate(len);
        loop {
            self.shift_in(false);
            if !self.read(Some(len)) {
                break;
            }
        }
        self.out.resize(len, false);
        self.out[self.emitted..].to_vec()
    }
}

/// Batch hangover over a complete stream; the output has the input's length.
pub fn hangover(predictions: &[bool], params: &HangoverParams) -> Result<Vec<bool>> {
    let mut stream = HangoverStream::new(*params)?;
    let mut out = Vec::with_capacity(predictions.len());
    for &b in predictions {
        out.extend(stream.push(b));
    }
    out.extend(stream.finish());
    debug_assert_eq!(out.len(), predictions.len());
    Ok(out)
}

/// Zero-order hold of per-frame bits onto the sample grid: frame `i` covers
/// samples `[i h, (i + 1) h)` with `h = hop_ms * fs / 1000`. Samples past the
/// last frame hold its bit; an empty stream gives a closed gate.
pub fn gate_stream(
    bits: &[bool],
    hop_ms: f64,
    sample_rate_hz: u32,
    num_samples: usize,
) -> Result<Vec<bool>> {
    let hop = (hop_ms * sample_rate_hz as f64 / 1000.0).round() as usize;
    if hop == 0 {
        return Err(Error::invalid("frame hop is shorter than one sample"));
    }
    let last = bits.last().copied().unwrap_or(false);
    Ok((0..num_samples)
        .map(|n| bits.get(n / hop).copied().unwrap_or(last))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn all_zero_stays_zero() {
        let out = hangover(&[false; 500], &HangoverParams::default()).unwrap();
        assert_eq!(out, vec![false; 500]);
    }

    #[test]
    fn hand_traced_onset() {
        let input = bits(&[0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let out = hangover(&input, &HangoverParams::new(3, 6).unwrap()).unwrap();
        let expected = bits(&[0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(out, expected);
    }

    #[test]
    fn isolated_one_passes_through() {
        for pos in 0..12 {
            let mut input = vec![false; 12];
            input[pos] = true;
            let out = hangover(&input, &HangoverParams::new(3, 10).unwrap()).unwrap();
            assert_eq!(out, input, "position {pos}");
        }
    }

    #[test]
    fn short_stream_is_copied() {
        let input = bits(&[1, 1]);
        assert_eq!(
            hangover(&input, &HangoverParams::new(3, 5).unwrap()).unwrap(),
            input
        );
        assert!(hangover(&[], &HangoverParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(HangoverParams::new(4, 10).is_err());
        assert!(HangoverParams::new(5, 3).is_err());
        assert!(HangoverParams::new(0, 3).is_err());
    }

    #[test]
    fn onset_in_first_window_is_clamped() {
        let input = bits(&[1, 1, 1, 0, 0, 0, 0, 0, 0, 0]);
        let out = hangover(&input, &HangoverParams::new(3, 5).unwrap()).unwrap();
        // start index 0: only position 0 from the window, then k - X forced ones
        assert_eq!(out, bits(&[1, 1, 1, 0, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn stream_emission_lags_by_buffer() {
        let mut s = HangoverStream::new(HangoverParams::new(5, 20).unwrap()).unwrap();
        let mut emitted = 0;
        for i in 0..200 {
            emitted += s.push(i % 7 == 0).len();
            if i >= 10 {
                assert!(emitted + 5 >= i, "emitted {emitted} after {i}");
            }
        }
    }

    #[test]
    fn gate_hold() {
        let g = gate_stream(&[true, false], 10.0, 44_100, 882).unwrap();
        assert!(g[..441].iter().all(|&b| b));
        assert!(g[441..].iter().all(|&b| !b));
        let tail = gate_stream(&[false, true], 10.0, 44_100, 1000).unwrap();
        assert!(tail[882..].iter().all(|&b| b));
        assert!(gate_stream(&[true; 4], 10.0, 44_100, 1764)
            .unwrap()
            .iter()
            .all(|&b| b));
    }
}
