use num_complex::Complex64;

use super::{DelayLine, Dft, PrototypeFilter, Signal};
use crate::error::{Error, Result};

/// One decimated time step of the analysis bank.
///
/// `values` holds subbands `0..=M/2`; for real input the remaining bands are
/// the conjugates `X[M-m] = conj(X[m])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFrame {
    pub index: u64,
    pub values: Vec<Complex64>,
    pub subbands: usize,
    pub decimation: usize,
}

/// Streaming M-band DFT-modulated analysis bank decimated by `D = M/2`.
///
/// At decimated index `j` subband `m` is
/// `sum_i h[i] x[jD - i] exp(+2 pi i m (jD - i) / M)`.
/// Evaluated in polyphase form: the prototype-weighted history is folded
/// into `M` residues of the absolute time index, then one unscaled inverse
/// DFT of size `M` applies every modulation at once.
#[derive(Debug, Clone)]
pub struct AnalysisBank {
    taps: Vec<f64>,
    history: DelayLine,
    subbands: usize,
    decimation: usize,
    time: u64,
    frames: u64,
    dft: Dft,
    fold: Vec<Complex64>,
}

impl AnalysisBank {
    pub fn new(proto: &PrototypeFilter, subbands: usize) -> Result<Self> {
        if subbands == 0 || subbands % 2 != 0 {
            return Err(Error::invalid(format!(
                "subband count must be even and positive, got {subbands}"
            )));
        }
        Ok(AnalysisBank {
            taps: proto.taps().iter().rev().copied().collect(),
            history: DelayLine::new(proto.len()),
            subbands,
            decimation: subbands / 2,
            time: 0,
            frames: 0,
            dft: Dft::new(subbands)?,
            fold: vec![Complex64::default(); subbands],
        })
    }

    pub fn subbands(&self) -> usize {
        self.subbands
    }

    pub fn decimation(&self) -> usize {
        self.decimation
    }

    /// Number of samples pushed so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Push one sample; returns all `M` subbands when the sample lands on the
    /// decimation grid.
    pub fn push_all(&mut self, sample: f64) -> Option<&[Complex64]> {
        let n = self.time;
        self.history.push(sample);
        self.time += 1;
        if n % self.decimation as u64 != 0 {
            return None;
        }
        let m = self.subbands;
        self.fold.iter_mut().for_each(|v| *v = Complex64::default());
        // recent() is oldest first, so recent()[k] holds x[n - (L-1-k)] and
        // the reversed taps line up element-wise
        let hist = self.history.recent();
        let len = hist.len();
        let mut residue = ((n + 1) as i64 - len as i64).rem_euclid(m as i64) as usize;
        for (h, x) in self.taps.iter().zip(hist) {
            self.fold[residue].re += h * x;
            residue += 1;
            if residue == m {
                residue = 0;
            }
        }
        self.dft.inverse_unscaled(&mut self.fold);
        self.frames += 1;
        Some(&self.fold)
    }

    /// Push one sample; returns the retained subbands `0..=M/2` on grid samples.
    pub fn push(&mut self, sample: f64) -> Option<SubbandFrame> {
        let index = self.frames;
        let keep = self.subbands / 2 + 1;
        let (subbands, decimation) = (self.subbands, self.decimation);
        self.push_all(sample).map(|all| SubbandFrame {
            index,
            values: all[..keep].to_vec(),
            subbands,
            decimation,
        })
    }

    pub fn reset(&mut self) {
        self.history.clear();
        self.time = 0;
        self.frames = 0;
    }
}

/// Batch analysis of a whole signal, one frame per `D` input samples.
pub fn analysis_filterbank(
    input: &Signal,
    proto: &PrototypeFilter,
    subbands: usize,
) -> Result<Vec<SubbandFrame>> {
    let mut bank = AnalysisBank::new(proto, subbands)?;
    Ok(input
        .samples()
        .iter()
        .filter_map(|&x| bank.push(x))
        .collect())
}
