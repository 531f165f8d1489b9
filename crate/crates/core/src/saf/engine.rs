use num_complex::Complex64;

use super::{nlms_update_in_place, FullbandFilter, SafConfig, Stacker, SubbandWeights};
use crate::dsp::{dot, AnalysisBank, DelayLine, PathModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Loudspeaker signal y(n).
    pub y: f64,
    /// Error-microphone signal e(n).
    pub e: f64,
}

/// Single-channel feed-forward canceller with a delayless subband adaptive filter.
///
/// Per sample: `y = w * x`, `e = d - s_hat * y`, `x' = s_hat * x`. Every `D`
/// samples both `x'` and `e` produce a subband frame; when the gate is open
/// each retained band takes one NLMS step and `w` is restacked.
#[derive(Debug, Clone)]
pub struct AscState {
    cfg: SafConfig,
    weights: SubbandWeights,
    fullband: FullbandFilter,
    fullband_rev: Vec<f64>,
    secondary: PathModel,
    secondary_rev: Vec<f64>,
    x_line: DelayLine,
    y_line: DelayLine,
    ref_bank: AnalysisBank,
    err_bank: AnalysisBank,
    // per band, newest first
    ref_history: Vec<Vec<Complex64>>,
    last_error: Vec<Complex64>,
    stacker: Stacker,
    gate: bool,
    sample: u64,
    updates: u64,
    halted: Option<String>,
}

impl AscState {
    /// A fresh engine with zero weights and silent delay lines. The gate starts open.
    pub fn new(cfg: SafConfig, secondary: PathModel) -> Result<Self> {
        let n = cfg.taps();
        let bands = cfg.retained_bands();
        let band_taps = cfg.subband_taps();
        Ok(AscState {
            weights: SubbandWeights::zeros(&cfg),
            fullband: FullbandFilter::zeros(n),
            fullband_rev: vec![0.0; n],
            secondary_rev: secondary.taps().iter().rev().copied().collect(),
            x_line: DelayLine::new(n.max(secondary.len())),
            y_line: DelayLine::new(secondary.len()),
            ref_bank: AnalysisBank::new(cfg.prototype(), cfg.subbands())?,
            err_bank: AnalysisBank::new(cfg.prototype(), cfg.subbands())?,
            ref_history: vec![vec![Complex64::default(); band_taps]; bands],
            last_error: vec![Complex64::default(); bands],
            stacker: Stacker::new(&cfg)?,
            secondary,
            gate: true,
            sample: 0,
            updates: 0,
            halted: None,
            cfg,
        })
    }

    pub fn config(&self) -> &SafConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &SubbandWeights {
        &self.weights
    }

    pub fn fullband(&self) -> &FullbandFilter {
        &self.fullband
    }

    pub fn secondary(&self) -> &PathModel {
        &self.secondary
    }

    pub fn gate(&self) -> bool {
        self.gate
    }

    /// Open (`true`) or close the adaptation gate. Output generation continues
    /// with the last stacked filter either way.
    pub fn set_gate(&mut self, open: bool) {
        self.gate = open;
    }

    /// Samples processed so far.
    pub fn sample_index(&self) -> u64 {
        self.sample
    }

    /// Number of subband update rounds performed.
    pub fn update_count(&self) -> u64 {
        self.updates
    }

    /// Positive-frequency subband history of `x'` for band `k`, newest first.
    pub fn reference_history(&self, k: usize) -> &[Complex64] {
        &self.ref_history[k]
    }

    /// Positive-frequency error subbands of the most recent frame.
    pub fn last_error_subbands(&self) -> &[Complex64] {
        &self.last_error
    }

    pub fn is_halted(&self) -> bool {
        self.halted.is_some()
    }

    fn fault(&mut self, message: String) -> Error {
        self.halted = Some(message.clone());
        Error::Fault {
            sample: self.sample,
            message,
        }
    }

    /// Process one reference sample `x(n)` and disturbance sample `d(n)`.
    pub fn step(&mut self, x: f64, d: f64) -> Result<StepOutput> {
        if let Some(reason) = &self.halted {
            return Err(Error::Fault {
                sample: self.sample,
                message: format!("engine halted: {reason}"),
            });
        }
        if !x.is_finite() || !d.is_finite() {
            return Err(self.fault(format!("non-finite input x={x}, d={d}")));
        }
        let n = self.cfg.taps();
        let ls = self.secondary.len();

        self.x_line.push(x);
        let hist = self.x_line.recent();
        let len = hist.len();
        let y = dot(&self.fullband_rev, &hist[len - n..]);
        let x_filtered = dot(&self.secondary_rev, &hist[len - ls..]);

        self.y_line.push(y);
        let e = d - dot(&self.secondary_rev, self.y_line.recent());
        if !y.is_finite() || !e.is_finite() {
            return Err(self.fault(format!("non-finite output y={y}, e={e}")));
        }

        let ref_frame = self.ref_bank.push_all(x_filtered).map(|v| v.to_vec());
        let err_frame = self.err_bank.push_all(e).map(|v| v.to_vec());
        self.sample += 1;

        if let (Some(xr), Some(er)) = (ref_frame, err_frame) {
            // The bank's subband k is centred on -2 pi k / M. Its conjugate,
            // the band at +2 pi k / M, is the layout the stacker expects.
            for k in 0..self.cfg.retained_bands() {
                let h = &mut self.ref_history[k];
                h.rotate_right(1);
                h[0] = xr[k].conj();
                self.last_error[k] = er[k].conj();
            }
            if self.gate {
                self.adapt()?;
            }
        }
        Ok(StepOutput { y, e })
    }

    fn adapt(&mut self) -> Result<()> {
        let (mu, alpha) = (self.cfg.step_size(), self.cfg.regularization());
        for k in 0..self.cfg.retained_bands() {
            nlms_update_in_place(
                self.weights.band_mut(k),
                &self.ref_history[k],
                self.last_error[k],
                mu,
                alpha,
            )?;
        }
        if !self.weights.is_finite() {
            return Err(self.fault("subband weights diverged".into()));
        }
        if let Err(err) = self.stacker.stack_into(&self.weights, &mut self.fullband) {
            return Err(self.fault(err.to_string()));
        }
        for (dst, src) in self
            .fullband_rev
            .iter_mut()
            .zip(self.fullband.taps().iter().rev())
        {
            *dst = *src;
        }
        self.updates += 1;
        Ok(())
    }

    /// Run over whole buffers with a per-sample gate; returns e(n).
    pub fn run(&mut self, x: &[f64], d: &[f64], gate: &[bool]) -> Result<Vec<f64>> {
        if x.len() != d.len() || x.len() != gate.len() {
            return Err(Error::invalid("x, d and gate must have equal lengths"));
        }
        let mut e = Vec::with_capacity(x.len());
        for ((&xs, &ds), &g) in x.iter().zip(d).zip(gate) {
            self.set_gate(g);
            e.push(self.step(xs, ds)?.e);
        }
        Ok(e)
    }
}
