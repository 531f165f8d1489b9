//! Delayless subband adaptive filtering for feed-forward active noise control.
//!
//! Adaptation runs on decimated subband signals of the filtered reference
//! `x'(n)` and of the error `e(n)`; after every update the subband weights
//! are stacked into one fullband FIR `w(n)` that produces the anti-noise
//! without any filter-bank delay in the audio path.

mod engine;
mod nlms;
mod stack;

pub use engine::{AscState, StepOutput};
pub use nlms::{nlms_update, nlms_update_in_place, MIN_REGULARIZATION};
pub use stack::{stack_fullband, FullbandFilter, Stacker};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{design_prototype, is_power_of_two, PrototypeFilter};
use crate::error::{Error, Result};

pub const DEFAULT_TAPS: usize = 512;
pub const DEFAULT_SUBBANDS: usize = 64;
pub const DEFAULT_STEP_SIZE: f64 = 0.03;
pub const DEFAULT_REGULARIZATION: f64 = 1e-6;

/// Serializable description of a [`SafConfig`]; the prototype is designed
/// from its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafParams {
    pub taps: usize,
    pub subbands: usize,
    pub step_size: f64,
    pub regularization: f64,
    pub prototype_len: usize,
}

impl Default for SafParams {
    fn default() -> Self {
        SafParams {
            taps: DEFAULT_TAPS,
            subbands: DEFAULT_SUBBANDS,
            step_size: DEFAULT_STEP_SIZE,
            regularization: DEFAULT_REGULARIZATION,
            prototype_len: PrototypeFilter::DEFAULT_LEN,
        }
    }
}

impl SafParams {
    pub fn build(&self) -> Result<SafConfig> {
        let proto = design_prototype(self.prototype_len, self.subbands)?;
        SafConfig::new(
            self.taps,
            self.subbands,
            self.step_size,
            self.regularization,
            proto,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SafConfig {
    taps: usize,
    subbands: usize,
    step_size: f64,
    regularization: f64,
    prototype: PrototypeFilter,
}

impl SafConfig {
    /// `taps` (N) and `subbands` (M) must be powers of two with `M` dividing
    /// `N`, so that band centres fall on fullband bins.
    pub fn new(
        taps: usize,
        subbands: usize,
        step_size: f64,
        regularization: f64,
        prototype: PrototypeFilter,
    ) -> Result<Self> {
        if subbands < 2 || !is_power_of_two(subbands) {
            return Err(Error::invalid(format!(
                "subband count must be a power of two >= 2, got {subbands}"
            )));
        }
        if !is_power_of_two(taps) || taps < subbands {
            return Err(Error::invalid(format!(
                "fullband length must be a power of two >= M, got N={taps}, M={subbands}"
            )));
        }
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::invalid("step size must be finite and non-negative"));
        }
        if !(regularization > 0.0 && regularization.is_finite()) {
            return Err(Error::invalid("regularization must be positive"));
        }
        Ok(SafConfig {
            taps,
            subbands,
            step_size,
            regularization,
            prototype,
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn subbands(&self) -> usize {
        self.subbands
    }

    pub fn decimation(&self) -> usize {
        self.subbands / 2
    }

    /// Length of each subband weight vector, `N/D`.
    pub fn subband_taps(&self) -> usize {
        self.taps / self.decimation()
    }

    /// Bands `0..=M/2` are adapted; the others follow by conjugacy.
    pub fn retained_bands(&self) -> usize {
        self.subbands / 2 + 1
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    pub fn prototype(&self) -> &PrototypeFilter {
        &self.prototype
    }

    pub fn with_step_size(mut self, step_size: f64) -> Result<Self> {
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::invalid("step size must be finite and non-negative"));
        }
        self.step_size = step_size;
        Ok(self)
    }
}

impl Default for SafConfig {
    fn default() -> Self {
        SafParams::default()
            .build()
            .expect("default SAF parameters are valid")
    }
}

/// Complex weights of every retained subband, each of length `N/D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandWeights {
    bands: Vec<Vec<Complex64>>,
}

impl SubbandWeights {
    pub fn zeros(cfg: &SafConfig) -> Self {
        SubbandWeights {
            bands: vec![vec![Complex64::default(); cfg.subband_taps()]; cfg.retained_bands()],
        }
    }

    pub fn from_bands(cfg: &SafConfig, bands: Vec<Vec<Complex64>>) -> Result<Self> {
        if bands.len() != cfg.retained_bands()
            || bands.iter().any(|b| b.len() != cfg.subband_taps())
        {
            return Err(Error::invalid(format!(
                "expected {} bands of {} weights",
                cfg.retained_bands(),
                cfg.subband_taps()
            )));
        }
        Ok(SubbandWeights { bands })
    }

    pub fn band(&self, k: usize) -> &[Complex64] {
        &self.bands[k]
    }

    pub(crate) fn band_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.bands[k]
    }

    pub fn bands(&self) -> &[Vec<Complex64>] {
        &self.bands
    }

    pub fn max_magnitude(&self) -> f64 {
        self.bands
            .iter()
            .flatten()
            .map(|w| w.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.bands
            .iter()
            .flatten()
            .all(|w| w.re.is_finite() && w.im.is_finite())
    }
}
