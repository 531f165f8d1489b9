use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Lowpass prototype of the DFT filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    taps: Vec<f64>,
}

impl PrototypeFilter {
    pub const DEFAULT_LEN: usize = 256;

    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() || taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("prototype needs finite, non-empty taps"));
        }
        Ok(PrototypeFilter { taps })
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

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum()
    }
}

/// Hamming-windowed sinc with cutoff `1/(2M)` cycles per sample, scaled to
/// unity DC gain.
pub fn design_prototype(length: usize, subbands: usize) -> Result<PrototypeFilter> {
    if subbands == 0 {
        return Err(Error::invalid("subband count must be positive"));
    }
    if length < 2 * subbands {
        return Err(Error::invalid(format!(
            "prototype length {length} is shorter than 2*M = {}",
            2 * subbands
        )));
    }
    let cutoff = 0.5 / subbands as f64;
    let center = (length - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..length)
        .map(|n| {
            let t = n as f64 - center;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / (length - 1) as f64).cos();
            sinc * window
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= gain);
    PrototypeFilter::from_taps(taps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn magnitude_at(taps: &[f64], freq: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, h) in taps.iter().enumerate() {
            let ph = -2.0 * PI * freq * n as f64;
            re += h * ph.cos();
            im += h * ph.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn default_design_rejects_next_band() {
        let p = design_prototype(256, 64).unwrap();
        let dc = magnitude_at(p.taps(), 0.0);
        let stop = magnitude_at(p.taps(), 1.0 / 64.0);
        let atten_db = 20.0 * (dc / stop).log10();
        assert!(atten_db >= 40.0, "attenuation {atten_db} dB");
    }

    #[test]
    fn unity_dc_gain_at_minimum_length() {
        for m in [1, 2, 4, 8, 16, 64] {
            let p = design_prototype(2 * m, m).unwrap();
            assert!((p.dc_gain() - 1.0).abs() < 1e-9, "M={m}");
            let db = 20.0 * magnitude_at(p.taps(), 0.0).log10();
            assert!(db.abs() < 0.1);
        }
    }

    #[test]
    fn single_band_is_halfband_sinc() {
        let p = design_prototype(16, 1).unwrap();
        assert!((p.dc_gain() - 1.0).abs() < 1e-12);
        // symmetric linear-phase design
        for i in 0..8 {
            assert!((p.taps()[i] - p.taps()[15 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(matches!(
            design_prototype(127, 64),
            Err(Error::InvalidArgument(_))
        ));
    }
}
