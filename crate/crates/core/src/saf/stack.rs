use num_complex::Complex64;

use super::{SafConfig, SubbandWeights};
use crate::dsp::Dft;
use crate::error::{Error, Result};

/// Largest tolerated imaginary residue of the stacked inverse transform.
const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

/// The fullband adaptive filter `w(n)` of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullbandFilter {
    taps: Vec<f64>,
}

impl FullbandFilter {
    pub fn zeros(len: usize) -> Self {
        FullbandFilter {
            taps: vec![0.0; len],
        }
    }

    pub fn from_taps(taps: Vec<f64>) -> Self {
        FullbandFilter { taps }
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

/// Converts subband weights into the fullband filter with cached transforms.
///
/// Fullband bin `f < N/2` is read from the subband whose centre `k N / M` is
/// nearest, at that subband's `(N/D)`-point DFT bin `(f - k N / M) mod N/D`.
/// The upper half of the spectrum is the conjugate mirror of the lower half
/// and the Nyquist bin is zero, so the inverse transform is real.
#[derive(Debug, Clone)]
pub struct Stacker {
    taps: usize,
    subbands: usize,
    band_dft: Dft,
    full_dft: Dft,
    band_spectra: Vec<Vec<Complex64>>,
    spectrum: Vec<Complex64>,
    last_residue: f64,
}

impl Stacker {
    pub fn new(cfg: &SafConfig) -> Result<Self> {
        Ok(Stacker {
            taps: cfg.taps(),
            subbands: cfg.subbands(),
            band_dft: Dft::new(cfg.subband_taps())?,
            full_dft: Dft::new(cfg.taps())?,
            band_spectra: vec![
                vec![Complex64::default(); cfg.subband_taps()];
                cfg.retained_bands()
            ],
            spectrum: vec![Complex64::default(); cfg.taps()],
            last_residue: 0.0,
        })
    }

    /// Max |imag| of the most recent inverse transform, before it was discarded.
    pub fn last_imag_residue(&self) -> f64 {
        self.last_residue
    }

    /// Subband index and DFT bin feeding fullband bin `f` (`f < N/2`).
    pub fn source_of_bin(&self, f: usize) -> (usize, usize) {
        let (n, m) = (self.taps, self.subbands);
        let band_len = 2 * n / m;
        // nearest centre: floor(f M / N + 1/2)
        let k = (2 * f * m + n) / (2 * n);
        let offset = f as i64 - (k * n / m) as i64;
        (k, offset.rem_euclid(band_len as i64) as usize)
    }

    pub fn stack_into(&mut self, weights: &SubbandWeights, out: &mut FullbandFilter) -> Result<()> {
        let n = self.taps;
        if out.taps.len() != n || weights.bands().len() != self.band_spectra.len() {
            return Err(Error::invalid("weights or filter do not match the stacker"));
        }
        for (spec, band) in self.band_spectra.iter_mut().zip(weights.bands()) {
            spec.copy_from_slice(band);
            self.band_dft.forward(spec);
        }
        for f in 0..n / 2 {
            let (k, bin) = self.source_of_bin(f);
            self.spectrum[f] = self.band_spectra[k][bin];
        }
        // DC must be real for a real filter
        self.spectrum[0] = Complex64::new(self.spectrum[0].re, 0.0);
        self.spectrum[n / 2] = Complex64::default();
        for f in 1..n / 2 {
            self.spectrum[n - f] = self.spectrum[f].conj();
        }
        self.full_dft.inverse(&mut self.spectrum);
        let mut residue = 0.0f64;
        for (t, v) in out.taps.iter_mut().zip(&self.spectrum) {
            residue = residue.max(v.im.abs());
            *t = v.re;
        }
        self.last_residue = residue;
        if !(residue < IMAG_RESIDUE_LIMIT) {
            return Err(Error::invalid(format!(
                "stacked filter is not real: imaginary residue {residue:e}"
            )));
        }
        Ok(())
    }
}

/// Stack subband weights into the fullband filter `w(n)`.
pub fn stack_fullband(weights: &SubbandWeights, cfg: &SafConfig) -> Result<FullbandFilter> {
    let mut stacker = Stacker::new(cfg)?;
    let mut out = FullbandFilter::zeros(cfg.taps());
    stacker.stack_into(weights, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::design_prototype;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, m: usize) -> SafConfig {
        SafConfig::new(n, m, 0.03, 1e-6, design_prototype(4 * m, m).unwrap()).unwrap()
    }

    #[test]
    fn zero_weights_stack_to_zero() {
        let c = cfg(512, 64);
        let w = stack_fullband(&SubbandWeights::zeros(&c), &c).unwrap();
        assert_eq!(w.len(), 512);
        assert!(w.taps().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn random_weights_stack_to_real_filter() {
        let c = cfg(512, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bands = (0..c.retained_bands())
            .map(|_| {
                (0..c.subband_taps())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let weights = SubbandWeights::from_bands(&c, bands).unwrap();
        let mut stacker = Stacker::new(&c).unwrap();
        let mut out = FullbandFilter::zeros(512);
        stacker.stack_into(&weights, &mut out).unwrap();
        assert!(stacker.last_imag_residue() < 1e-8);
        assert!(out.taps().iter().any(|&t| t != 0.0));
    }

    #[test]
    fn bin_assignment_uses_nearest_centre() {
        let c = cfg(512, 64);
        let s = Stacker::new(&c).unwrap();
        // band width N/M = 8 bins, subband DFT has N/D = 16 bins
        assert_eq!(s.source_of_bin(0), (0, 0));
        assert_eq!(s.source_of_bin(3), (0, 3));
        assert_eq!(s.source_of_bin(4), (1, 12));
        assert_eq!(s.source_of_bin(8), (1, 0));
        assert_eq!(s.source_of_bin(11), (1, 3));
        assert_eq!(s.source_of_bin(12), (2, 12));
        assert_eq!(s.source_of_bin(255), (32, 15));
    }

    #[test]
    fn flat_subband_response_stacks_to_impulse() {
        // every subband passes its input unchanged -> fullband identity
        let c = cfg(64, 8);
        let mut bands = vec![vec![Complex64::default(); c.subband_taps()]; c.retained_bands()];
        for b in bands.iter_mut() {
            b[0] = Complex64::new(1.0, 0.0);
        }
        let w = stack_fullband(&SubbandWeights::from_bands(&c, bands).unwrap(), &c).unwrap();
        // Nyquist bin is zeroed, so the impulse carries a small alternating ripple
        assert!((w.taps()[0] - (1.0 - 1.0 / 64.0)).abs() < 1e-12);
        for (t, v) in w.taps().iter().enumerate().skip(1) {
            let expected = if t % 2 == 0 { -1.0 / 64.0 } else { 1.0 / 64.0 };
            assert!((v - expected).abs() < 1e-12, "tap {t}: {v}");
        }
    }
}
