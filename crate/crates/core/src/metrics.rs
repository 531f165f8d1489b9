//! Path-estimation quality measures and SNR-controlled mixing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{Dft, PathModel, Signal};
use crate::error::{Error, Result};

/// Magnitudes below this are floored inside the LSD band.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Value returned by [`misalignment`] when the estimate is exact.
pub const MISALIGNMENT_EXACT: f64 = f64::NEG_INFINITY;

/// DFT-bin range over which the log-spectral distance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsdBand {
    pub k1: usize,
    pub k2: usize,
    pub fft_size: usize,
    pub sample_rate_hz: u32,
}

impl LsdBand {
    pub const DEFAULT_FFT_SIZE: usize = 4096;

    /// Bins `ceil(low K / fs) ..= floor(high K / fs)`.
    pub fn from_hz(
        low_hz: f64,
        high_hz: f64,
        fft_size: usize,
        sample_rate_hz: u32,
    ) -> Result<Self> {
        let fs = sample_rate_hz as f64;
        if !(0.0 <= low_hz && low_hz < high_hz && high_hz <= fs / 2.0) {
            return Err(Error::invalid(format!(
                "LSD band [{low_hz}, {high_hz}] Hz is not inside [0, fs/2]"
            )));
        }
        let k1 = (low_hz * fft_size as f64 / fs).ceil() as usize;
        let k2 = (high_hz * fft_size as f64 / fs).floor() as usize;
        if k1 > k2 {
            return Err(Error::invalid("LSD band contains no bins"));
        }
        Ok(LsdBand {
            k1,
            k2,
            fft_size,
            sample_rate_hz,
        })
    }

    pub fn edges_hz(&self) -> (f64, f64) {
        let bin = self.sample_rate_hz as f64 / self.fft_size as f64;
        (self.k1 as f64 * bin, self.k2 as f64 * bin)
    }
}

impl Default for LsdBand {
    /// 100 Hz to 20 kHz with a 4096-point transform at 44.1 kHz.
    fn default() -> Self {
        LsdBand::from_hz(100.0, 20_000.0, Self::DEFAULT_FFT_SIZE, 44_100).expect("valid band")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsdReport {
    pub lsd_db: f64,
    /// Bins of either spectrum that hit the magnitude floor.
    pub floored_bins: usize,
}

fn magnitude_spectrum(taps: &[f64], dft: &Dft) -> Result<Vec<f64>> {
    if taps.len() > dft.size() {
        return Err(Error::invalid(format!(
            "{} taps do not fit a {}-point transform",
            taps.len(),
            dft.size()
        )));
    }
    let mut buf = vec![Complex64::default(); dft.size()];
    for (b, &t) in buf.iter_mut().zip(taps) {
        b.re = t;
    }
    dft.forward(&mut buf);
    Ok(buf.iter().map(|v| v.norm()).collect())
}

/// Root-mean-square dB ratio of `|P(k)|^2 / |W(k)|^2` over the band.
pub fn lsd(p: &[f64], w: &[f64], band: &LsdBand) -> Result<LsdReport> {
    let dft = Dft::new(band.fft_size)?;
    if band.k2 >= band.fft_size {
        return Err(Error::invalid("LSD band exceeds transform size"));
    }
    let pm = magnitude_spectrum(p, &dft)?;
    let wm = magnitude_spectrum(w, &dft)?;
    let mut floored = 0;
    let mut floor = |v: f64| {
        if v < MAGNITUDE_FLOOR {
            floored += 1;
            MAGNITUDE_FLOOR
        } else {
            v
        }
    };
    let mut acc = 0.0;
    for k in band.k1..=band.k2 {
        let (pk, wk) = (floor(pm[k]), floor(wm[k]));
        let term = 10.0 * (pk * pk / (wk * wk)).log10();
        acc += term * term;
    }
    let count = (band.k2 - band.k1 + 1) as f64;
    Ok(LsdReport {
        lsd_db: (acc / count).sqrt(),
        floored_bins: floored,
    })
}

/// `20 log10(|p - w| / |p|)`; taps of `w` beyond `p` count as error.
/// Returns `-inf` when `w == p` exactly.
pub fn misalignment(p: &[f64], w: &[f64]) -> Result<f64> {
    let norm_p: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_p == 0.0 || !norm_p.is_finite() {
        return Err(Error::invalid(
            "misalignment needs a non-zero reference path",
        ));
    }
    let len = p.len().max(w.len());
    let diff: f64 = (0..len)
        .map(|i| {
            let d = p.get(i).copied().unwrap_or(0.0) - w.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt();
    if diff == 0.0 {
        return Ok(MISALIGNMENT_EXACT);
    }
    Ok(20.0 * (diff / norm_p).log10())
}

/// Human/CSV rendering of a misalignment value; exact matches print as `< -300 dB`.
pub fn format_misalignment(db: f64) -> String {
    if db < -300.0 {
        "< -300 dB".to_string()
    } else {
        format!("{db:.6}")
    }
}

/// Convenience wrapper for path types.
pub fn path_misalignment(p: &PathModel, w: &[f64]) -> Result<f64> {
    misalignment(p.taps(), w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    pub signal: Signal,
    /// Gain applied to the noise.
    pub gain: f64,
}

/// Mean power over the samples where `active` is set (all samples if `None`).
pub fn active_power(samples: &[f64], active: Option<&[bool]>) -> Result<f64> {
    let (sum, count) = match active {
        Some(mask) => {
            if mask.len() != samples.len() {
                return Err(Error::invalid("activity mask length differs from signal"));
            }
            samples
                .iter()
                .zip(mask)
                .filter(|(_, &a)| a)
                .fold((0.0, 0usize), |(s, c), (v, _)| (s + v * v, c + 1))
        }
        None => (samples.iter().map(|v| v * v).sum(), samples.len()),
    };
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Noise gain `g` such that `clean` over `g * noise` has power ratio `snr_db`,
/// both powers measured over `active` samples only.
pub fn snr_gain(clean: &[f64], noise: &[f64], snr_db: f64, active: Option<&[bool]>) -> Result<f64> {
    if clean.len() != noise.len() {
        return Err(Error::invalid("clean and noise lengths differ"));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite"));
    }
    let pc = active_power(clean, active)?;
    let pn = active_power(noise, active)?;
    if pc <= 0.0 {
        return Err(Error::invalid(
            "clean signal has zero power in the active region",
        ));
    }
    if pn <= 0.0 {
        return Err(Error::invalid("noise has zero power in the active region"));
    }
    Ok((pc / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `clean + g * noise` with `g` from [`snr_gain`].
pub fn mix_at_snr(
    clean: &Signal,
    noise: &Signal,
    snr_db: f64,
    active: Option<&[bool]>,
) -> Result<Mixed> {
    let gain = snr_gain(clean.samples(), noise.samples(), snr_db, active)?;
    let out = clean
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(c, n)| c + gain * n)
        .collect();
    Ok(Mixed {
        signal: Signal::new(out, clean.sample_rate_hz())?,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn path(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|i| rng.gen_range(-1.0..1.0) * (-(i as f64) / 40.0).exp())
            .collect()
    }

    #[test]
    fn default_band_bins() {
        let b = LsdBand::default();
        assert_eq!(b.k1, 10);
        assert_eq!(b.k2, 1857);
    }

    #[test]
    fn identical_paths_have_zero_lsd() {
        let p = path(1, 256);
        let r = lsd(&p, &p, &LsdBand::default()).unwrap();
        assert_eq!(r.lsd_db, 0.0);
    }

    #[test]
    fn lsd_scale_law() {
        let p = path(2, 256);
        for c in [0.5, 2.0, 10.0] {
            let w: Vec<f64> = p.iter().map(|v| c * v).collect();
            let r = lsd(&p, &w, &LsdBand::default()).unwrap();
            assert!((r.lsd_db - (20.0 * f64::log10(c)).abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_estimate_is_floored_not_infinite() {
        let p = path(3, 64);
        let r = lsd(&p, &[0.0; 64], &LsdBand::default()).unwrap();
        assert!(r.lsd_db.is_finite());
        assert_eq!(
            r.floored_bins,
            LsdBand::default().k2 - LsdBand::default().k1 + 1
        );
    }

    #[test]
    fn misalignment_reference_cases() {
        let p = path(4, 256);
        assert_eq!(misalignment(&p, &[0.0; 256]).unwrap(), 0.0);
        let half: Vec<f64> = p.iter().map(|v| v / 2.0).collect();
        assert!((misalignment(&p, &half).unwrap() + 6.020599913279624).abs() < 1e-9);
        assert_eq!(misalignment(&p, &p).unwrap(), f64::NEG_INFINITY);
        assert_eq!(format_misalignment(f64::NEG_INFINITY), "< -300 dB");
    }

    #[test]
    fn misalignment_counts_excess_taps() {
        let p = vec![1.0, 0.0];
        let w = vec![1.0, 0.0, 0.1];
        let m = misalignment(&p, &w).unwrap();
        assert!((m - 20.0 * 0.1f64.log10()).abs() < 1e-12);
        // argument order matters
        assert!(misalignment(&[0.0; 3], &w).is_err());
    }

    #[test]
    fn mix_gain_reference_cases() {
        let clean = Signal::new(vec![1.0, -1.0, 1.0, -1.0], 8000).unwrap();
        let noise = Signal::new(vec![-1.0, -1.0, 1.0, 1.0], 8000).unwrap();
        let m0 = mix_at_snr(&clean, &noise, 0.0, None).unwrap();
        assert!((m0.gain - 1.0).abs() < 1e-15);
        let m20 = mix_at_snr(&clean, &noise, 20.0, None).unwrap();
        assert!((m20.gain * m20.gain - 1e-2).abs() < 1e-15);
        for (i, v) in m20.signal.samples().iter().enumerate() {
            assert!((v - clean.samples()[i] - m20.gain * noise.samples()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn measured_snr_matches_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let len = 5000;
            let clean: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let noise: Vec<f64> = (0..len)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mask: Vec<bool> = (0..len).map(|i| (i / 700) % 2 == 0).collect();
            let snr = rng.gen_range(-10.0..30.0);
            let c = Signal::new(clean.clone(), 8000).unwrap();
            let n = Signal::new(noise, 8000).unwrap();
            let mixed = mix_at_snr(&c, &n, snr, Some(&mask)).unwrap();
            let resid: Vec<f64> = mixed
                .signal
                .samples()
                .iter()
                .zip(&clean)
                .map(|(m, c)| m - c)
                .collect();
            let measured = 10.0
                * (active_power(&clean, Some(&mask)).unwrap()
                    / active_power(&resid, Some(&mask)).unwrap())
                .log10();
            assert!((measured - snr).abs() < 0.01);
        }
    }

    #[test]
    fn silent_active_region_rejected() {
        let clean = Signal::new(vec![0.0, 0.0, 1.0], 8000).unwrap();
        let noise = Signal::new(vec![1.0, 1.0, 1.0], 8000).unwrap();
        let r = mix_at_snr(&clean, &noise, 10.0, Some(&[true, true, false]));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
