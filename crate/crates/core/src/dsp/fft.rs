use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn check_size(len: usize, size: usize) -> Result<()> {
    if size != len {
        return Err(Error::invalid(format!(
            "transform size {size} does not match input length {len}"
        )));
    }
    if !is_power_of_two(size) {
        return Err(Error::invalid(format!(
            "transform size {size} is not a power of two"
        )));
    }
    Ok(())
}

/// Unnormalized forward DFT, `X[k] = sum x[n] exp(-2 pi i k n / size)`.
pub fn dft(values: &[Complex64], size: usize) -> Result<Vec<Complex64>> {
    check_size(values.len(), size)?;
    let mut buf = values.to_vec();
    Dft::new(size)?.forward(&mut buf);
    Ok(buf)
}

/// Inverse DFT including the `1/size` factor.
pub fn idft(values: &[Complex64], size: usize) -> Result<Vec<Complex64>> {
    check_size(values.len(), size)?;
    let mut buf = values.to_vec();
    Dft::new(size)?.inverse(&mut buf);
    Ok(buf)
}

/// A planned power-of-two transform pair, reusable across calls.
#[derive(Clone)]
pub struct Dft {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("size", &self.size).finish()
    }
}

impl Dft {
    pub fn new(size: usize) -> Result<Self> {
        if !is_power_of_two(size) {
            return Err(Error::invalid(format!(
                "transform size {size} is not a power of two"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Dft {
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.size);
        self.fwd.process(buf);
    }

    /// Inverse transform, scaled by `1/size`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse_unscaled(buf);
        let scale = 1.0 / self.size as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// `sum X[k] exp(+2 pi i k n / size)` without the `1/size` factor.
    pub fn inverse_unscaled(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.size);
        self.inv.process(buf);
    }
}
