pub mod dsp;
pub mod error;
pub mod hangover;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod sad;
pub mod saf;
pub mod synth;

pub use error::{Error, Result};
