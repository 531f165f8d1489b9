use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DetectorChoice, ExperimentConfig, InputSource, SadMode};
use crate::dsp::{fir_filter, PathModel, Signal};
use crate::error::{Error, Result};
use crate::hangover::{gate_stream, hangover};
use crate::io;
use crate::metrics::{lsd, misalignment, snr_gain, LsdBand};
use crate::sad::{binarize, crnn_forward, energy_detector, logmel, CrnnWeights, FrameConfig};
use crate::saf::{AscState, SafConfig};
use crate::synth::{self, annotations_to_frames, annotations_to_mask, Annotation};

/// ChaCha stream carrying the measurement noise; the synthetic input uses
/// the default stream of the same seed.
const NOISE_STREAM: u64 = 1;

/// Unit-variance white Gaussian noise for the error microphone.
pub fn measurement_noise(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Frame-level SAD output and the per-sample gate derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub hop_ms: f64,
    pub raw: Vec<bool>,
    pub post: Vec<bool>,
    pub gate: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// Outcome of one (SNR, SAD mode) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub snr_db: f64,
    pub mode: SadMode,
    pub status: RowStatus,
    pub diagnostic: String,
    pub lsd_db: f64,
    pub misalignment_db: f64,
    /// (time in s, misalignment in dB), once per second of signal.
    pub trajectory: Vec<(f64, f64)>,
    pub gate_duty_cycle: f64,
    pub lsd_floored_bins: usize,
    pub updates: u64,
    pub noise_gain: f64,
    pub final_filter: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<RowResult>,
    pub detection: Option<Detection>,
    pub signal_duration_s: f64,
    pub sample_rate_hz: u32,
    pub snr_reference: &'static str,
    pub lsd_band: LsdBand,
}

/// A validated experiment with every input loaded.
pub struct Experiment {
    cfg: ExperimentConfig,
    saf: SafConfig,
    x: Signal,
    annotations: Option<Vec<Annotation>>,
    primary: PathModel,
    secondary: PathModel,
    crnn: Option<CrnnWeights>,
    band: LsdBand,
}

impl Experiment {
    /// Validate the configuration and load or generate every input. Nothing
    /// is written anywhere.
    pub fn prepare(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let saf = cfg.saf.build()?;
        let primary = match &cfg.primary_path {
            Some(p) => io::read_ir(p)?,
            None => synth::default_primary_path(),
        };
        let secondary = match &cfg.secondary_path {
            Some(p) => io::read_ir(p)?,
            None => PathModel::identity(),
        };
        let crnn = match &cfg.detector {
            DetectorChoice::Crnn { weights } => Some(CrnnWeights::load(weights)?),
            _ => None,
        };
        let (x, annotations) = match &cfg.input {
            InputSource::Synth {
                profile,
                duration_s,
                sample_rate_hz,
            } => {
                let profile = synth::SnoreProfile {
                    seed: cfg.seed,
                    ..profile.clone()
                };
                let out = synth::generate(&profile, *duration_s, *sample_rate_hz)?;
                (out.signal, Some(out.annotations))
            }
            InputSource::Wav { path, annotations } => {
                let x = io::read_wav(path)?;
                let ann = annotations
                    .as_deref()
                    .map(io::read_annotations)
                    .transpose()?;
                (x, ann)
            }
        };
        if x.is_empty() {
            return Err(Error::Config("input signal is empty".into()));
        }
        let fs = x.sample_rate_hz();
        let band = LsdBand::from_hz(
            100.0,
            20_000f64.min(fs as f64 / 2.0),
            LsdBand::DEFAULT_FFT_SIZE,
            fs,
        )?;
        if primary.len() > band.fft_size || saf.taps() > band.fft_size {
            return Err(Error::Config(
                "filters longer than the LSD transform".into(),
            ));
        }
        Ok(Experiment {
            cfg,
            saf,
            x,
            annotations,
            primary,
            secondary,
            crnn,
            band,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn signal(&self) -> &Signal {
        &self.x
    }

    pub fn annotations(&self) -> Option<&[Annotation]> {
        self.annotations.as_deref()
    }

    pub fn primary(&self) -> &PathModel {
        &self.primary
    }

    /// Detector, threshold, hangover and zero-order hold onto samples.
    pub fn detect(&self) -> Result<Detection> {
        let fs = self.x.sample_rate_hz();
        let (hop_ms, raw) = match (&self.cfg.detector, &self.crnn) {
            (DetectorChoice::Oracle, _) => {
                let hop_ms = FrameConfig::default().hop_ms;
                let hop = FrameConfig::default().hop_samples(fs);
                // one prediction per hop including both ends
                let frames = self.x.len() / hop + 1;
                let ann = self.annotations.as_deref().unwrap_or(&[]);
                (hop_ms, annotations_to_frames(ann, hop_ms, frames)?)
            }
            (DetectorChoice::Energy { threshold }, _) => {
                let cfg = FrameConfig::default();
                let m = logmel(&self.x, &cfg)?;
                (cfg.hop_ms, energy_detector(&m, *threshold))
            }
            (DetectorChoice::Crnn { .. }, Some(w)) => {
                let cfg = w.frontend.frame_config();
                let m = logmel(&self.x, &cfg)?;
                (cfg.hop_ms, binarize(&crnn_forward(&m, w)?))
            }
            (DetectorChoice::Crnn { .. }, None) => unreachable!("weights are loaded in prepare"),
        };
        let post = hangover(&raw, &self.cfg.hangover)?;
        let gate = gate_stream(&post, hop_ms, fs, self.x.len())?;
        Ok(Detection {
            hop_ms,
            raw,
            post,
            gate,
        })
    }

    fn noise(&self) -> Vec<f64> {
        measurement_noise(self.cfg.seed, self.x.len())
    }

    /// One cell of the grid. `gate` of `None` keeps adaptation enabled.
    /// An engine fault marks the row failed instead of aborting the sweep.
    pub fn run_row(
        &self,
        snr_db: f64,
        mode: SadMode,
        clean: &[f64],
        noise: &[f64],
        gate: Option<&[bool]>,
        noise_gain: f64,
    ) -> RowResult {
        let fs = self.x.sample_rate_hz() as usize;
        let x = self.x.samples();
        let p = self.primary.taps();
        let mut row = RowResult {
            snr_db,
            mode,
            status: RowStatus::Ok,
            diagnostic: String::new(),
            lsd_db: f64::NAN,
            misalignment_db: f64::NAN,
            trajectory: Vec::with_capacity(x.len() / fs + 1),
            gate_duty_cycle: gate.map_or(1.0, |g| {
                g.iter().filter(|&&b| b).count() as f64 / g.len().max(1) as f64
            }),
            lsd_floored_bins: 0,
            updates: 0,
            noise_gain,
            final_filter: Vec::new(),
        };
        let mut engine = match AscState::new(self.saf.clone(), self.secondary.clone()) {
            Ok(e) => e,
            Err(e) => return row.fail(e.to_string()),
        };
        for n in 0..x.len() {
            engine.set_gate(gate.map_or(true, |g| g[n]));
            let d = clean[n] + noise_gain * noise[n];
            if let Err(e) = engine.step(x[n], d) {
                row.final_filter = engine.fullband().taps().to_vec();
                return row.fail(e.to_string());
            }
            if (n + 1) % fs == 0 {
                let m = misalignment(p, engine.fullband().taps()).unwrap_or(f64::NAN);
                row.trajectory.push(((n + 1) as f64 / fs as f64, m));
            }
        }
        let w = engine.fullband().taps();
        row.updates = engine.update_count();
        row.final_filter = w.to_vec();
        match (lsd(p, w, &self.band), misalignment(p, w)) {
            (Ok(l), Ok(m)) => {
                row.lsd_db = l.lsd_db;
                row.lsd_floored_bins = l.floored_bins;
                row.misalignment_db = m;
                row
            }
            (Err(e), _) | (_, Err(e)) => row.fail(e.to_string()),
        }
    }

    /// The full SNR x mode grid. Rows run in parallel; the result order is
    /// the grid order regardless of scheduling.
    pub fn run(&self) -> Result<ExperimentResult> {
        let modes = self.cfg.sad_mode.expand();
        let detection = if modes.contains(&SadMode::On) {
            Some(self.detect()?)
        } else {
            None
        };
        let clean = fir_filter(&self.x, &self.primary)?.into_samples();
        let noise = self.noise();
        // without any annotated snoring the SNR refers to the whole signal
        let mask = match &self.annotations {
            Some(a) => Some(annotations_to_mask(
                a,
                self.x.sample_rate_hz(),
                self.x.len(),
            )?)
            .filter(|m| m.contains(&true)),
            None => None,
        };
        let snr_reference = if mask.is_some() {
            "snore-active samples"
        } else {
            "whole signal"
        };
        let cells: Vec<(f64, SadMode, f64)> = self
            .cfg
            .snr_list_db
            .iter()
            .map(|&snr| Ok((snr, snr_gain(&clean, &noise, snr, mask.as_deref())?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flat_map(|(snr, g)| modes.iter().map(move |&m| (snr, m, g)))
            .collect();
        let rows = cells
            .par_iter()
            .map(|&(snr, mode, gain)| {
                let gate = match mode {
                    SadMode::On => detection.as_ref().map(|d| &d.gate[..]),
                    _ => None,
                };
                self.run_row(snr, mode, &clean, &noise, gate, gain)
            })
            .collect();
        Ok(ExperimentResult {
            config: self.cfg.clone(),
            config_hash: self.cfg.hash(),
            rows,
            detection,
            signal_duration_s: self.x.duration_s(),
            sample_rate_hz: self.x.sample_rate_hz(),
            snr_reference,
            lsd_band: self.band,
        })
    }
}

impl RowResult {
    fn fail(mut self, diagnostic: String) -> Self {
        self.status = RowStatus::Failed;
        self.diagnostic = diagnostic;
        self
    }
}

/// Prepare and run in one call.
pub fn run_experiment(cfg: ExperimentConfig) -> Result<ExperimentResult> {
    Experiment::prepare(cfg)?.run()
}
