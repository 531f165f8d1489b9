use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hangover::HangoverParams;
use crate::saf::SafParams;
use crate::synth::SnoreProfile;

pub const DEFAULT_DURATION_S: f64 = 600.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

fn default_duration() -> f64 {
    DEFAULT_DURATION_S
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

fn default_snr_list() -> Vec<f64> {
    vec![10.0, 15.0, 20.0]
}

/// Where the reference signal x(n) comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputSource {
    /// Synthetic snoring; the profile's seed is replaced by the experiment seed.
    Synth {
        #[serde(default)]
        profile: SnoreProfile,
        #[serde(default = "default_duration")]
        duration_s: f64,
        #[serde(default = "default_sample_rate")]
        sample_rate_hz: u32,
    },
    Wav {
        path: PathBuf,
        /// `start_s,end_s` sidecar; needed by the oracle detector and used as
        /// the SNR reference region when present.
        #[serde(default)]
        annotations: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DetectorChoice {
    Crnn {
        weights: PathBuf,
    },
    /// Mean log-Mel threshold (natural log units).
    Energy {
        threshold: f64,
    },
    /// Ground-truth annotations of the input.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SadMode {
    On,
    Off,
    Both,
}

impl SadMode {
    /// Modes to run, in output order.
    pub fn expand(self) -> Vec<SadMode> {
        match self {
            SadMode::Both => vec![SadMode::On, SadMode::Off],
            m => vec![m],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SadMode::On => "on",
            SadMode::Off => "off",
            SadMode::Both => "both",
        }
    }
}

/// Every tunable of an SNR x SAD-mode sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: InputSource,
    /// Impulse response file (`.wav` or `.f32`); the default synthetic
    /// 256-tap room response when absent.
    #[serde(default)]
    pub primary_path: Option<PathBuf>,
    /// Defaults to the unit impulse, under which the adaptive filter's
    /// optimum is the primary path itself.
    #[serde(default)]
    pub secondary_path: Option<PathBuf>,
    #[serde(default)]
    pub saf: SafParams,
    pub detector: DetectorChoice,
    #[serde(default)]
    pub hangover: HangoverParams,
    #[serde(default = "default_snr_list")]
    pub snr_list_db: Vec<f64>,
    #[serde(default = "default_sad_mode")]
    pub sad_mode: SadMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_sad_mode() -> SadMode {
    SadMode::Both
}

impl ExperimentConfig {
    /// A synthetic-input, oracle-detector sweep with every default.
    pub fn synthetic(duration_s: f64, seed: u64) -> Self {
        ExperimentConfig {
            input: InputSource::Synth {
                profile: SnoreProfile::default(),
                duration_s,
                sample_rate_hz: DEFAULT_SAMPLE_RATE,
            },
            primary_path: None,
            secondary_path: None,
            saf: SafParams::default(),
            detector: DetectorChoice::Oracle,
            hangover: HangoverParams::default(),
            snr_list_db: default_snr_list(),
            sad_mode: SadMode::Both,
            seed,
            output_dir: None,
        }
    }

    /// Parse TOML, or JSON when the extension is `.json`. Relative paths
    /// inside the file resolve against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.input {
            InputSource::Wav { path, annotations } => {
                fix(path);
                if let Some(a) = annotations {
                    fix(a);
                }
            }
            InputSource::Synth { .. } => {}
        }
        for p in [
            &mut self.primary_path,
            &mut self.secondary_path,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let DetectorChoice::Crnn { weights } = &mut self.detector {
            fix(weights);
        }
    }

    /// Checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.snr_list_db.is_empty() {
            return Err(Error::Config("snr_list_db is empty".into()));
        }
        if let Some(s) = self.snr_list_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR {s} is not finite")));
        }
        if let InputSource::Synth {
            profile,
            duration_s,
            sample_rate_hz,
        } = &self.input
        {
            profile
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
            if !(*duration_s > 0.0 && duration_s.is_finite()) {
                return Err(Error::Config("input duration must be positive".into()));
            }
            if *sample_rate_hz == 0 {
                return Err(Error::Config("sample rate must be positive".into()));
            }
        }
        if matches!(self.detector, DetectorChoice::Oracle)
            && matches!(
                self.input,
                InputSource::Wav {
                    annotations: None,
                    ..
                }
            )
        {
            return Err(Error::Config(
                "the oracle detector needs an annotations file for WAV input".into(),
            ));
        }
        self.hangover
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.saf.build().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The configuration without where results go; what the hash covers.
    pub fn canonical(&self) -> Self {
        ExperimentConfig {
            output_dir: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    /// The output directory is excluded so relocated runs hash alike.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.canonical()).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
