use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asc_core::dsp::{fir_filter, PathModel, Signal};
use asc_core::hangover::{gate_stream, hangover, HangoverParams};
use asc_core::harness::{
    emit_prediction_trace, fmt_num, measurement_noise, write_outputs, Experiment, ExperimentConfig,
    RowStatus, SadMode,
};
use asc_core::io;
use asc_core::metrics::{format_misalignment, lsd, misalignment, snr_gain, LsdBand};
use asc_core::sad::{binarize, crnn_forward, energy_detector, logmel, CrnnWeights, FrameConfig};
use asc_core::saf::{AscState, SafParams};
use asc_core::synth::{self, annotations_to_frames, annotations_to_mask, SnoreProfile};
use asc_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

/// Detection-gated active snoring cancellation simulator.
#[derive(Parser)]
#[command(name = "asc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic snoring recording with annotations.
    Synth(SynthArgs),
    /// Frame-level snore predictions for a WAV file.
    Detect(DetectArgs),
    /// Hangover post-processing of a prediction stream.
    Hangover(HangoverArgs),
    /// One cancellation run; prints LSD and misalignment of the final filter.
    Cancel(CancelArgs),
    /// SNR x SAD-mode sweep described by a config file.
    Experiment(ExperimentArgs),
    /// Compare two impulse responses.
    Metrics(MetricsArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Annotation CSV (`start_s,end_s`).
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = 600.0)]
    duration: f64,
    #[arg(long, default_value_t = 44_100)]
    sample_rate: u32,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with SnoreProfile fields.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Also write the default primary path (`.f32` or `.wav`).
    #[arg(long)]
    primary_out: Option<PathBuf>,
    /// Also write the synthetic secondary path.
    #[arg(long)]
    secondary_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorKind {
    Crnn,
    Energy,
    Oracle,
}

#[derive(clap::Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Predictions, one bit per line (`.bits` for packed binary).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    detector: DetectorKind,
    #[arg(long, required_if_eq("detector", "crnn"))]
    weights: Option<PathBuf>,
    /// Mean log-Mel threshold for the energy detector.
    #[arg(
        long,
        required_if_eq("detector", "energy"),
        allow_negative_numbers = true
    )]
    threshold: Option<f64>,
    #[arg(long, required_if_eq("detector", "oracle"))]
    annotations: Option<PathBuf>,
    /// CRNN per-frame probabilities as CSV.
    #[arg(long)]
    probabilities: Option<PathBuf>,
}

#[derive(clap::Args)]
struct HangoverArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = asc_core::hangover::DEFAULT_BUFFER)]
    buffer: usize,
    #[arg(long, default_value_t = asc_core::hangover::DEFAULT_EXTENSION)]
    extension: usize,
    /// Write a time/amplitude/raw/post trace; needs --signal.
    #[arg(long, requires = "signal")]
    trace: Option<PathBuf>,
    #[arg(long)]
    signal: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
}

#[derive(clap::Args)]
struct CancelArgs {
    /// Reference signal x(n).
    #[arg(long)]
    input: PathBuf,
    /// Primary path; the default synthetic room response when absent.
    #[arg(long)]
    primary: Option<PathBuf>,
    /// Secondary path; the unit impulse when absent.
    #[arg(long)]
    secondary: Option<PathBuf>,
    /// Measurement noise level; no noise when absent.
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// Annotations marking the region the SNR refers to.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Frame predictions gating adaptation; always adapting when absent.
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = asc_core::saf::DEFAULT_TAPS)]
    taps: usize,
    #[arg(long, default_value_t = asc_core::saf::DEFAULT_SUBBANDS)]
    subbands: usize,
    #[arg(long, default_value_t = asc_core::saf::DEFAULT_STEP_SIZE)]
    mu: f64,
    #[arg(long, default_value_t = asc_core::saf::DEFAULT_REGULARIZATION)]
    alpha: f64,
    /// Final fullband filter (`.f32` or `.wav`).
    #[arg(long)]
    filter_out: Option<PathBuf>,
    /// Error-microphone signal e(n).
    #[arg(long)]
    error_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated SNR list in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    sad_mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    On,
    Off,
    Both,
}

#[derive(clap::Args)]
struct MetricsArgs {
    /// Reference impulse response.
    #[arg(long)]
    p: PathBuf,
    /// Estimated impulse response.
    #[arg(long)]
    w: PathBuf,
    #[arg(long, default_value_t = 44_100)]
    sample_rate: u32,
}

/// Exit status 2 for usage errors and missing files, 1 otherwise.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MissingFile(_) => 2,
        _ => 1,
    }
}

fn detail(err: &Error) -> String {
    match err {
        Error::InvalidArgument(m) | Error::Config(m) => m.clone(),
        Error::MissingFile(p) => p.display().to_string(),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {line}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth_cmd(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Hangover(a) => hangover_cmd(a),
        Command::Cancel(a) => cancel_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), detail(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

type Result<T> = asc_core::Result<T>;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let mut profile = match &a.profile {
        Some(p) => toml::from_str::<SnoreProfile>(&read_text(p)?)
            .map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))?,
        None => SnoreProfile::default(),
    };
    if let Some(seed) = a.seed {
        profile.seed = seed;
    }
    let out = synth::generate(&profile, a.duration, a.sample_rate)?;
    io::write_wav(&a.out, &out.signal)?;
    if let Some(path) = &a.annotations {
        io::write_annotations(path, &out.annotations)?;
    }
    if let Some(path) = &a.primary_out {
        io::write_ir(path, synth::default_primary_path().taps(), a.sample_rate)?;
    }
    if let Some(path) = &a.secondary_out {
        io::write_ir(path, synth::default_secondary_path().taps(), a.sample_rate)?;
    }
    println!(
        "samples {} events {} snore_ratio {:.4}",
        out.signal.len(),
        out.annotations.len(),
        out.snore_ratio()
    );
    Ok(())
}

fn detect_cmd(a: DetectArgs) -> Result<()> {
    let x = io::read_wav(&a.input)?;
    let bits = match a.detector {
        DetectorKind::Energy => {
            let m = logmel(&x, &FrameConfig::default())?;
            energy_detector(&m, a.threshold.expect("required by clap"))
        }
        DetectorKind::Crnn => {
            let w = CrnnWeights::load(a.weights.as_deref().expect("required by clap"))?;
            let m = logmel(&x, &w.frontend.frame_config())?;
            let probs = crnn_forward(&m, &w)?;
            if let Some(path) = &a.probabilities {
                let mut text = String::from("frame,probability\n");
                for (i, p) in probs.iter().enumerate() {
                    text += &format!("{i},{}\n", fmt_num(*p));
                }
                std::fs::write(path, text)?;
            }
            binarize(&probs)
        }
        DetectorKind::Oracle => {
            let ann = io::read_annotations(a.annotations.as_deref().expect("required by clap"))?;
            let cfg = FrameConfig::default();
            let frames = x.len() / cfg.hop_samples(x.sample_rate_hz()) + 1;
            annotations_to_frames(&ann, cfg.hop_ms, frames)?
        }
    };
    io::write_predictions(&a.out, &bits)?;
    let ones = bits.iter().filter(|&&b| b).count();
    println!("frames {} positive {}", bits.len(), ones);
    Ok(())
}

fn hangover_cmd(a: HangoverArgs) -> Result<()> {
    let params = HangoverParams::new(a.buffer, a.extension)?;
    let raw = io::read_predictions(&a.input)?;
    // load the trace signal before writing anything
    let signal = a.signal.as_deref().map(io::read_wav).transpose()?;
    let post = hangover(&raw, &params)?;
    io::write_predictions(&a.out, &post)?;
    if let (Some(path), Some(signal)) = (&a.trace, &signal) {
        let file = std::fs::File::create(path)?;
        emit_prediction_trace(signal, &raw, &post, a.hop_ms, file)?;
    }
    let changed = raw.iter().zip(&post).filter(|(r, p)| r != p).count();
    println!("frames {} changed {}", post.len(), changed);
    Ok(())
}

fn cancel_cmd(a: CancelArgs) -> Result<()> {
    let x = io::read_wav(&a.input)?;
    let p = match &a.primary {
        Some(path) => io::read_ir(path)?,
        None => synth::default_primary_path(),
    };
    let s = match &a.secondary {
        Some(path) => io::read_ir(path)?,
        None => PathModel::identity(),
    };
    let ann = a
        .annotations
        .as_deref()
        .map(io::read_annotations)
        .transpose()?;
    let preds = a.gate.as_deref().map(io::read_predictions).transpose()?;
    let cfg = SafParams {
        taps: a.taps,
        subbands: a.subbands,
        step_size: a.mu,
        regularization: a.alpha,
        ..SafParams::default()
    }
    .build()?;

    let fs = x.sample_rate_hz();
    let clean = fir_filter(&x, &p)?.into_samples();
    let d: Vec<f64> = match a.snr {
        Some(snr) => {
            let noise = measurement_noise(a.seed, x.len());
            let mask = ann
                .as_deref()
                .map(|ann| annotations_to_mask(ann, fs, x.len()))
                .transpose()?;
            let g = snr_gain(&clean, &noise, snr, mask.as_deref())?;
            clean.iter().zip(&noise).map(|(c, n)| c + g * n).collect()
        }
        None => clean,
    };
    let gate = match &preds {
        Some(bits) => gate_stream(bits, a.hop_ms, fs, x.len())?,
        None => vec![true; x.len()],
    };
    let mut engine = AscState::new(cfg, s)?;
    let e = engine.run(x.samples(), &d, &gate)?;
    let w = engine.fullband().taps();

    let fft = LsdBand::DEFAULT_FFT_SIZE.max(p.len().max(w.len()).next_power_of_two());
    let band = LsdBand::from_hz(100.0, 20_000f64.min(fs as f64 / 2.0), fft, fs)?;
    let l = lsd(p.taps(), w, &band)?;
    let m = misalignment(p.taps(), w)?;
    if let Some(path) = &a.filter_out {
        io::write_ir(path, w, fs)?;
    }
    if let Some(path) = &a.error_out {
        io::write_wav(path, &Signal::new(e, fs)?)?;
    }
    println!("LSD {} dB", fmt_num(l.lsd_db));
    println!("misalignment {}", misalignment_text(m));
    println!("updates {}", engine.update_count());
    Ok(())
}

fn misalignment_text(m: f64) -> String {
    let s = format_misalignment(m);
    if s.ends_with("dB") {
        s
    } else {
        format!("{s} dB")
    }
}

fn experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = a.output_dir {
        cfg.output_dir = Some(dir);
    }
    if let Some(snr) = a.snr {
        cfg.snr_list_db = snr;
    }
    if let Some(mode) = a.sad_mode {
        cfg.sad_mode = match mode {
            ModeArg::On => SadMode::On,
            ModeArg::Off => SadMode::Off,
            ModeArg::Both => SadMode::Both,
        };
    }
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory given".into()))?;
    let exp = Experiment::prepare(cfg)?;
    let result = exp.run()?;
    write_outputs(&result, exp.signal(), &dir)?;
    for r in &result.rows {
        let status = match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
        };
        println!(
            "snr {} {} {} lsd {} misalignment {}",
            r.snr_db,
            r.mode.label(),
            status,
            fmt_num(r.lsd_db),
            fmt_num(r.misalignment_db)
        );
    }
    Ok(())
}

fn metrics_cmd(a: MetricsArgs) -> Result<()> {
    let p = io::read_ir(&a.p)?;
    let w = io::read_ir(&a.w)?;
    let fs = a.sample_rate;
    let fft = LsdBand::DEFAULT_FFT_SIZE.max(p.len().max(w.len()).next_power_of_two());
    let band = LsdBand::from_hz(100.0, 20_000f64.min(fs as f64 / 2.0), fft, fs)?;
    let l = lsd(p.taps(), w.taps(), &band)?;
    let m = misalignment(p.taps(), w.taps())?;
    println!("LSD {} dB", fmt_num(l.lsd_db));
    println!("misalignment {}", misalignment_text(m));
    Ok(())
}
