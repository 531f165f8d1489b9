use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::SadMode;
use super::experiment::{ExperimentResult, RowResult, RowStatus};
use crate::dsp::Signal;
use crate::error::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "predictions.csv";

/// Fixed six-decimal rendering; infinities and NaN spelled out.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn fmt_snr(snr: f64) -> String {
    format!("{snr}")
}

pub fn trajectory_file_name(row: &RowResult) -> String {
    format!(
        "trajectory_snr{}_{}.csv",
        fmt_snr(row.snr_db),
        row.mode.label()
    )
}

/// One line per row of the grid.
pub fn write_results_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "snr_db",
        "sad_mode",
        "status",
        "lsd_db",
        "misalignment_db",
        "gate_duty_cycle",
        "lsd_floored_bins",
        "updates",
        "config_hash",
        "diagnostic",
    ])?;
    for r in &result.rows {
        w.write_record([
            fmt_snr(r.snr_db),
            r.mode.label().to_string(),
            match r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed => "failed".to_string(),
            },
            fmt_num(r.lsd_db),
            fmt_num(r.misalignment_db),
            fmt_num(r.gate_duty_cycle),
            r.lsd_floored_bins.to_string(),
            r.updates.to_string(),
            result.config_hash.clone(),
            r.diagnostic.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(row: &RowResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "misalignment_db"])?;
    for &(t, m) in &row.trajectory {
        w.write_record([fmt_num(t), fmt_num(m)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `time_s, amplitude, raw_pred, post_pred`, one row per prediction.
/// The amplitude is the peak magnitude of the signal over each hop.
pub fn emit_prediction_trace<W: Write>(
    signal: &Signal,
    raw: &[bool],
    post: &[bool],
    hop_ms: f64,
    out: W,
) -> Result<()> {
    if raw.len() != post.len() {
        return Err(Error::invalid(
            "raw and post-processed streams differ in length",
        ));
    }
    let hop = (hop_ms * signal.sample_rate_hz() as f64 / 1000.0).round() as usize;
    if hop == 0 {
        return Err(Error::invalid("frame hop is shorter than one sample"));
    }
    let x = signal.samples();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "amplitude", "raw_pred", "post_pred"])?;
    for (i, (&r, &p)) in raw.iter().zip(post).enumerate() {
        let start = (i * hop).min(x.len());
        let end = ((i + 1) * hop).min(x.len());
        let amp = x[start..end].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        w.write_record([
            format!("{:.2}", i as f64 * hop_ms / 1000.0),
            fmt_num(amp),
            (r as u8).to_string(),
            (p as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn manifest(result: &ExperimentResult) -> serde_json::Value {
    let cfg = &result.config.canonical();
    let rows: Vec<_> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "snr_db": r.snr_db,
                "sad_mode": r.mode.label(),
                "status": r.status,
                "noise_gain": r.noise_gain,
                "trajectory_file": trajectory_file_name(r),
            })
        })
        .collect();
    let (lo, hi) = result.lsd_band.edges_hz();
    json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": result.config_hash,
        "config": cfg,
        "seed": cfg.seed,
        "signal_duration_s": result.signal_duration_s,
        "sample_rate_hz": result.sample_rate_hz,
        "snr_reference": result.snr_reference,
        "noise": "white gaussian",
        "primary_path": cfg.primary_path.as_ref().map_or("synthetic default".into(), |p| p.display().to_string()),
        "secondary_path": cfg.secondary_path.as_ref().map_or("unit impulse".into(), |p| p.display().to_string()),
        "metric_filter_taps": cfg.saf.taps,
        "lsd_band_hz": [lo, hi],
        "lsd_fft_size": result.lsd_band.fft_size,
        "trajectory_interval_s": 1.0,
        "rows": rows,
    })
}

/// Write results, trajectories, the prediction trace and the manifest into
/// `dir`, creating it if needed. `signal` is the experiment's x(n), used for
/// the trace envelope. Returns the written paths.
pub fn write_outputs(
    result: &ExperimentResult,
    signal: &Signal,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join(RESULTS_FILE);
    write_results_csv(result, fs::File::create(&path)?)?;
    written.push(path);
    for row in &result.rows {
        let path = dir.join(trajectory_file_name(row));
        write_trajectory_csv(row, fs::File::create(&path)?)?;
        written.push(path);
    }
    if let Some(det) = &result.detection {
        if result.rows.iter().any(|r| r.mode == SadMode::On) {
            let path = dir.join(TRACE_FILE);
            let file = fs::File::create(&path)?;
            emit_prediction_trace(signal, &det.raw, &det.post, det.hop_ms, file)?;
            written.push(path);
        }
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest(result))?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
