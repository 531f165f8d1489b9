//! Synthetic intermittent snoring: harmonic bursts with an inspiration and an
//! expiration phase, separated by silences sized to hit a target snoring
//! ratio. Also the default synthetic acoustic paths.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{PathModel, Signal};
use crate::error::{Error, Result};

/// One annotated snore event, `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnoreProfile {
    pub f0_range_hz: [f64; 2],
    pub inspiration_band_hz: [f64; 2],
    pub expiration_band_hz: [f64; 2],
    pub harmonics: usize,
    /// Uniform event length range.
    pub event_duration_s: [f64; 2],
    pub min_silence_s: f64,
    pub snore_ratio: f64,
    /// Share of each event spent in the inspiration phase.
    pub inspiration_fraction: f64,
    /// Raised-cosine ramp length at both ends of each phase.
    pub ramp_s: f64,
    /// Uniform per-event peak amplitude range.
    pub peak_amplitude: [f64; 2],
    /// Breath noise power relative to the harmonic stack.
    pub breath_noise_db: f64,
    /// RMS of the white floor present everywhere (reference microphone
    /// self-noise). `None` gives digital silence between events.
    pub background_dbfs: Option<f64>,
    pub seed: u64,
}

impl Default for SnoreProfile {
    fn default() -> Self {
        SnoreProfile {
            f0_range_hz: [100.0, 300.0],
            inspiration_band_hz: [100.0, 200.0],
            expiration_band_hz: [200.0, 300.0],
            harmonics: 10,
            event_duration_s: [1.0, 4.0],
            min_silence_s: 0.5,
            snore_ratio: 0.128,
            inspiration_fraction: 0.4,
            ramp_s: 0.08,
            peak_amplitude: [0.3, 0.6],
            breath_noise_db: -13.0,
            background_dbfs: Some(-40.0),
            seed: 0,
        }
    }
}

impl SnoreProfile {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.f0_range_hz;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::invalid("f0 range must be positive and ordered"));
        }
        for (name, band) in [
            ("inspiration", self.inspiration_band_hz),
            ("expiration", self.expiration_band_hz),
        ] {
            if !(band[0] >= lo && band[1] <= hi && band[0] <= band[1]) {
                return Err(Error::invalid(format!(
                    "{name} band {band:?} lies outside the f0 range"
                )));
            }
        }
        if self.harmonics == 0 {
            return Err(Error::invalid("at least one harmonic is required"));
        }
        let [emin, emax] = self.event_duration_s;
        if !(emin > 0.0 && emin <= emax) {
            return Err(Error::invalid(
                "event durations must be positive and ordered",
            ));
        }
        if !(self.snore_ratio > 0.0 && self.snore_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "snore ratio {} is outside (0, 1)",
                self.snore_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.inspiration_fraction) {
            return Err(Error::invalid("inspiration fraction must lie in [0, 1]"));
        }
        if !(self.min_silence_s >= 0.0 && self.ramp_s >= 0.0) {
            return Err(Error::invalid(
                "silence and ramp lengths must be non-negative",
            ));
        }
        let [amin, amax] = self.peak_amplitude;
        if !(amin >= 0.0 && amin <= amax && amax <= 1.0) {
            return Err(Error::invalid("peak amplitude range must lie in [0, 1]"));
        }
        Ok(())
    }

    fn mean_silence_s(&self) -> f64 {
        let mean_event = (self.event_duration_s[0] + self.event_duration_s[1]) / 2.0;
        mean_event * (1.0 - self.snore_ratio) / self.snore_ratio
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub signal: Signal,
    pub annotations: Vec<Annotation>,
}

impl SynthOutput {
    /// Annotated snoring time over total duration.
    pub fn snore_ratio(&self) -> f64 {
        let total = self
            .annotations
            .iter()
            .fold(0.0, |acc, a| acc + (a.end_s - a.start_s));
        total / self.signal.duration_s()
    }
}

struct Phase {
    start: usize,
    len: usize,
    f0_start: f64,
    f0_end: f64,
}

fn render_phase(
    out: &mut [f64],
    phase: &Phase,
    peak: f64,
    profile: &SnoreProfile,
    fs: f64,
    rng: &mut ChaCha8Rng,
) {
    let h_sum: f64 = (1..=profile.harmonics).map(|h| 1.0 / h as f64).sum();
    let h_pow: f64 = (1..=profile.harmonics).map(|h| 0.5 / (h * h) as f64).sum();
    let harmonic_rms = peak / h_sum * h_pow.sqrt();
    // uniform noise: peak = sqrt(3) * rms
    let breath_peak = 3f64.sqrt() * harmonic_rms * 10f64.powf(profile.breath_noise_db / 20.0);
    let ramp = ((profile.ramp_s * fs) as usize).min(phase.len / 2);
    let phases0: Vec<f64> = (0..profile.harmonics)
        .map(|_| rng.gen_range(0.0..2.0 * PI))
        .collect();
    let mut theta = 0.0;
    for i in 0..phase.len {
        let frac = i as f64 / phase.len.max(1) as f64;
        let f0 = phase.f0_start + (phase.f0_end - phase.f0_start) * frac;
        theta += 2.0 * PI * f0 / fs;
        let env = if i < ramp {
            0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos()
        } else if phase.len - i <= ramp {
            0.5 - 0.5 * (PI * (phase.len - i) as f64 / ramp as f64).cos()
        } else {
            1.0
        };
        let mut v = 0.0;
        for (h, p0) in phases0.iter().enumerate() {
            let h = (h + 1) as f64;
            v += (h * theta + p0).sin() / h;
        }
        v *= peak / h_sum;
        v += breath_peak * rng.gen_range(-1.0..1.0);
        out[phase.start + i] += env * v;
    }
}

fn draw_f0(band: [f64; 2], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let start = if band[0] < band[1] {
        rng.gen_range(band[0]..=band[1])
    } else {
        band[0]
    };
    let end = (start * rng.gen_range(0.95..=1.05)).clamp(band[0], band[1]);
    (start, end)
}

/// Generate `duration_s` seconds of intermittent snoring at `fs`.
pub fn generate(profile: &SnoreProfile, duration_s: f64, fs: u32) -> Result<SynthOutput> {
    profile.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    if fs == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let [emin, emax] = profile.event_duration_s;
    if duration_s < emin / profile.snore_ratio {
        return Err(Error::invalid(format!(
            "{duration_s} s cannot hold a {emin} s event at snore ratio {}",
            profile.snore_ratio
        )));
    }
    let fsf = fs as f64;
    let n_total = (duration_s * fsf).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let mut out = vec![0.0; n_total];
    let mut annotations = Vec::new();

    let mean_silence = profile.mean_silence_s();
    let mut t = rng.gen_range(0.3..=1.0) * mean_silence;
    t = t.max(profile.min_silence_s);
    let mut snored = 0.0;
    loop {
        let len = if emin < emax {
            rng.gen_range(emin..=emax)
        } else {
            emin
        };
        let end = (t + len).min(duration_s);
        // a truncated tail shorter than the minimum event is left silent
        if end - t < emin.min(0.5 * len) {
            break;
        }
        let a = (t * fsf).round() as usize;
        let b = ((end * fsf).round() as usize).min(n_total);
        if b <= a {
            break;
        }
        let split = a + ((b - a) as f64 * profile.inspiration_fraction).round() as usize;
        let peak = rng.gen_range(profile.peak_amplitude[0]..=profile.peak_amplitude[1]);
        for (range, band) in [
            ((a, split), profile.inspiration_band_hz),
            ((split, b), profile.expiration_band_hz),
        ] {
            if range.1 > range.0 {
                let (f0_start, f0_end) = draw_f0(band, &mut rng);
                let phase = Phase {
                    start: range.0,
                    len: range.1 - range.0,
                    f0_start,
                    f0_end,
                };
                render_phase(&mut out, &phase, peak, profile, fsf, &mut rng);
            }
        }
        let start_s = a as f64 / fsf;
        let end_s = b as f64 / fsf;
        annotations.push(Annotation { start_s, end_s });
        snored += end_s - start_s;
        // steer the next silence towards the target ratio
        let deficit = snored / profile.snore_ratio - end_s;
        let silence = (deficit * rng.gen_range(0.7..=1.3)).max(profile.min_silence_s);
        t = end_s + silence;
        if t >= duration_s {
            break;
        }
    }

    if let Some(dbfs) = profile.background_dbfs {
        let peak = 3f64.sqrt() * 10f64.powf(dbfs / 20.0);
        for v in out.iter_mut() {
            *v += peak * rng.gen_range(-1.0..1.0);
        }
    }
    for v in out.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(SynthOutput {
        signal: Signal::new(out, fs)?,
        annotations,
    })
}

fn check_sorted(annotations: &[Annotation]) -> Result<()> {
    for a in annotations {
        if !(a.start_s <= a.end_s) || a.start_s < 0.0 {
            return Err(Error::invalid(format!(
                "malformed interval [{}, {}]",
                a.start_s, a.end_s
            )));
        }
    }
    for w in annotations.windows(2) {
        if w[1].start_s < w[0].end_s {
            return Err(Error::invalid(format!(
                "intervals [{}, {}] and [{}, {}] overlap or are unsorted",
                w[0].start_s, w[0].end_s, w[1].start_s, w[1].end_s
            )));
        }
    }
    Ok(())
}

/// Frame `i` is active iff its centre `(i + 0.5) * hop` lies in an interval.
pub fn annotations_to_frames(
    annotations: &[Annotation],
    hop_ms: f64,
    frames: usize,
) -> Result<Vec<bool>> {
    check_sorted(annotations)?;
    if !(hop_ms > 0.0) {
        return Err(Error::invalid("frame hop must be positive"));
    }
    let mut out = vec![false; frames];
    for a in annotations {
        let (s, e) = (a.start_s * 1000.0, a.end_s * 1000.0);
        // first i with centre >= s, first i with centre >= e
        let first = ((s / hop_ms - 0.5).ceil().max(0.0)) as usize;
        let last = ((e / hop_ms - 0.5).ceil().max(0.0)) as usize;
        for b in out.iter_mut().take(last).skip(first) {
            *b = true;
        }
    }
    Ok(out)
}

/// Runs of active frames as `[i * hop, j * hop)` intervals.
pub fn frames_to_annotations(frames: &[bool], hop_ms: f64) -> Vec<Annotation> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in frames.iter().chain(std::iter::once(&false)).enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Annotation {
                    start_s: s as f64 * hop_ms / 1000.0,
                    end_s: i as f64 * hop_ms / 1000.0,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Per-sample activity mask from annotations.
pub fn annotations_to_mask(
    annotations: &[Annotation],
    sample_rate_hz: u32,
    len: usize,
) -> Result<Vec<bool>> {
    check_sorted(annotations)?;
    let fs = sample_rate_hz as f64;
    let mut mask = vec![false; len];
    for a in annotations {
        let s = ((a.start_s * fs).round() as usize).min(len);
        let e = ((a.end_s * fs).round() as usize).min(len);
        mask[s..e].iter_mut().for_each(|m| *m = true);
    }
    Ok(mask)
}

/// Parameters of the synthetic room response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomResponse {
    pub taps: usize,
    pub direct_delay: usize,
    pub reflections: usize,
    pub reflection_window: usize,
    pub decay_taps: f64,
    pub tail_gain: f64,
}

impl Default for RoomResponse {
    fn default() -> Self {
        RoomResponse {
            taps: PathModel::DEFAULT_LEN,
            direct_delay: 6,
            reflections: 8,
            reflection_window: 120,
            decay_taps: 45.0,
            tail_gain: 0.08,
        }
    }
}

/// Sparse early reflections plus an exponentially decaying diffuse tail,
/// smoothed by `[1/4, 1/2, 1/4]` so the response vanishes at Nyquist (the
/// stacked fullband filter cannot represent energy there).
pub fn synthetic_path(room: &RoomResponse, seed: u64) -> Result<PathModel> {
    if room.taps < 3 || room.direct_delay + 3 > room.taps {
        return Err(Error::invalid(
            "room response needs room for the direct path",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_len = room.taps - 2;
    let mut raw = vec![0.0; raw_len];
    raw[room.direct_delay] = 1.0;
    let window_end = (room.direct_delay + room.reflection_window).min(raw_len);
    for _ in 0..room.reflections {
        let at = rng.gen_range(room.direct_delay + 1..window_end);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let decay = (-((at - room.direct_delay) as f64) / (2.0 * room.decay_taps)).exp();
        raw[at] += sign * rng.gen_range(0.2..0.6) * decay;
    }
    for (n, v) in raw.iter_mut().enumerate().skip(room.direct_delay + 1) {
        let g: f64 = rng.sample(StandardNormal);
        *v += room.tail_gain * g * (-((n - room.direct_delay) as f64) / room.decay_taps).exp();
    }
    let mut taps = vec![0.0; room.taps];
    for (n, v) in raw.iter().enumerate() {
        taps[n] += 0.25 * v;
        taps[n + 1] += 0.5 * v;
        taps[n + 2] += 0.25 * v;
    }
    PathModel::new(taps)
}

pub const DEFAULT_PRIMARY_SEED: u64 = 1;
pub const DEFAULT_SECONDARY_SEED: u64 = 2;

/// The default primary path p(n).
pub fn default_primary_path() -> PathModel {
    synthetic_path(&RoomResponse::default(), DEFAULT_PRIMARY_SEED).expect("default room is valid")
}

/// A synthetic 256-tap secondary path, shorter and more direct than p(n).
pub fn default_secondary_path() -> PathModel {
    let room = RoomResponse {
        direct_delay: 2,
        reflections: 4,
        reflection_window: 60,
        decay_taps: 20.0,
        ..RoomResponse::default()
    };
    synthetic_path(&room, DEFAULT_SECONDARY_SEED).expect("default room is valid")
}
