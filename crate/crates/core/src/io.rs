//! File formats: WAV audio, impulse responses, prediction streams and
//! annotation sidecars.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dsp::{PathModel, Signal};
use crate::error::{Error, Result};
use crate::synth::Annotation;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Read a WAV file of any integer or float format; multichannel input is
/// averaged to mono.
pub fn read_wav(path: &Path) -> Result<Signal> {
    let reader = hound::WavReader::new(BufReader::new(open(path)?))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Signal::new(mono, spec.sample_rate)
}

/// Write 16-bit PCM mono; samples are clipped to [-1, 1].
pub fn write_wav(path: &Path, signal: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &v in signal.samples() {
        w.write_sample((v.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    w.finalize()?;
    Ok(())
}

/// Impulse response from `.f32` (raw little-endian float32) or `.wav`.
pub fn read_ir(path: &Path) -> Result<PathModel> {
    match extension(path).as_str() {
        "f32" => {
            let mut bytes = Vec::new();
            open(path)?.read_to_end(&mut bytes)?;
            if bytes.len() % 4 != 0 {
                return Err(Error::invalid(format!(
                    "{}: length is not a multiple of 4 bytes",
                    path.display()
                )));
            }
            let taps = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            PathModel::new(taps)
        }
        "wav" => PathModel::new(read_wav(path)?.into_samples()),
        other => Err(Error::invalid(format!(
            "{}: unsupported impulse response extension `{other}` (expected .f32 or .wav)",
            path.display()
        ))),
    }
}

/// Write an impulse response as `.f32` raw or as a 32-bit float `.wav`.
pub fn write_ir(path: &Path, taps: &[f64], sample_rate_hz: u32) -> Result<()> {
    match extension(path).as_str() {
        "f32" => {
            let mut w = BufWriter::new(File::create(path)?);
            for &v in taps {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
            w.flush()?;
            Ok(())
        }
        "wav" => {
            let spec = hound::WavSpec {
                channels: 1,
                sample_rate: sample_rate_hz,
                bits_per_sample: 32,
                sample_format: hound::SampleFormat::Float,
            };
            let mut w = hound::WavWriter::create(path, spec)?;
            for &v in taps {
                w.write_sample(v as f32)?;
            }
            w.finalize()?;
            Ok(())
        }
        other => Err(Error::invalid(format!(
            "{}: unsupported impulse response extension `{other}`",
            path.display()
        ))),
    }
}

/// Predictions as text (one `0`/`1` per line) or, for `.bits`, a u64 LE
/// count followed by the bits packed LSB first.
pub fn read_predictions(path: &Path) -> Result<Vec<bool>> {
    let mut file = open(path)?;
    if extension(path) == "bits" {
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        return decode_bits(&bytes);
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        match line.trim() {
            "0" => out.push(false),
            "1" => out.push(true),
            "" => {}
            other => {
                return Err(Error::invalid(format!(
                    "{}:{}: expected 0 or 1, found `{other}`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, bits: &[bool]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if extension(path) == "bits" {
        w.write_all(&encode_bits(bits))?;
    } else {
        for &b in bits {
            w.write_all(if b { b"1\n" } else { b"0\n" })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn encode_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = (bits.len() as u64).to_le_bytes().to_vec();
    for chunk in bits.chunks(8) {
        out.push(
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i)),
        );
    }
    out
}

pub fn decode_bits(bytes: &[u8]) -> Result<Vec<bool>> {
    if bytes.len() < 8 {
        return Err(Error::invalid("bit stream is missing its count header"));
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let body = &bytes[8..];
    if body.len() != count.div_ceil(8) {
        return Err(Error::invalid(format!(
            "bit stream declares {count} bits but carries {} bytes",
            body.len()
        )));
    }
    Ok((0..count)
        .map(|i| body[i / 8] >> (i % 8) & 1 == 1)
        .collect())
}

/// Annotation sidecar: CSV rows `start_s,end_s`, optional header.
pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(open(path)?));
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::invalid(format!(
                "{}:{}: expected two columns",
                path.display(),
                i + 1
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => out.push(Annotation {
                start_s: v[0],
                end_s: v[1],
            }),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::invalid(format!(
                    "{}:{}: non-numeric interval",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn write_annotations(path: &Path, annotations: &[Annotation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["start_s", "end_s"])?;
    for a in annotations {
        w.write_record([format!("{:.6}", a.start_s), format!("{:.6}", a.end_s)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        for len in [0usize, 1, 7, 8, 9, 100] {
            let bits: Vec<bool> = (0..len).map(|i| i % 3 == 0).collect();
            assert_eq!(decode_bits(&encode_bits(&bits)).unwrap(), bits);
        }
        assert_eq!(
            encode_bits(&[true, false, true]),
            vec![3, 0, 0, 0, 0, 0, 0, 0, 0b101]
        );
        assert!(decode_bits(&[1, 0, 0]).is_err());
        assert!(decode_bits(&[9, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bits = vec![true, false, false, true, true];
        for name in ["p.txt", "p.bits"] {
            let path = dir.path().join(name);
            write_predictions(&path, &bits).unwrap();
            assert_eq!(read_predictions(&path).unwrap(), bits);
        }

        let taps = vec![0.5, -0.25, 0.125];
        for name in ["h.f32", "h.wav"] {
            let path = dir.path().join(name);
            write_ir(&path, &taps, 44_100).unwrap();
            assert_eq!(read_ir(&path).unwrap().taps(), &taps[..]);
        }

        let ann = vec![
            Annotation {
                start_s: 1.0,
                end_s: 2.5,
            },
            Annotation {
                start_s: 4.0,
                end_s: 4.25,
            },
        ];
        let path = dir.path().join("a.csv");
        write_annotations(&path, &ann).unwrap();
        assert_eq!(read_annotations(&path).unwrap(), ann);

        let sig = Signal::new(vec![0.0, 0.5, -0.5, 1.0, -1.0], 16_000).unwrap();
        let path = dir.path().join("s.wav");
        write_wav(&path, &sig).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate_hz(), 16_000);
        for (a, b) in back.samples().iter().zip(sig.samples()) {
            assert!((a - b).abs() <= 1.0 / 32767.0);
        }
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for (l, r) in [(16384i16, 0i16), (-16384, -16384)] {
            w.write_sample(l).unwrap();
            w.write_sample(r).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&path).unwrap().samples(), &[0.25, -0.5]);
    }

    #[test]
    fn missing_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_wav(&dir.path().join("none.wav")),
            Err(Error::MissingFile(_))
        ));
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "0\n1\n2\n").unwrap();
        assert!(read_predictions(&path).is_err());
        let path = dir.path().join("h.raw");
        std::fs::write(&path, [0u8; 8]).unwrap();
        assert!(read_ir(&path).is_err());
    }
}
