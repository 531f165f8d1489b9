//! `SADW` weight container.
//!
//! ```text
//! magic      "SADW"
//! version    u16
//! n_mels     u32
//! win_ms     f32
//! hop_ms     f32
//! mel        u32    (0 = Slaney)
//! leaky      f32    Leaky ReLU negative slope
//! bn_eps     f32
//! count      u32    number of tensors
//! tensor     name_len u32, name utf-8, rank u32, dims u32 * rank, data f32 * prod(dims)
//! ```
//!
//! All integers and floats are little-endian. Tensor order is free; names and
//! shapes must match [`CrnnWeights::layer_shapes`].

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::crnn::CrnnWeights;
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"SADW";
pub const WEIGHTS_VERSION: u16 = 1;
const MAX_NAME_LEN: u32 = 256;
const MAX_RANK: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MelVariant {
    Slaney,
}

impl MelVariant {
    fn tag(self) -> u32 {
        match self {
            MelVariant::Slaney => 0,
        }
    }

    fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(MelVariant::Slaney),
            _ => None,
        }
    }
}

/// Front-end and activation constants stored alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontendConstants {
    pub n_mels: usize,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub mel_variant: MelVariant,
    pub leaky_slope: f64,
    pub bn_epsilon: f64,
}

impl Default for FrontendConstants {
    fn default() -> Self {
        FrontendConstants {
            n_mels: 40,
            win_ms: 30.0,
            hop_ms: 10.0,
            mel_variant: MelVariant::Slaney,
            leaky_slope: 0.3,
            bn_epsilon: 1e-3,
        }
    }
}

impl FrontendConstants {
    pub fn frame_config(&self) -> super::FrameConfig {
        super::FrameConfig {
            n_mels: self.n_mels,
            win_ms: self.win_ms,
            hop_ms: self.hop_ms,
        }
    }
}

pub fn write_weights<W: Write>(weights: &CrnnWeights, mut out: W) -> Result<()> {
    let fe = &weights.frontend;
    out.write_all(WEIGHTS_MAGIC)?;
    out.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
    out.write_all(&(fe.n_mels as u32).to_le_bytes())?;
    out.write_all(&(fe.win_ms as f32).to_le_bytes())?;
    out.write_all(&(fe.hop_ms as f32).to_le_bytes())?;
    out.write_all(&fe.mel_variant.tag().to_le_bytes())?;
    out.write_all(&(fe.leaky_slope as f32).to_le_bytes())?;
    out.write_all(&(fe.bn_epsilon as f32).to_le_bytes())?;
    let shapes = CrnnWeights::layer_shapes(fe);
    out.write_all(&(shapes.len() as u32).to_le_bytes())?;
    for ((name, dims), data) in shapes.iter().zip(weights.tensors()) {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(dims.len() as u32).to_le_bytes())?;
        for &d in dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in data {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, layer: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::weights(layer, "file is truncated")
            } else {
                Error::Io(e)
            }
        })?;
        Ok(b)
    }

    fn u32(&mut self, layer: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(layer)?))
    }

    fn f32(&mut self, layer: &str) -> Result<f64> {
        Ok(f32::from_le_bytes(self.bytes(layer)?) as f64)
    }
}

pub fn read_weights<R: Read>(input: R) -> Result<CrnnWeights> {
    let mut r = Reader { inner: input };
    let magic: [u8; 4] = r.bytes("header")?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::weights("header", "not a SADW weight file"));
    }
    let version = u16::from_le_bytes(r.bytes("header")?);
    if version != WEIGHTS_VERSION {
        return Err(Error::weights(
            "header",
            format!("unsupported version {version}"),
        ));
    }
    let n_mels = r.u32("header")? as usize;
    let win_ms = r.f32("header")?;
    let hop_ms = r.f32("header")?;
    let tag = r.u32("header")?;
    let mel_variant = MelVariant::from_tag(tag)
        .ok_or_else(|| Error::weights("header", format!("unknown Mel variant {tag}")))?;
    let leaky_slope = r.f32("header")?;
    let bn_epsilon = r.f32("header")?;
    let frontend = FrontendConstants {
        n_mels,
        win_ms,
        hop_ms,
        mel_variant,
        leaky_slope,
        bn_epsilon,
    };
    if !(win_ms > 0.0 && hop_ms > 0.0 && leaky_slope.is_finite() && bn_epsilon >= 0.0) {
        return Err(Error::weights("header", "invalid front-end constants"));
    }

    let count = r.u32("header")?;
    let mut found: HashMap<String, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for i in 0..count {
        let at = format!("#{i}");
        let name_len = r.u32(&at)?;
        if name_len > MAX_NAME_LEN {
            return Err(Error::weights(at, "layer name too long"));
        }
        let mut name = vec![0u8; name_len as usize];
        r.inner
            .read_exact(&mut name)
            .map_err(|_| Error::weights(at.clone(), "file is truncated"))?;
        let name = String::from_utf8(name).map_err(|_| Error::weights(at, "name is not UTF-8"))?;
        let rank = r.u32(&name)?;
        if rank > MAX_RANK {
            return Err(Error::weights(name, format!("rank {rank} is too large")));
        }
        let dims = (0..rank)
            .map(|_| r.u32(&name).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let expected = CrnnWeights::layer_shapes(&frontend)
            .into_iter()
            .find(|(n, _)| *n == name);
        let Some((_, want)) = expected else {
            return Err(Error::weights(name, "unexpected layer"));
        };
        if dims != want {
            return Err(Error::weights(
                name,
                format!("shape {dims:?}, expected {want:?}"),
            ));
        }
        let data = (0..dims.iter().product::<usize>())
            .map(|_| r.f32(&name))
            .collect::<Result<Vec<_>>>()?;
        if found.insert(name.clone(), (dims, data)).is_some() {
            return Err(Error::weights(name, "layer appears twice"));
        }
    }

    let tensors = CrnnWeights::layer_shapes(&frontend)
        .into_iter()
        .map(|(name, _)| {
            found
                .remove(&name)
                .map(|(_, data)| data)
                .ok_or_else(|| Error::weights(name, "layer is missing"))
        })
        .collect::<Result<Vec<_>>>()?;
    CrnnWeights::from_tensors(frontend, tensors)
}

impl CrnnWeights {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        read_weights(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        write_weights(self, &mut w)?;
        w.flush()?;
        Ok(())
    }
}
