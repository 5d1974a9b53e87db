//! PCM WAV input/output and short-time framing.
//!
//! Only uncompressed integer PCM (audio format 1) at 8, 16 or 24 bits is
//! accepted. Multichannel files are reduced to mono by averaging channels.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Default analysis frame length in samples.
pub const DEFAULT_FRAME_LEN: usize = 256;
/// Default hop between frames in samples (50% overlap).
pub const DEFAULT_HOP: usize = 128;

/// A mono recording with samples normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio signal has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// A fixed-length window of a source signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<f64>,
    pub start_index: usize,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    audio_format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

/// Decodes an in-memory RIFF/WAVE byte stream.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioSignal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE signature".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                Error::MalformedWav(format!(
                    "chunk {:?} declares {size} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    bytes.len() - body_start
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::MalformedWav("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some(FmtChunk {
                    audio_format: le_u16(body, 0),
                    channels: le_u16(body, 2),
                    sample_rate: le_u32(body, 4),
                    block_align: le_u16(body, 12),
                    bits: le_u16(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are padded to even length
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    if fmt.audio_format != 1 || !matches!(fmt.bits, 8 | 16 | 24) {
        return Err(Error::NotPcm {
            format: fmt.audio_format,
            bits: fmt.bits,
        });
    }
    if fmt.channels == 0 {
        return Err(Error::MalformedWav("zero channels".into()));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::MalformedWav("zero sample rate".into()));
    }
    let bytes_per_sample = (fmt.bits / 8) as usize;
    let block = bytes_per_sample * fmt.channels as usize;
    if fmt.block_align as usize != block {
        return Err(Error::MalformedWav(format!(
            "block align {} inconsistent with {} channels of {} bits",
            fmt.block_align, fmt.channels, fmt.bits
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.len() % block != 0 {
        return Err(Error::MalformedWav(format!(
            "data chunk length {} is not a multiple of the {block}-byte block",
            data.len()
        )));
    }

    let full_scale = (1u32 << (fmt.bits - 1)) as f64;
    let decode = |s: &[u8]| -> f64 {
        let v = match fmt.bits {
            8 => s[0] as i32 - 128,
            16 => i16::from_le_bytes([s[0], s[1]]) as i32,
            _ => (i32::from_le_bytes([0, s[0], s[1], s[2]])) >> 8,
        };
        v as f64 / full_scale
    };

    let channels = fmt.channels as usize;
    let samples = data
        .chunks_exact(block)
        .map(|frame| {
            let sum: f64 = frame.chunks_exact(bytes_per_sample).map(decode).sum();
            sum / channels as f64
        })
        .collect();
    AudioSignal::new(samples, fmt.sample_rate)
}

/// Encodes a signal as 16-bit mono PCM. Samples are clamped to [-1, 1].
pub fn encode_wav16(signal: &AudioSignal) -> Vec<u8> {
    let data_len = signal.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate().to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in signal.samples() {
        let q = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_wav16(signal))
        .map_err(|e| Error::io(path, e))
}

/// Splits a signal into frames at offsets `0, hop, 2*hop, ...`; a trailing
/// partial frame is dropped.
pub fn frame_signal(signal: &AudioSignal, frame_len: usize, hop: usize) -> Result<Vec<Frame>> {
    frame_samples(signal.samples(), frame_len, hop)
}

pub(crate) fn frame_samples(samples: &[f64], frame_len: usize, hop: usize) -> Result<Vec<Frame>> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::invalid("frame length and hop must be positive"));
    }
    if frame_len > samples.len() {
        return Err(Error::invalid(format!(
            "frame length {frame_len} exceeds signal length {}",
            samples.len()
        )));
    }
    let count = (samples.len() - frame_len) / hop + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * hop;
            Frame {
                samples: samples[start..start + frame_len].to_vec(),
                start_index: start,
            }
        })
        .collect())
}

/// Symmetric Hamming window `0.54 - 0.46 cos(2πk/(n-1))`; `[1.0]` for `n == 1`.
pub fn hamming_window(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => {
            let denom = (n - 1) as f64;
            (0..n)
                .map(|k| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / denom).cos())
                .collect()
        }
    }
}
