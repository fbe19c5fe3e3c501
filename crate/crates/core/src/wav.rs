//! RIFF/WAVE input and output (16/24-bit PCM, 32-bit float).

use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Pcm24,
    Float32,
}

impl SampleFormat {
    fn spec(self) -> (u16, HoundFormat) {
        match self {
            SampleFormat::Pcm16 => (16, HoundFormat::Int),
            SampleFormat::Pcm24 => (24, HoundFormat::Int),
            SampleFormat::Float32 => (32, HoundFormat::Float),
        }
    }
}

/// Deinterleaved audio in `[-1, 1]` full scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WavAudio {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
    pub format: SampleFormat,
}

impl WavAudio {
    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavAudio> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let format = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => SampleFormat::Pcm16,
        (HoundFormat::Int, 24) => SampleFormat::Pcm24,
        (HoundFormat::Float, 32) => SampleFormat::Float32,
        (f, b) => return invalid(format!("unsupported sample format {f:?} with {b} bits")),
    };
    let n = spec.channels as usize;
    if n == 0 {
        return invalid("wav file declares no channels");
    }
    let interleaved: Vec<f64> = match format {
        SampleFormat::Float32 => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        _ => {
            let scale = 1.0 / (1u32 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    if interleaved.iter().any(|v| !v.is_finite()) {
        return invalid("wav file contains non-finite samples");
    }
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n); n];
    for frame in interleaved.chunks_exact(n) {
        for (c, &v) in channels.iter_mut().zip(frame) {
            c.push(v);
        }
    }
    Ok(WavAudio {
        channels,
        sample_rate: spec.sample_rate,
        format,
    })
}

/// Write `audio`; integer formats are clamped to full scale. Returns the
/// number of clipped samples.
pub fn write_wav(path: impl AsRef<Path>, audio: &WavAudio) -> Result<usize> {
    let n = audio.channels.len();
    if n == 0 || n > u16::MAX as usize {
        return invalid(format!("cannot write {n} channels"));
    }
    let frames = audio.frames();
    if audio.channels.iter().any(|c| c.len() != frames) {
        return invalid("channels differ in length");
    }
    let (bits, sample_format) = audio.format.spec();
    let spec = WavSpec {
        channels: n as u16,
        sample_rate: audio.sample_rate,
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec)?;
    let mut clipped = 0;
    for i in 0..frames {
        for c in &audio.channels {
            let v = c[i];
            match audio.format {
                SampleFormat::Float32 => writer.write_sample(v as f32)?,
                _ => {
                    let full = (1i64 << (bits - 1)) as f64;
                    let q = (v * full).round();
                    let lo = -full;
                    let hi = full - 1.0;
                    if q < lo || q > hi {
                        clipped += 1;
                    }
                    writer.write_sample(q.clamp(lo, hi) as i32)?;
                }
            }
        }
    }
    writer.finalize()?;
    Ok(clipped)
}
