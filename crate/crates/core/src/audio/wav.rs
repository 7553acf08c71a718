//! RIFF/WAVE reading (PCM-16/24/32, float-32; mono or stereo) and float-32
//! writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{resample, AudioClip};
use crate::error::{Error, Result};

fn wav_error(path: &Path, source: hound::Error) -> Error {
    match source {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::Wav {
            path: path.to_path_buf(),
            source: other,
        },
    }
}

fn unsupported(path: &Path, property: &'static str, detail: impl Into<String>) -> Error {
    Error::UnsupportedWav {
        path: path.to_path_buf(),
        property,
        detail: detail.into(),
    }
}

/// Reads a WAV file into a mono clip, averaging channels, and optionally
/// resamples it to `target_rate`.
pub fn load_wav(path: impl AsRef<Path>, target_rate: Option<u32>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();

    if !(1..=2).contains(&spec.channels) {
        return Err(unsupported(
            path,
            "channel count",
            format!("{} channels (expected 1 or 2)", spec.channels),
        ));
    }
    if spec.sample_rate == 0 {
        return Err(unsupported(path, "sample rate", "0 Hz"));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        (format, bits) => {
            return Err(unsupported(
                path,
                "encoding",
                format!("{format:?} {bits}-bit (expected PCM-16/24/32 or float-32)"),
            ))
        }
    };

    if interleaved.is_empty() {
        return Err(unsupported(path, "length", "file contains no audio frames"));
    }

    let samples = match spec.channels {
        1 => interleaved,
        _ => interleaved
            .chunks_exact(2)
            .map(|f| ((f[0] as f64 + f[1] as f64) * 0.5) as f32)
            .collect(),
    };

    let clip = AudioClip::new(samples, spec.sample_rate)
        .map_err(|e| unsupported(path, "samples", e.to_string()))?;
    match target_rate {
        Some(rate) if rate != clip.sample_rate() => resample(&clip, rate),
        _ => Ok(clip),
    }
}

/// Writes a mono float-32 WAV. Nothing is written if any sample is not finite.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(i) = clip.samples().iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidAudio(format!(
            "refusing to write {}: sample {i} is not finite",
            path.display()
        )));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in clip.samples() {
        writer.write_sample(s).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}
