//! Mono audio container, WAV I/O, spectral transforms and resampling.
//!
//! Every other module exchanges audio as an [`AudioClip`]: a non-empty buffer
//! of finite `f32` samples at a positive sample rate. Clips are immutable once
//! built, so they can be shared freely across worker threads.

mod resample;
mod stft;
mod wav;

pub use resample::resample;
pub use stft::{hann_window, istft, stft, Spectrogram, StftPlan};
pub use wav::{load_wav, save_wav};

use crate::error::{Error, Result};

/// Default analysis window for music material.
pub const DEFAULT_WINDOW: usize = 2048;
/// Default hop between analysis frames.
pub const DEFAULT_HOP: usize = 512;

/// A single-channel buffer of samples with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting empty buffers, a zero sample rate and
    /// non-finite samples.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidAudio("clip has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidAudio("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidAudio(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// An all-zero clip.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// Skips validation. Callers guarantee the invariants, e.g. sums of
    /// already-valid clips that cannot overflow.
    pub(crate) fn from_parts_unchecked(samples: Vec<f32>, sample_rate: u32) -> Self {
        debug_assert!(!samples.is_empty() && sample_rate > 0);
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum()
    }

    pub fn rms(&self) -> f64 {
        (self.energy() / self.samples.len() as f64).sqrt()
    }

    /// Largest absolute sample difference against another clip of equal length.
    pub fn max_abs_diff(&self, other: &AudioClip) -> Result<f32> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "clip lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }

    /// Copy of `range`, zero everywhere else, at full length.
    pub fn gated(&self, range: std::ops::Range<usize>) -> AudioClip {
        let mut out = vec![0.0; self.samples.len()];
        out[range.clone()].copy_from_slice(&self.samples[range]);
        AudioClip::from_parts_unchecked(out, self.sample_rate)
    }

    /// Window of `len` samples starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<AudioClip> {
        if len == 0 || start + len > self.samples.len() {
            return Err(Error::arg(
                "slice",
                format!(
                    "[{start}, {}) outside clip of {} samples",
                    start + len,
                    self.samples.len()
                ),
            ));
        }
        Ok(AudioClip::from_parts_unchecked(
            self.samples[start..start + len].to_vec(),
            self.sample_rate,
        ))
    }
}
