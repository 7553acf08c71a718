//! Hann-windowed STFT with centered reflection padding, and its overlap-add
//! inverse normalized by the squared-window sum.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::AudioClip;
use crate::error::{Error, Result};

/// Periodic Hann window of length `size`.
pub fn hann_window(size: usize) -> Vec<f64> {
    (0..size)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / size as f64).cos())
        .collect()
}

/// Complex STFT coefficients, stored frame-major: `num_frames` rows of
/// `window_size / 2 + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: Vec<Complex64>,
    num_bins: usize,
    num_frames: usize,
    window_size: usize,
    hop_size: usize,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop_size(&self) -> usize {
        self.hop_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.bins[t * self.num_bins..(t + 1) * self.num_bins]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.bins[t * self.num_bins..(t + 1) * self.num_bins]
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.bins[frame * self.num_bins + bin]
    }

    /// All coefficients, frame-major.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    /// Magnitudes, frame-major like [`coefficients`](Self::coefficients).
    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }

    /// Same geometry, every coefficient multiplied by the matching mask value.
    pub fn masked(&self, mask: &[f64]) -> Result<Spectrogram> {
        if mask.len() != self.bins.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, spectrogram {}",
                mask.len(),
                self.bins.len()
            )));
        }
        let mut out = self.clone();
        for (c, &m) in out.bins.iter_mut().zip(mask) {
            *c *= m;
        }
        Ok(out)
    }

    /// Frequency of bin `bin` in Hz.
    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.window_size as f64
    }
}

/// Reusable forward/inverse transform for one (window, hop) geometry.
#[derive(Clone)]
pub struct StftPlan {
    window_size: usize,
    hop_size: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("window_size", &self.window_size)
            .field("hop_size", &self.hop_size)
            .finish()
    }
}

impl StftPlan {
    /// `window_size` must be a power of two ≥ 4 and `hop_size` a divisor of
    /// it no larger than a quarter window. The quarter-window bound keeps the
    /// squared-window sum bounded away from zero at the clip edges.
    pub fn new(window_size: usize, hop_size: usize) -> Result<Self> {
        if window_size < 4 || !window_size.is_power_of_two() {
            return Err(Error::arg(
                "window_size",
                format!("{window_size} is not a power of two >= 4"),
            ));
        }
        if hop_size == 0 || !window_size.is_multiple_of(hop_size) {
            return Err(Error::arg(
                "hop_size",
                format!("{hop_size} does not divide window size {window_size}"),
            ));
        }
        if hop_size > window_size / 4 {
            return Err(Error::arg(
                "hop_size",
                format!(
                    "{hop_size} exceeds a quarter of window size {window_size}; \
                     overlap-add cannot reconstruct clip edges"
                ),
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            window_size,
            hop_size,
            window: hann_window(window_size),
            forward: planner.plan_fft_forward(window_size),
            inverse: planner.plan_fft_inverse(window_size),
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop_size(&self) -> usize {
        self.hop_size
    }

    /// Frames produced for a clip of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        len / self.hop_size + 1
    }

    pub fn forward(&self, clip: &AudioClip) -> Result<Spectrogram> {
        let len = clip.len();
        let w = self.window_size;
        if len < w {
            return Err(Error::arg(
                "clip length",
                format!("{len} samples is shorter than window size {w}"),
            ));
        }
        let pad = w / 2;
        let x = clip.samples();
        // numpy-style reflection: the edge sample is not repeated
        let padded: Vec<f64> = (0..len + w)
            .map(|i| {
                let j = i as isize - pad as isize;
                let j = if j < 0 {
                    -j
                } else if j >= len as isize {
                    2 * (len as isize - 1) - j
                } else {
                    j
                };
                x[j as usize] as f64
            })
            .collect();

        let num_bins = w / 2 + 1;
        let num_frames = self.frame_count(len);
        let mut bins = Vec::with_capacity(num_bins * num_frames);
        let mut buf = vec![Complex64::new(0.0, 0.0); w];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for t in 0..num_frames {
            let start = t * self.hop_size;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(padded[start + i] * self.window[i], 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            bins.extend_from_slice(&buf[..num_bins]);
        }
        Ok(Spectrogram {
            bins,
            num_bins,
            num_frames,
            window_size: w,
            hop_size: self.hop_size,
            sample_rate: clip.sample_rate(),
        })
    }

    /// Overlap-add inverse, truncated or zero-padded to `length` samples.
    pub fn inverse(&self, spec: &Spectrogram, length: usize) -> Result<AudioClip> {
        let w = self.window_size;
        if spec.window_size != w || spec.hop_size != self.hop_size {
            return Err(Error::DimensionMismatch(format!(
                "spectrogram geometry {}/{} does not match plan {}/{}",
                spec.window_size, spec.hop_size, w, self.hop_size
            )));
        }
        if spec.num_bins != w / 2 + 1 || spec.bins.len() != spec.num_bins * spec.num_frames {
            return Err(Error::DimensionMismatch(format!(
                "{} bins x {} frames inconsistent with window {w} ({} coefficients stored)",
                spec.num_bins,
                spec.num_frames,
                spec.bins.len()
            )));
        }
        if spec.num_frames == 0 || length == 0 {
            return Err(Error::DimensionMismatch(
                "cannot invert an empty spectrogram or to zero length".into(),
            ));
        }
        let span = (spec.num_frames - 1) * self.hop_size + w;
        let mut acc = vec![0.0f64; span];
        let mut norm = vec![0.0f64; span];
        let mut buf = vec![Complex64::new(0.0, 0.0); w];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        let scale = 1.0 / w as f64;
        let half = w / 2;
        for t in 0..spec.num_frames {
            let frame = spec.frame(t);
            buf[..=half].copy_from_slice(frame);
            for b in 1..half {
                buf[w - b] = frame[b].conj();
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = t * self.hop_size;
            for i in 0..w {
                let win = self.window[i];
                acc[start + i] += buf[i].re * scale * win;
                norm[start + i] += win * win;
            }
        }
        let samples = (0..length)
            .map(|j| {
                let p = j + half;
                if p < span && norm[p] > 1e-10 {
                    (acc[p] / norm[p]) as f32
                } else {
                    0.0
                }
            })
            .collect();
        Ok(AudioClip::from_parts_unchecked(samples, spec.sample_rate))
    }
}

/// Hann-windowed STFT of `clip`.
pub fn stft(clip: &AudioClip, window_size: usize, hop_size: usize) -> Result<Spectrogram> {
    StftPlan::new(window_size, hop_size)?.forward(clip)
}

/// Inverse of [`stft`] at `length` samples.
pub fn istft(spec: &Spectrogram, length: usize) -> Result<AudioClip> {
    StftPlan::new(spec.window_size, spec.hop_size)?.inverse(spec, length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioClip::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 44100).unwrap()
    }

    fn sine(freq: f64, rate: u32, len: usize) -> AudioClip {
        AudioClip::new(
            (0..len)
                .map(|i| (2.0 * PI * freq * i as f64 / rate as f64).sin() as f32)
                .collect(),
            rate,
        )
        .unwrap()
    }

    #[test]
    fn preconditions_are_named() {
        let clip = noise(4096, 1);
        let e = stft(&clip, 1000, 250).unwrap_err().to_string();
        assert!(e.contains("window_size"), "{e}");
        let e = stft(&clip, 1024, 300).unwrap_err().to_string();
        assert!(e.contains("hop_size"), "{e}");
        let e = stft(&noise(100, 1), 1024, 256).unwrap_err().to_string();
        assert!(e.contains("clip length"), "{e}");
    }

    #[test]
    fn silence_has_zero_bins() {
        let spec = stft(&AudioClip::silence(4096, 44100).unwrap(), 1024, 256).unwrap();
        assert!(spec.coefficients().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn geometry() {
        let spec = stft(&noise(1024, 2), 1024, 256).unwrap();
        assert_eq!(spec.num_bins(), 513);
        // padded length 2048: (2048 - 1024) / 256 + 1
        assert_eq!(spec.num_frames(), 5);
    }

    #[test]
    fn sine_peak_lands_on_analytic_bin() {
        let clip = sine(1000.0, 44100, 44100);
        let spec = stft(&clip, 2048, 512).unwrap();
        let t = spec.num_frames() / 2;
        let frame = spec.frame(t);
        let peak = (0..frame.len())
            .max_by(|&a, &b| frame[a].norm().total_cmp(&frame[b].norm()))
            .unwrap();
        assert_eq!(peak, (1000.0f64 * 2048.0 / 44100.0).round() as usize);
        assert_eq!(peak, 46);
    }

    #[test]
    fn round_trip_within_tolerance() {
        for (len, seed) in [(1024, 3), (4097, 4), (10_000, 5), (2049, 6)] {
            let clip = noise(len, seed);
            let spec = stft(&clip, 1024, 256).unwrap();
            let back = istft(&spec, len).unwrap();
            assert!(clip.max_abs_diff(&back).unwrap() <= 1e-4, "len {len}");
        }
    }

    #[test]
    fn zero_spectrogram_inverts_to_silence() {
        let mut spec = stft(&noise(2048, 7), 512, 128).unwrap();
        spec.coefficients_mut().iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let out = istft(&spec, 2048).unwrap();
        assert!(out.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn identity_mask_matches_unmasked() {
        let clip = noise(3000, 8);
        let spec = stft(&clip, 512, 128).unwrap();
        let ones = vec![1.0; spec.coefficients().len()];
        let a = istft(&spec, clip.len()).unwrap();
        let b = istft(&spec.masked(&ones).unwrap(), clip.len()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linearity() {
        let a = noise(4000, 9);
        let b = noise(4000, 10);
        let sum = AudioClip::new(
            a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect(),
            44100,
        )
        .unwrap();
        let (sa, sb, ss) = (
            stft(&a, 1024, 256).unwrap(),
            stft(&b, 1024, 256).unwrap(),
            stft(&sum, 1024, 256).unwrap(),
        );
        for ((x, y), z) in sa.coefficients().iter().zip(sb.coefficients()).zip(ss.coefficients()) {
            assert!((x + y - z).norm() <= 1e-5);
        }
    }

    #[test]
    fn inverse_rejects_inconsistent_dimensions() {
        let spec = stft(&noise(2048, 11), 512, 128).unwrap();
        let plan = StftPlan::new(1024, 256).unwrap();
        assert!(matches!(
            plan.inverse(&spec, 2048),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
