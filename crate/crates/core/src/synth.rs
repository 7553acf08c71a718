//! Deterministic synthetic signals: tones, click trains, noise, and the
//! sine-over-clicks mixtures used by the desk-scale experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioClip;

pub fn sine(freq: f64, amplitude: f64, sample_rate: u32, len: usize) -> AudioClip {
    let samples = (0..len)
        .map(|i| (amplitude * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin()) as f32)
        .collect();
    AudioClip::from_parts_unchecked(samples, sample_rate)
}

/// One-sample impulses every `period_secs`, the first half a period in.
pub fn clicks(period_secs: f64, amplitude: f64, sample_rate: u32, len: usize) -> AudioClip {
    let period = (period_secs * sample_rate as f64).round().max(1.0) as usize;
    let mut samples = vec![0.0f32; len];
    let mut i = period / 2;
    while i < len {
        samples[i] = amplitude as f32;
        i += period;
    }
    AudioClip::from_parts_unchecked(samples, sample_rate)
}

/// Uniform white noise in `[-amplitude, amplitude)`.
pub fn noise(amplitude: f64, sample_rate: u32, len: usize, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len)
        .map(|_| (amplitude * rng.random_range(-1.0..1.0)) as f32)
        .collect();
    AudioClip::from_parts_unchecked(samples, sample_rate)
}

/// Sample-wise sum; the result has the longer clip's length.
pub fn add(a: &AudioClip, b: &AudioClip) -> AudioClip {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut samples = long.samples().to_vec();
    for (s, &t) in samples.iter_mut().zip(short.samples()) {
        *s += t;
    }
    AudioClip::from_parts_unchecked(samples, a.sample_rate())
}

/// A harmonic voice (fundamental plus two overtones, slow vibrato) sounding
/// over `[onset, offset)` seconds, mixed with a click bed.
#[derive(Debug, Clone, PartialEq)]
pub struct SineClickMix {
    pub sample_rate: u32,
    pub len: usize,
    pub tone_freq: f64,
    pub tone_amplitude: f64,
    pub tone_onset: f64,
    pub tone_offset: f64,
    pub click_period: f64,
    pub click_amplitude: f64,
}

impl SineClickMix {
    /// Random mixture drawn from `seed`: tone anywhere from 150 to 900 Hz,
    /// covering a random stretch of the clip, over clicks of random density.
    pub fn random(seed: u64, sample_rate: u32, len: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dur = len as f64 / sample_rate as f64;
        let span = rng.random_range(0.3..0.75) * dur;
        let onset = rng.random_range(0.0..(dur - span));
        Self {
            sample_rate,
            len,
            tone_freq: rng.random_range(150.0..900.0),
            tone_amplitude: rng.random_range(0.1..0.5),
            tone_onset: onset,
            tone_offset: onset + span,
            click_period: rng.random_range(0.08..0.25),
            click_amplitude: rng.random_range(0.3..1.0),
        }
    }

    pub fn render(&self) -> AudioClip {
        let rate = self.sample_rate as f64;
        let on = (self.tone_onset * rate) as usize;
        let off = ((self.tone_offset * rate) as usize).min(self.len);
        // 10 ms fades keep the tone edges from reading as transients
        let fade = (0.01 * rate) as usize;
        let mut samples = clicks(self.click_period, self.click_amplitude, self.sample_rate, self.len)
            .into_samples();
        for (i, s) in samples.iter_mut().enumerate().take(off).skip(on) {
            let t = i as f64 / rate;
            let env = ((i - on).min(off - 1 - i) as f64 / fade as f64).min(1.0);
            let phase = 2.0 * PI * self.tone_freq * t + 0.3 * (2.0 * PI * 5.0 * t).sin();
            let voice = phase.sin() + 0.5 * (2.0 * phase).sin() + 0.25 * (3.0 * phase).sin();
            *s += (self.tone_amplitude * env * voice / 1.75) as f32;
        }
        AudioClip::from_parts_unchecked(samples, self.sample_rate)
    }
}
