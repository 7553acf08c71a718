#![allow(dead_code)]

use lime_audio::decomposition::{decompose, ComponentSet, SeparatorSpec};
use lime_audio::predictor::PredictorSpec;
use lime_audio::synth::SineClickMix;
use lime_audio::AudioClip;

pub const RATE: u32 = 16000;

/// Random sine+click mixture, one second at 16 kHz.
pub fn mixture(seed: u64) -> AudioClip {
    SineClickMix::random(seed, RATE, RATE as usize).render()
}

/// Voice-like tone held across the whole clip over a click bed.
pub fn sustained_voice(seed: u64) -> AudioClip {
    let mut mix = SineClickMix::random(seed, RATE, RATE as usize);
    mix.tone_onset = 0.0;
    mix.tone_offset = 1.0;
    mix.render()
}

/// HPSS sources crossed with `segments` segments.
pub fn hpss_set(clip: &AudioClip, segments: usize) -> ComponentSet {
    decompose(clip, &SeparatorSpec::default(), segments).unwrap()
}

pub fn toy_energy(len: usize) -> PredictorSpec {
    PredictorSpec::ToyEnergy {
        input_rate: RATE,
        input_length: len,
        hpss: Default::default(),
    }
}

pub fn toy_linear(len: usize, weights: &[f64], bias: f64) -> PredictorSpec {
    PredictorSpec::ToyLinear {
        input_rate: RATE,
        input_length: len,
        weights: weights.to_vec(),
        bias,
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
