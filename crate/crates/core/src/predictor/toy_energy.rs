use std::collections::BTreeMap;

use super::{Predictor, TagScores};
use crate::audio::AudioClip;
use crate::decomposition::{Hpss, HpssParams};
use crate::error::{Error, Result};

/// RMS at which the `quiet` score has fallen to 1/e.
const QUIET_RMS: f64 = 0.01;

/// Deterministic three-tag tagger whose behaviour is known by construction.
///
/// `quiet = exp(-rms / 0.01)`; the remaining `1 - quiet` is split between
/// `harmonic` and `percussive` in proportion to the spectral energy of the
/// two HPSS estimates.
#[derive(Debug, Clone)]
pub struct ToyEnergyTagger {
    hpss: Hpss,
    input_rate: u32,
    input_length: usize,
    tags: Vec<String>,
}

impl ToyEnergyTagger {
    pub fn new(input_rate: u32, input_length: usize, params: HpssParams) -> Result<Self> {
        if input_rate == 0 {
            return Err(Error::arg("input_rate", "must be positive"));
        }
        if input_length < params.window_size {
            return Err(Error::arg(
                "input_length",
                format!(
                    "{input_length} is shorter than the tagger's analysis window ({})",
                    params.window_size
                ),
            ));
        }
        Ok(Self {
            hpss: Hpss::new(params)?,
            input_rate,
            input_length,
            tags: vec!["harmonic".into(), "percussive".into(), "quiet".into()],
        })
    }

    pub fn score(&self, clip: &AudioClip) -> Result<TagScores> {
        let quiet = (-clip.rms() / QUIET_RMS).exp();
        let (eh, ep) = self.hpss.energies(clip)?;
        let rest = 1.0 - quiet;
        let (harmonic, percussive) = if eh + ep > 0.0 {
            (rest * eh / (eh + ep), rest * ep / (eh + ep))
        } else {
            (rest * 0.5, rest * 0.5)
        };
        TagScores::new(BTreeMap::from([
            ("harmonic".to_string(), harmonic),
            ("percussive".to_string(), percussive),
            ("quiet".to_string(), quiet),
        ]))
    }
}

impl Predictor for ToyEnergyTagger {
    fn tags(&self) -> &[String] {
        &self.tags
    }

    fn input_rate(&self) -> u32 {
        self.input_rate
    }

    fn input_length(&self) -> usize {
        self.input_length
    }

    fn score_batch(&self, clips: &[AudioClip]) -> Result<Vec<TagScores>> {
        clips.iter().map(|c| self.score(c)).collect()
    }

    fn describe(&self) -> String {
        format!("toy_energy@{}Hz/{}", self.input_rate, self.input_length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::predict;
    use crate::synth;

    fn tagger() -> ToyEnergyTagger {
        ToyEnergyTagger::new(22050, 22050, HpssParams::default()).unwrap()
    }

    #[test]
    fn silence_is_quiet() {
        let s = tagger().score(&AudioClip::silence(22050, 22050).unwrap()).unwrap();
        assert_eq!(s.get("quiet"), Some(1.0));
        assert_eq!(s.get("harmonic"), Some(0.0));
        assert_eq!(s.get("percussive"), Some(0.0));
    }

    #[test]
    fn sine_reads_harmonic_and_clicks_percussive() {
        let t = tagger();
        let sine = synth::sine(440.0, 0.3 * std::f64::consts::SQRT_2, 22050, 22050);
        assert!((sine.rms() - 0.3).abs() < 1e-3);
        let s = t.score(&sine).unwrap();
        assert!(s.get("harmonic").unwrap() > s.get("percussive").unwrap());
        assert_eq!(s.top_tag(), "harmonic");

        let s = t.score(&synth::clicks(0.25, 0.9, 22050, 22050)).unwrap();
        assert!(s.get("percussive").unwrap() > s.get("harmonic").unwrap());
    }

    #[test]
    fn identical_clips_score_identically() {
        let t = tagger();
        let c = synth::noise(0.2, 22050, 22050, 4);
        let out = predict(&t, &[c.clone(), c.clone(), c]).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[1], out[2]);
    }

    #[test]
    fn short_input_length_is_rejected() {
        assert!(ToyEnergyTagger::new(8000, 100, HpssParams::default()).is_err());
    }
}
