use std::collections::BTreeMap;
use std::sync::Arc;

use super::{sigmoid, Predictor, TagScores};
use crate::audio::AudioClip;
use crate::decomposition::ComponentSet;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Largest distance from {0, 1} a recovered mask coefficient may have.
const ATTRIBUTION_TOLERANCE: f64 = 0.25;

/// A black box that is exactly linear in the interpretable mask.
///
/// The mask behind a clip rendered from `set` is recovered by least-squares
/// projection onto the component waveforms and rounded; the score is then
/// `target = sigmoid(w·z′ + b)` and `other = 1 - target`. Clips that do not
/// project cleanly onto a binary mask are rejected instead of guessed.
#[derive(Debug, Clone)]
pub struct ToyLinearTagger {
    set: Arc<ComponentSet>,
    weights: Vec<f64>,
    bias: f64,
    gram: Cholesky,
    tags: Vec<String>,
}

impl ToyLinearTagger {
    pub fn new(set: Arc<ComponentSet>, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} components",
                weights.len(),
                set.len()
            )));
        }
        if !weights.iter().chain([&bias]).all(|w| w.is_finite()) {
            return Err(Error::arg("weights", "must be finite"));
        }
        let d = set.len();
        let mut g = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v = dot(set.components()[i].audio.samples(), set.components()[j].audio.samples());
                g[i * d + j] = v;
                g[j * d + i] = v;
            }
        }
        let gram = Cholesky::factor(&g, d, 1e-10).map_err(|i| {
            Error::Unattributable(format!(
                "component {i} is silent or linearly dependent on earlier components"
            ))
        })?;
        Ok(Self {
            set,
            weights,
            bias,
            gram,
            tags: vec!["other".into(), "target".into()],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// The binary mask `clip` was rendered from.
    pub fn recover_mask(&self, clip: &AudioClip) -> Result<Vec<bool>> {
        if clip.len() != self.set.clip_len() {
            return Err(Error::Unattributable(format!(
                "clip has {} samples, component set {}",
                clip.len(),
                self.set.clip_len()
            )));
        }
        let rhs: Vec<f64> = self
            .set
            .components()
            .iter()
            .map(|c| dot(c.audio.samples(), clip.samples()))
            .collect();
        let coef = self.gram.solve(&rhs);
        coef.iter()
            .enumerate()
            .map(|(i, &a)| {
                let bit = a >= 0.5;
                let err = if bit { (a - 1.0).abs() } else { a.abs() };
                if err > ATTRIBUTION_TOLERANCE {
                    Err(Error::Unattributable(format!(
                        "component {i} matched with weight {a:.3}, not close to 0 or 1"
                    )))
                } else {
                    Ok(bit)
                }
            })
            .collect()
    }

    /// Pre-sigmoid score `w·z′ + b` for a mask.
    pub fn linear_score(&self, mask: &[bool]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(w, _)| w)
                .sum::<f64>()
    }

    pub fn score(&self, clip: &AudioClip) -> Result<TagScores> {
        let target = sigmoid(self.linear_score(&self.recover_mask(clip)?));
        TagScores::new(BTreeMap::from([
            ("other".to_string(), 1.0 - target),
            ("target".to_string(), target),
        ]))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

impl Predictor for ToyLinearTagger {
    fn tags(&self) -> &[String] {
        &self.tags
    }

    fn input_rate(&self) -> u32 {
        self.set.sample_rate()
    }

    fn input_length(&self) -> usize {
        self.set.clip_len()
    }

    fn score_batch(&self, clips: &[AudioClip]) -> Result<Vec<TagScores>> {
        clips.iter().map(|c| self.score(c)).collect()
    }

    fn describe(&self) -> String {
        format!("toy_linear(d'={})", self.weights.len())
    }
}
