//! The black box being explained: anything that maps audio to tag scores.
//!
//! Predictors consume fixed-size inputs. [`predict`] resamples each clip to
//! the predictor's rate and centers it in (or crops it to) the predictor's
//! input length before scoring.

mod protocol;
mod subprocess;
mod toy_energy;
mod toy_linear;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use protocol::{Handshake, Reply, Request, PROTOCOL_VERSION};
pub use subprocess::SubprocessPredictor;
pub use toy_energy::ToyEnergyTagger;
pub use toy_linear::ToyLinearTagger;

use crate::audio::{resample, AudioClip};
use crate::decomposition::{ComponentSet, HpssParams};
use crate::error::{Error, Result};

/// Scores per tag, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct TagScores {
    scores: BTreeMap<String, f64>,
}

impl TagScores {
    pub fn new(scores: BTreeMap<String, f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Predictor("no tags in score map".into()));
        }
        for (tag, &s) in &scores {
            if !(s.is_finite() && (0.0..=1.0).contains(&s)) {
                return Err(Error::Predictor(format!("score for '{tag}' is {s}, outside [0, 1]")));
            }
        }
        Ok(Self { scores })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(t, s)| (t.to_string(), s)).collect())
    }

    pub fn get(&self, tag: &str) -> Option<f64> {
        self.scores.get(tag).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(t, &s)| (t.as_str(), s))
    }

    /// Highest-scoring tag; ties go to the lexicographically smallest tag.
    pub fn top_tag(&self) -> &str {
        let mut best: Option<(&str, f64)> = None;
        for (t, s) in self.iter() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((t, s));
            }
        }
        best.expect("TagScores is never empty").0
    }
}

impl TryFrom<BTreeMap<String, f64>> for TagScores {
    type Error = Error;

    fn try_from(scores: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(scores)
    }
}

impl From<TagScores> for BTreeMap<String, f64> {
    fn from(s: TagScores) -> Self {
        s.scores
    }
}

/// A black-box tagger. Implementations must be safe to call from several
/// threads at once.
pub trait Predictor: Send + Sync {
    fn tags(&self) -> &[String];

    /// Sample rate the predictor expects.
    fn input_rate(&self) -> u32;

    /// Samples per input at [`input_rate`](Self::input_rate).
    fn input_length(&self) -> usize;

    /// Scores clips already at the input rate and length.
    fn score_batch(&self, clips: &[AudioClip]) -> Result<Vec<TagScores>>;

    /// Short human-readable identity recorded in output metadata.
    fn describe(&self) -> String;
}

/// Resamples to `rate` and centers the clip in `length` samples, cropping
/// symmetrically when it is longer.
pub fn conform(clip: &AudioClip, rate: u32, length: usize) -> Result<AudioClip> {
    let clip = if clip.sample_rate() == rate {
        std::borrow::Cow::Borrowed(clip)
    } else {
        std::borrow::Cow::Owned(resample(clip, rate)?)
    };
    if clip.len() == length {
        return Ok(clip.into_owned());
    }
    if length == 0 {
        return Err(Error::arg("input_length", "must be positive"));
    }
    let x = clip.samples();
    let samples = if x.len() > length {
        let start = (x.len() - length) / 2;
        x[start..start + length].to_vec()
    } else {
        let offset = (length - x.len()) / 2;
        let mut out = vec![0.0; length];
        out[offset..offset + x.len()].copy_from_slice(x);
        out
    };
    Ok(AudioClip::from_parts_unchecked(samples, rate))
}

/// Scores a batch, output in input order.
pub fn predict(predictor: &dyn Predictor, clips: &[AudioClip]) -> Result<Vec<TagScores>> {
    if clips.is_empty() {
        return Err(Error::arg("batch", "must contain at least one clip"));
    }
    let conformed = clips
        .iter()
        .map(|c| conform(c, predictor.input_rate(), predictor.input_length()))
        .collect::<Result<Vec<_>>>()?;
    let scores = predictor.score_batch(&conformed)?;
    if scores.len() != clips.len() {
        return Err(Error::Predictor(format!(
            "{} returned {} results for {} clips",
            predictor.describe(),
            scores.len(),
            clips.len()
        )));
    }
    Ok(scores)
}

/// Serializable predictor configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    ToyEnergy {
        input_rate: u32,
        input_length: usize,
        hpss: HpssParams,
    },
    ToyLinear {
        input_rate: u32,
        input_length: usize,
        weights: Vec<f64>,
        bias: f64,
    },
    /// External model speaking the line-delimited JSON protocol; input
    /// geometry comes from the child's handshake.
    Subprocess {
        command: String,
        max_in_flight: usize,
        timeout_ms: u64,
    },
}

impl PredictorSpec {
    /// Instantiates the predictor. `toy_linear` is defined relative to a
    /// component set, which must be supplied.
    pub fn build(&self, set: Option<&ComponentSet>) -> Result<Arc<dyn Predictor>> {
        Ok(match self {
            PredictorSpec::ToyEnergy {
                input_rate,
                input_length,
                hpss,
            } => Arc::new(ToyEnergyTagger::new(*input_rate, *input_length, *hpss)?),
            PredictorSpec::ToyLinear {
                weights, bias, ..
            } => {
                let set = set.ok_or_else(|| {
                    Error::Predictor("toy_linear needs the component set it is defined on".into())
                })?;
                Arc::new(ToyLinearTagger::new(Arc::new(set.clone()), weights.clone(), *bias)?)
            }
            PredictorSpec::Subprocess {
                command,
                max_in_flight,
                timeout_ms,
            } => Arc::new(SubprocessPredictor::spawn(
                command,
                *max_in_flight,
                std::time::Duration::from_millis(*timeout_ms),
            )?),
        })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
