use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit_ridge_with, sample_masks, score_perturbations, ScoringOptions, SurrogateModel};
use crate::audio::{save_wav, AudioClip};
use crate::decomposition::{ComponentSet, DecompositionKind};
use crate::error::{Error, Result};
use crate::predictor::{predict, Predictor};

pub const EXPLANATION_SCHEMA: &str = "audiolime_explanation_v1";

/// End-to-end settings for one explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub lambda: f64,
    pub seed: u64,
    pub scoring: ScoringOptions,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            num_samples: 1 << 14,
            lambda: 1.0,
            seed: 0,
            scoring: ScoringOptions::default(),
        }
    }
}

/// Provenance carried alongside an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMetadata {
    pub decomposition: DecompositionKind,
    pub num_sources: usize,
    pub num_segments: usize,
    pub seed: u64,
    pub num_samples: usize,
    pub lambda: f64,
    pub explained_tag: String,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when no coefficient is positive and the selection is empty.
    pub no_positive_coefficients: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// Selected components, by descending coefficient.
    pub component_ids: Vec<usize>,
    pub component_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub k: usize,
    /// Mixture of the selected components.
    pub audio: AudioClip,
    pub metadata: ExplanationMetadata,
}

/// Up to `k` indices with the largest strictly positive values; ties go to
/// the smaller index.
pub fn top_positive(coefficients: &[f64], k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..coefficients.len())
        .filter(|&i| coefficients[i] > 0.0)
        .collect();
    ids.sort_by(|&a, &b| coefficients[b].total_cmp(&coefficients[a]).then(a.cmp(&b)));
    ids.truncate(k);
    ids
}

pub fn explain(set: &ComponentSet, model: &SurrogateModel, k: usize) -> Result<Explanation> {
    if k == 0 {
        return Err(Error::arg("k", "must be at least 1"));
    }
    if model.coefficients.len() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} coefficients, component set {} components",
            model.coefficients.len(),
            set.len()
        )));
    }
    let ids = top_positive(&model.coefficients, k);
    let audio = set.compose(&set.mask_of(&ids)?)?;
    Ok(Explanation {
        component_names: ids.iter().map(|&i| set.components()[i].name()).collect(),
        metadata: ExplanationMetadata {
            decomposition: set.kind(),
            num_sources: set.num_sources(),
            num_segments: set.num_segments(),
            seed: model.rng_seed,
            num_samples: model.num_samples,
            lambda: model.lambda,
            explained_tag: model.explained_tag.clone(),
            intercept: model.intercept,
            r_squared: model.r_squared,
            no_positive_coefficients: ids.is_empty(),
        },
        component_ids: ids,
        coefficients: model.coefficients.clone(),
        k,
        audio,
    })
}

/// Samples, scores and fits a surrogate for `tag` (default: the top tag of
/// the original clip).
pub fn fit_surrogate(
    set: &ComponentSet,
    predictor: &dyn Predictor,
    tag: Option<&str>,
    config: &LimeConfig,
) -> Result<SurrogateModel> {
    let tag = match tag {
        Some(t) => t.to_string(),
        None => predict(predictor, std::slice::from_ref(set.original()))?[0]
            .top_tag()
            .to_string(),
    };
    let masks = sample_masks(set.len(), config.num_samples, config.seed)?;
    let perturbations =
        score_perturbations(set, masks, predictor, &tag, config.seed, &config.scoring)?;
    fit_ridge_with(&perturbations, config.lambda, config.scoring.execution)
}

/// The whole pipeline: surrogate fit followed by top-`k` extraction.
pub fn explain_clip(
    set: &ComponentSet,
    predictor: &dyn Predictor,
    tag: Option<&str>,
    config: &LimeConfig,
    k: usize,
) -> Result<Explanation> {
    explain(set, &fit_surrogate(set, predictor, tag, config)?, k)
}

/// JSON form of an [`Explanation`]; the audio lives in a sibling WAV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub schema: String,
    pub component_ids: Vec<usize>,
    pub component_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub all_component_names: Vec<String>,
    pub k: usize,
    pub audio: String,
    pub metadata: ExplanationMetadata,
}

impl Explanation {
    pub fn to_document(&self, set: &ComponentSet, audio_file: &str) -> ExplanationDocument {
        ExplanationDocument {
            schema: EXPLANATION_SCHEMA.to_string(),
            component_ids: self.component_ids.clone(),
            component_names: self.component_names.clone(),
            coefficients: self.coefficients.clone(),
            all_component_names: set.components().iter().map(|c| c.name()).collect(),
            k: self.k,
            audio: audio_file.to_string(),
            metadata: self.metadata.clone(),
        }
    }

    /// Writes `<stem>.json` and `<stem>.wav` into `dir`.
    pub fn write(&self, set: &ComponentSet, dir: &Path, stem: &str) -> Result<()> {
        let wav_name = format!("{stem}.wav");
        save_wav(&self.audio, dir.join(&wav_name))?;
        let json = serde_json::to_string_pretty(&self.to_document(set, &wav_name))?;
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
