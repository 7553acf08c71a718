use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MaskMatrix;
use crate::decomposition::ComponentSet;
use crate::error::{Error, Result};
use crate::parallel::{self, Execution};
use crate::predictor::{predict, Predictor};

/// How a tag score becomes the regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetLink {
    /// The score itself, in `[0, 1]`.
    #[default]
    Identity,
    /// `ln(p / (1 - p))`, undoing a logistic output layer.
    Logit,
}

impl TargetLink {
    fn apply(self, p: f64) -> Option<f64> {
        match self {
            TargetLink::Identity => Some(p),
            TargetLink::Logit => {
                let v = (p / (1.0 - p)).ln();
                v.is_finite().then_some(v)
            }
        }
    }
}

/// Per-sample regression weights.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleWeighting {
    #[default]
    Uniform,
    /// `exp(-D² / width²)` with `D` the cosine distance between the mask and
    /// the all-ones mask.
    CosineKernel { width: f64 },
}

impl SampleWeighting {
    pub fn weight(&self, mask: &[bool]) -> f64 {
        match *self {
            SampleWeighting::Uniform => 1.0,
            SampleWeighting::CosineKernel { width } => {
                let on = mask.iter().filter(|&&b| b).count() as f64;
                let d = 1.0 - (on / mask.len() as f64).sqrt();
                (-(d * d) / (width * width)).exp()
            }
        }
    }
}

/// Scoring knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringOptions {
    /// Clips per predictor call.
    pub batch_size: usize,
    pub execution: Execution,
    /// Score each distinct mask once and reuse it for duplicates. Exact for
    /// deterministic predictors.
    pub dedupe: bool,
    pub link: TargetLink,
    pub weighting: SampleWeighting,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            batch_size: 64,
            execution: Execution::default(),
            dedupe: true,
            link: TargetLink::Identity,
            weighting: SampleWeighting::Uniform,
        }
    }
}

/// Masks with the black box's response to each.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSet {
    pub masks: MaskMatrix,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    pub rng_seed: u64,
    pub tag: String,
    pub link: TargetLink,
}

impl PerturbationSet {
    /// Checks the shape, the all-ones anchor row, finite targets (within
    /// `[0, 1]` for the identity link) and nonnegative weights.
    pub fn new(
        masks: MaskMatrix,
        targets: Vec<f64>,
        weights: Vec<f64>,
        rng_seed: u64,
        tag: impl Into<String>,
        link: TargetLink,
    ) -> Result<Self> {
        let n = masks.rows();
        if targets.len() != n || weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} masks, {} targets, {} weights",
                targets.len(),
                weights.len()
            )));
        }
        if masks.row(0).iter().any(|b| !b) {
            return Err(Error::arg("masks", "row 0 must be the all-ones mask"));
        }
        for (i, &y) in targets.iter().enumerate() {
            let ok = y.is_finite() && (link == TargetLink::Logit || (0.0..=1.0).contains(&y));
            if !ok {
                return Err(Error::arg("targets", format!("target {i} is {y}")));
            }
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::arg("weights", format!("weight {i} is {}", weights[i])));
        }
        Ok(Self {
            masks,
            targets,
            weights,
            rng_seed,
            tag: tag.into(),
            link,
        })
    }

    pub fn len(&self) -> usize {
        self.masks.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.rows() == 0
    }
}

/// Renders every mask through `set`, scores it, and keeps `tag`'s score.
pub fn score_perturbations(
    set: &ComponentSet,
    masks: MaskMatrix,
    predictor: &dyn Predictor,
    tag: &str,
    rng_seed: u64,
    options: &ScoringOptions,
) -> Result<PerturbationSet> {
    if !predictor.tags().iter().any(|t| t == tag) {
        return Err(Error::arg(
            "tag",
            format!("'{tag}' is not one of the predictor's tags {:?}", predictor.tags()),
        ));
    }
    if masks.cols() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "masks have {} columns, component set has {} components",
            masks.cols(),
            set.len()
        )));
    }
    if options.batch_size == 0 {
        return Err(Error::arg("batch_size", "must be at least 1"));
    }

    // row index of the first occurrence of each mask to score, and for every
    // row the slot holding its result
    let (unique, slot_of_row): (Vec<usize>, Vec<usize>) = if options.dedupe {
        let mut seen: HashMap<&[bool], usize> = HashMap::new();
        let mut unique = Vec::new();
        let slots = masks
            .iter_rows()
            .enumerate()
            .map(|(i, row)| {
                *seen.entry(row).or_insert_with(|| {
                    unique.push(i);
                    unique.len() - 1
                })
            })
            .collect();
        (unique, slots)
    } else {
        ((0..masks.rows()).collect(), (0..masks.rows()).collect())
    };

    let batches: Vec<&[usize]> = unique.chunks(options.batch_size).collect();
    let scored = parallel::try_map(options.execution, &batches, |_, rows| {
        let clips = rows
            .iter()
            .map(|&r| set.compose(masks.row(r)))
            .collect::<Result<Vec<_>>>()?;
        let scores = predict(predictor, &clips).map_err(|e| Error::Perturbation {
            mask_index: rows[0],
            source: Box::new(e),
        })?;
        rows.iter()
            .zip(scores)
            .map(|(&r, s)| {
                let p = s.get(tag).ok_or_else(|| Error::Perturbation {
                    mask_index: r,
                    source: Box::new(Error::Predictor(format!("reply lacks tag '{tag}'"))),
                })?;
                options.link.apply(p).ok_or_else(|| Error::Perturbation {
                    mask_index: r,
                    source: Box::new(Error::Predictor(format!(
                        "score {p} has no finite {:?} transform",
                        options.link
                    ))),
                })
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let per_unique: Vec<f64> = scored.into_iter().flatten().collect();
    let targets = slot_of_row.iter().map(|&s| per_unique[s]).collect();
    let weights = masks.iter_rows().map(|m| options.weighting.weight(m)).collect();
    PerturbationSet::new(masks, targets, weights, rng_seed, tag, options.link)
}
