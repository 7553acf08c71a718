//! Local linear surrogates over interpretable components.
//!
//! [`sample_masks`] draws binary perturbations, [`score_perturbations`]
//! renders and scores them with the black box, [`fit_ridge`] fits the
//! surrogate and [`explain`] picks the top positively weighted components.

mod explanation;
mod masks;
mod perturbation;
mod ridge;

pub use explanation::{
    explain, explain_clip, fit_surrogate, top_positive, Explanation, ExplanationDocument,
    ExplanationMetadata, LimeConfig, EXPLANATION_SCHEMA,
};
pub use masks::{enumerate_masks, sample_masks, MaskMatrix};
pub use perturbation::{
    score_perturbations, PerturbationSet, SampleWeighting, ScoringOptions, TargetLink,
};
pub use ridge::{fit_ridge, fit_ridge_with, SurrogateModel};

#[cfg(test)]
mod tests;
