//! Listenable explanations for black-box audio classifiers.
//!
//! An input clip is split into interpretable components (separated sources
//! crossed with time segments), random on/off masks over those components
//! are rendered back to audio and scored by the black box, and a ridge
//! regression over the masks yields one weight per component. The top
//! positively weighted components, mixed together, are the explanation,
//! and they can be played back.
//!
//! ```no_run
//! use lime_audio::prelude::*;
//!
//! let clip = load_wav("song.wav", None)?;
//! let set = decompose(&clip, &SeparatorSpec::default(), 4)?;
//! let predictor = PredictorSpec::ToyEnergy {
//!     input_rate: clip.sample_rate(),
//!     input_length: clip.len(),
//!     hpss: HpssParams::default(),
//! }
//! .build(None)?;
//! let explanation = explain_clip(&set, predictor.as_ref(), None, &LimeConfig::default(), 3)?;
//! save_wav(&explanation.audio, "explanation.wav")?;
//! # Ok::<(), lime_audio::Error>(())
//! ```

pub mod audio;
pub mod decomposition;
pub mod error;
pub mod evaluation;
pub mod lime;
pub mod parallel;
pub mod predictor;
pub mod slime;
pub mod svg;
pub mod synth;

mod linalg;

pub use audio::AudioClip;
pub use error::{Error, Result};

pub mod prelude {
    pub use crate::audio::{istft, load_wav, resample, save_wav, stft, AudioClip, Spectrogram};
    pub use crate::decomposition::{
        build_component_set, decompose, separate, ComponentSet, HpssParams,
        SeparatorSpec,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evaluation::{
        export_report, run_fidelity, FidelityClip, FidelityConfig, FidelityReport, Method,
    };
    pub use crate::lime::{
        explain, explain_clip, fit_ridge, sample_masks, score_perturbations, Explanation,
        LimeConfig, SurrogateModel,
    };
    pub use crate::parallel::Execution;
    pub use crate::predictor::{predict, Predictor, PredictorSpec, TagScores};
    pub use crate::slime::{build_grid_component_set, GridSpec};
}
