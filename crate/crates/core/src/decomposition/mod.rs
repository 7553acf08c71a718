//! Interpretable components: separated sources crossed with temporal
//! segments, and the map from binary masks back to audio.
//!
//! With `C` sources and `τ` segments a [`ComponentSet`] holds `d′ = C·τ`
//! components in source-major, segment-minor order. Component `c·τ + s` is
//! source `c` gated to segment `s` with a hard cut, so the segments of one
//! source partition it exactly and [`ComponentSet::compose`] stays linear in
//! the mask.

mod hpss;
mod stems;

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use hpss::{Hpss, HpssParams};
pub use stems::{load_stems, StemLoad};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// One separated source estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub label: String,
    pub audio: AudioClip,
}

/// How a component set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    /// Source separation crossed with temporal segmentation.
    SourceSegments,
    /// Rectangular time-frequency regions of the STFT.
    SpectrogramGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub source_label: String,
    pub segment_index: usize,
    /// Samples where the component may be nonzero.
    pub support: Range<usize>,
    /// Full-length audio.
    pub audio: AudioClip,
}

impl Component {
    /// File-name friendly identifier, `<label>_seg<t>`.
    pub fn name(&self) -> String {
        format!("{}_seg{}", self.source_label, self.segment_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    components: Vec<Component>,
    num_sources: usize,
    num_segments: usize,
    original: AudioClip,
    kind: DecompositionKind,
}

impl ComponentSet {
    /// Assembles a set from components already in source-major order.
    pub(crate) fn from_components(
        components: Vec<Component>,
        num_sources: usize,
        num_segments: usize,
        original: AudioClip,
        kind: DecompositionKind,
    ) -> Self {
        debug_assert_eq!(components.len(), num_sources * num_segments);
        Self {
            components,
            num_sources,
            num_segments,
            original,
            kind,
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// `d′`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_segments(&self) -> usize {
        self.num_segments
    }

    pub fn original(&self) -> &AudioClip {
        &self.original
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    pub fn clip_len(&self) -> usize {
        self.original.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.original.sample_rate()
    }

    /// Distinct source labels in order.
    pub fn source_labels(&self) -> Vec<&str> {
        self.components
            .iter()
            .step_by(self.num_segments)
            .map(|c| c.source_label.as_str())
            .collect()
    }

    /// Sum of the components whose mask bit is set, added in component order.
    /// No normalization or clipping.
    pub fn compose(&self, mask: &[bool]) -> Result<AudioClip> {
        if mask.len() != self.components.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} bits, component set has {}",
                mask.len(),
                self.components.len()
            )));
        }
        let mut out = vec![0.0f32; self.clip_len()];
        for (c, _) in self.components.iter().zip(mask).filter(|(_, &on)| on) {
            let range = c.support.clone();
            for (o, &s) in out[range.clone()].iter_mut().zip(&c.audio.samples()[range]) {
                *o += s;
            }
        }
        Ok(AudioClip::from_parts_unchecked(out, self.sample_rate()))
    }

    /// `compose` of the all-ones mask: the decomposition's reconstruction.
    pub fn reconstruction(&self) -> AudioClip {
        self.compose(&vec![true; self.len()])
            .expect("all-ones mask has the set's length")
    }

    /// Mask with exactly the listed components switched on.
    pub fn mask_of(&self, ids: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for &i in ids {
            *mask.get_mut(i).ok_or_else(|| {
                Error::arg("component id", format!("{i} out of range for d' = {}", self.len()))
            })? = true;
        }
        Ok(mask)
    }
}

/// Which separator produces the sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparatorSpec {
    HpssBuiltin(HpssParams),
    StemsDirectory { directory: PathBuf, strict: bool },
}

impl Default for SeparatorSpec {
    fn default() -> Self {
        SeparatorSpec::HpssBuiltin(HpssParams::default())
    }
}

/// Built-in two-source separation, labels `harmonic` and `percussive`.
pub fn separate_hpss(clip: &AudioClip, params: &HpssParams) -> Result<Vec<Source>> {
    let (harmonic, percussive) = Hpss::new(*params)?.separate(clip)?;
    Ok(vec![
        Source {
            label: "harmonic".into(),
            audio: harmonic,
        },
        Source {
            label: "percussive".into(),
            audio: percussive,
        },
    ])
}

/// Runs the configured separator on `clip`.
pub fn separate(clip: &AudioClip, spec: &SeparatorSpec) -> Result<Vec<Source>> {
    match spec {
        SeparatorSpec::HpssBuiltin(params) => separate_hpss(clip, params),
        SeparatorSpec::StemsDirectory { directory, strict } => {
            Ok(load_stems(directory, clip.len(), clip.sample_rate(), *strict)?.sources)
        }
    }
}

/// `[start, end)` of each of `count` segments over `len` samples: equal
/// lengths of `len / count`, the remainder going to the last segment.
pub fn segment_bounds(len: usize, count: usize) -> Vec<Range<usize>> {
    let step = len / count;
    (0..count)
        .map(|i| i * step..if i + 1 == count { len } else { (i + 1) * step })
        .collect()
}

/// Crosses `sources` with `num_segments` temporal segments.
pub fn build_component_set(
    clip: &AudioClip,
    sources: Vec<Source>,
    num_segments: usize,
) -> Result<ComponentSet> {
    if num_segments == 0 {
        return Err(Error::arg("segments", "must be at least 1"));
    }
    if num_segments > clip.len() {
        return Err(Error::arg(
            "segments",
            format!("{num_segments} exceeds clip length of {} samples", clip.len()),
        ));
    }
    if sources.is_empty() {
        return Err(Error::Separator("no sources to segment".into()));
    }
    for s in &sources {
        if s.audio.len() != clip.len() || s.audio.sample_rate() != clip.sample_rate() {
            return Err(Error::DimensionMismatch(format!(
                "source '{}' is {} samples at {} Hz, clip is {} samples at {} Hz",
                s.label,
                s.audio.len(),
                s.audio.sample_rate(),
                clip.len(),
                clip.sample_rate()
            )));
        }
    }
    let bounds = segment_bounds(clip.len(), num_segments);
    let num_sources = sources.len();
    let mut components = Vec::with_capacity(num_sources * num_segments);
    for source in &sources {
        for (t, range) in bounds.iter().enumerate() {
            components.push(Component {
                source_label: source.label.clone(),
                segment_index: t,
                support: range.clone(),
                audio: source.audio.gated(range.clone()),
            });
        }
    }
    Ok(ComponentSet::from_components(
        components,
        num_sources,
        num_segments,
        clip.clone(),
        DecompositionKind::SourceSegments,
    ))
}

/// Separation followed by segmentation.
pub fn decompose(clip: &AudioClip, spec: &SeparatorSpec, num_segments: usize) -> Result<ComponentSet> {
    build_component_set(clip, separate(clip, spec)?, num_segments)
}
