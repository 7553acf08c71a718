//! Baseline representation: rectangular time-frequency regions of the STFT.
//!
//! The spectrogram is cut into `F` contiguous frequency bands and `T`
//! contiguous time bands. Component `(f, t)` is the inverse STFT of the
//! complex spectrogram with everything outside region `(f, t)` zeroed, so the
//! regions partition the STFT and the result plugs into the same
//! [`ComponentSet`] contract as source-based components.

use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, StftPlan, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::decomposition::{segment_bounds, Component, ComponentSet, DecompositionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub freq_bands: usize,
    pub time_bands: usize,
    pub window_size: usize,
    pub hop_size: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            freq_bands: 4,
            time_bands: 4,
            window_size: DEFAULT_WINDOW,
            hop_size: DEFAULT_HOP,
        }
    }
}

impl GridSpec {
    pub fn new(freq_bands: usize, time_bands: usize) -> Self {
        Self {
            freq_bands,
            time_bands,
            ..Default::default()
        }
    }
}

pub fn build_grid_component_set(clip: &AudioClip, grid: &GridSpec) -> Result<ComponentSet> {
    if grid.freq_bands == 0 || grid.time_bands == 0 {
        return Err(Error::arg(
            "grid",
            format!("{}x{} must have positive sides", grid.freq_bands, grid.time_bands),
        ));
    }
    let plan = StftPlan::new(grid.window_size, grid.hop_size)?;
    let spec = plan.forward(clip)?;
    let (bins, frames) = (spec.num_bins(), spec.num_frames());
    if grid.freq_bands > bins {
        return Err(Error::arg(
            "grid",
            format!("{} frequency bands exceed {bins} bins", grid.freq_bands),
        ));
    }
    if grid.time_bands > frames {
        return Err(Error::arg(
            "grid",
            format!("{} time bands exceed {frames} frames", grid.time_bands),
        ));
    }

    let freq = segment_bounds(bins, grid.freq_bands);
    let time = segment_bounds(frames, grid.time_bands);
    let mut components = Vec::with_capacity(freq.len() * time.len());
    for (f, band) in freq.iter().enumerate() {
        for (t, span) in time.iter().enumerate() {
            let mut region = spec.clone();
            for frame in 0..frames {
                let row = region.frame_mut(frame);
                for (b, c) in row.iter_mut().enumerate() {
                    if !(span.contains(&frame) && band.contains(&b)) {
                        *c = Default::default();
                    }
                }
            }
            components.push(Component {
                source_label: format!("band-{f}"),
                segment_index: t,
                support: 0..clip.len(),
                audio: plan.inverse(&region, clip.len())?,
            });
        }
    }
    Ok(ComponentSet::from_components(
        components,
        grid.freq_bands,
        grid.time_bands,
        clip.clone(),
        DecompositionKind::SpectrogramGrid,
    ))
}
