//! Ingestion of externally separated stems: `<dir>/<label>.wav`, one file
//! per source.

use std::path::{Path, PathBuf};

use crate::audio::{load_wav, resample, AudioClip};
use crate::decomposition::Source;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StemLoad {
    /// Sorted by label.
    pub sources: Vec<Source>,
    pub warnings: Vec<String>,
}

/// Loads every `*.wav` in `directory`, conforming each stem to
/// `expected_rate` and `expected_length`.
///
/// Rate mismatches are resampled unless `strict`, in which case they are an
/// error. Length mismatches are zero-padded or truncated at the end; a
/// mismatch above 1% of `expected_length` is reported as a warning.
pub fn load_stems(
    directory: &Path,
    expected_length: usize,
    expected_rate: u32,
    strict: bool,
) -> Result<StemLoad> {
    let entries = std::fs::read_dir(directory).map_err(|e| Error::io(directory, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(directory, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            paths.push(path);
        }
    }
    if paths.len() < 2 {
        return Err(Error::Separator(format!(
            "{}: need at least 2 sources, found {}",
            directory.display(),
            paths.len()
        )));
    }

    let mut labelled: Vec<(String, PathBuf)> = paths
        .into_iter()
        .map(|p| {
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (label, p)
        })
        .collect();
    labelled.sort();

    let mut warnings = Vec::new();
    let mut sources = Vec::with_capacity(labelled.len());
    for (label, path) in labelled {
        let mut clip = load_wav(&path, None)?;
        if clip.sample_rate() != expected_rate {
            if strict {
                return Err(Error::Separator(format!(
                    "stem '{label}' is at {} Hz, expected {expected_rate} Hz (strict mode forbids resampling)",
                    clip.sample_rate()
                )));
            }
            let msg = format!(
                "stem '{label}' resampled from {} Hz to {expected_rate} Hz",
                clip.sample_rate()
            );
            log::warn!("{msg}");
            warnings.push(msg);
            clip = resample(&clip, expected_rate)?;
        }
        if clip.len() != expected_length {
            let diff = clip.len().abs_diff(expected_length);
            if diff as f64 > 0.01 * expected_length as f64 {
                let action = if clip.len() < expected_length { "zero-padded" } else { "truncated" };
                let msg = format!(
                    "stem '{label}' has {} samples, expected {expected_length}; {action}",
                    clip.len()
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            let mut samples = clip.into_samples();
            samples.resize(expected_length, 0.0);
            clip = AudioClip::new(samples, expected_rate)?;
        }
        sources.push(Source { label, audio: clip });
    }
    Ok(StemLoad { sources, warnings })
}
