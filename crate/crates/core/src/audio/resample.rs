use super::AudioClip;
use crate::error::{Error, Result};

/// Linear-interpolation resampler.
///
/// Utility grade: there is no anti-aliasing filter, so downsampling folds
/// content above the new Nyquist frequency. It exists to bridge sample-rate
/// mismatches with predictors, not for high-fidelity conversion.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::arg("target_rate", "must be at least 1 Hz"));
    }
    let source_rate = clip.sample_rate();
    if target_rate == source_rate {
        return Ok(clip.clone());
    }
    let x = clip.samples();
    let len = x.len();
    let out_len = ((len as f64 * target_rate as f64 / source_rate as f64).round() as usize).max(1);
    let step = source_rate as f64 / target_rate as f64;
    let last = len - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let left = pos.floor() as usize;
            if left >= last {
                return x[last];
            }
            let frac = pos - left as f64;
            (x[left] as f64 * (1.0 - frac) + x[left + 1] as f64 * frac) as f32
        })
        .collect();
    Ok(AudioClip::from_parts_unchecked(samples, target_rate))
}
