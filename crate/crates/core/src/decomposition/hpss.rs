//! Harmonic/percussive separation by median filtering a magnitude
//! spectrogram along time (harmonic) and frequency (percussive).

use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, Spectrogram, StftPlan, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpssParams {
    pub window_size: usize,
    pub hop_size: usize,
    /// Median length across frames, per frequency bin.
    pub harmonic_kernel: usize,
    /// Median length across bins, per frame.
    pub percussive_kernel: usize,
    /// Exponent of the soft masks.
    pub mask_power: f64,
}

impl Default for HpssParams {
    fn default() -> Self {
        Self {
            window_size: DEFAULT_WINDOW,
            hop_size: DEFAULT_HOP,
            harmonic_kernel: 17,
            percussive_kernel: 17,
            mask_power: 2.0,
        }
    }
}

impl HpssParams {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [
            ("harmonic_kernel", self.harmonic_kernel),
            ("percussive_kernel", self.percussive_kernel),
        ] {
            if k < 3 || k % 2 == 0 {
                return Err(Error::arg(name, format!("{k} must be odd and >= 3")));
            }
        }
        if !(self.mask_power.is_finite() && self.mask_power > 0.0) {
            return Err(Error::arg(
                "mask_power",
                format!("{} must be positive", self.mask_power),
            ));
        }
        Ok(())
    }
}

/// A configured separator; construct once and reuse across clips.
#[derive(Debug, Clone)]
pub struct Hpss {
    params: HpssParams,
    plan: StftPlan,
}

impl Hpss {
    pub fn new(params: HpssParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            plan: StftPlan::new(params.window_size, params.hop_size)?,
            params,
        })
    }

    pub fn params(&self) -> &HpssParams {
        &self.params
    }

    pub fn plan(&self) -> &StftPlan {
        &self.plan
    }

    fn check_length(&self, clip: &AudioClip) -> Result<()> {
        if clip.len() < self.params.window_size {
            return Err(Error::Separator(format!(
                "clip of {} samples is shorter than the HPSS window ({})",
                clip.len(),
                self.params.window_size
            )));
        }
        Ok(())
    }

    /// Harmonic soft mask, frame-major like the spectrogram. The percussive
    /// mask is its complement.
    pub fn harmonic_mask(&self, spec: &Spectrogram) -> Vec<f64> {
        let mags = spec.magnitudes();
        let bins = spec.num_bins();
        let frames = spec.num_frames();
        let harmonic = median_along_time(&mags, bins, frames, self.params.harmonic_kernel);
        let percussive = median_along_freq(&mags, bins, frames, self.params.percussive_kernel);
        let p = self.params.mask_power;
        harmonic
            .iter()
            .zip(&percussive)
            .map(|(&h, &q)| {
                let (hp, qp) = if p == 2.0 { (h * h, q * q) } else { (h.powf(p), q.powf(p)) };
                let denom = hp + qp;
                if denom > 0.0 {
                    hp / denom
                } else {
                    0.5
                }
            })
            .collect()
    }

    /// Returns `(harmonic, percussive)` estimates at the clip's length.
    pub fn separate(&self, clip: &AudioClip) -> Result<(AudioClip, AudioClip)> {
        self.check_length(clip)?;
        let spec = self.plan.forward(clip)?;
        let mask_h = self.harmonic_mask(&spec);
        let mask_p: Vec<f64> = mask_h.iter().map(|m| 1.0 - m).collect();
        let harmonic = self.plan.inverse(&spec.masked(&mask_h)?, clip.len())?;
        let percussive = self.plan.inverse(&spec.masked(&mask_p)?, clip.len())?;
        Ok((harmonic, percussive))
    }

    /// Spectral energies `(harmonic, percussive)` of the masked STFT, without
    /// going back to the time domain.
    pub fn energies(&self, clip: &AudioClip) -> Result<(f64, f64)> {
        self.check_length(clip)?;
        let spec = self.plan.forward(clip)?;
        let mask_h = self.harmonic_mask(&spec);
        let mut eh = 0.0;
        let mut ep = 0.0;
        for (c, &m) in spec.coefficients().iter().zip(&mask_h) {
            let e = c.norm_sqr();
            eh += e * m * m;
            ep += e * (1.0 - m) * (1.0 - m);
        }
        Ok((eh, ep))
    }
}

fn median_of(buf: &mut [f64]) -> f64 {
    let mid = buf.len() / 2;
    *buf.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// Windows are truncated at the edges rather than padded.
fn median_along_time(mags: &[f64], bins: usize, frames: usize, kernel: usize) -> Vec<f64> {
    let half = kernel / 2;
    let mut out = vec![0.0; mags.len()];
    let mut buf = Vec::with_capacity(kernel);
    for b in 0..bins {
        for t in 0..frames {
            buf.clear();
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(frames);
            buf.extend((lo..hi).map(|u| mags[u * bins + b]));
            out[t * bins + b] = median_of(&mut buf);
        }
    }
    out
}

fn median_along_freq(mags: &[f64], bins: usize, frames: usize, kernel: usize) -> Vec<f64> {
    let half = kernel / 2;
    let mut out = vec![0.0; mags.len()];
    let mut buf = Vec::with_capacity(kernel);
    for t in 0..frames {
        let row = &mags[t * bins..(t + 1) * bins];
        for b in 0..bins {
            buf.clear();
            let lo = b.saturating_sub(half);
            let hi = (b + half + 1).min(bins);
            buf.extend_from_slice(&row[lo..hi]);
            out[t * bins + b] = median_of(&mut buf);
        }
    }
    out
}
