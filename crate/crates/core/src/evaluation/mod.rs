//! Explanation fidelity: does the tagger still output the same top tag when
//! it only hears the top-`k` components of an explanation?

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::decomposition::{decompose, ComponentSet, SeparatorSpec};
use crate::error::{Error, Result};
use crate::lime::{fit_surrogate, top_positive, LimeConfig};
use crate::parallel::{self, Execution};
use crate::predictor::{predict, Predictor, PredictorSpec};
use crate::slime::{build_grid_component_set, GridSpec};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Audiolime,
    Slime,
    RandomPositive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Audiolime, Method::Slime, Method::RandomPositive];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Audiolime => "audiolime",
            Method::Slime => "slime",
            Method::RandomPositive => "random_positive",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "audiolime" => Ok(Method::Audiolime),
            "slime" => Ok(Method::Slime),
            "random" | "random_positive" => Ok(Method::RandomPositive),
            other => Err(Error::arg(
                "method",
                format!("unknown method '{other}' (expected audiolime, slime or random)"),
            )),
        }
    }
}

/// A named input clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityClip {
    pub id: String,
    pub audio: AudioClip,
}

impl FidelityClip {
    pub fn new(id: impl Into<String>, audio: AudioClip) -> Self {
        Self { id: id.into(), audio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    pub separator: SeparatorSpec,
    pub num_segments: usize,
    pub grid: GridSpec,
    /// Surrogate settings; `lime.seed` is the base from which every window
    /// seed is derived.
    pub lime: LimeConfig,
    /// Cap on windows taken from the start of each clip.
    pub max_windows_per_clip: Option<usize>,
    /// How windows are spread over workers.
    pub execution: Execution,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            ks: vec![1, 2, 3],
            separator: SeparatorSpec::default(),
            num_segments: 1,
            grid: GridSpec::default(),
            lime: LimeConfig::default(),
            max_windows_per_clip: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrial {
    pub clip_id: String,
    pub window_index: usize,
    pub method: Method,
    pub k: usize,
    pub original_tag: String,
    pub explanation_tag: String,
    pub same: bool,
    /// Window seed: drives mask sampling for both surrogates and, mixed
    /// with `k`, the random draw.
    pub seed: u64,
    pub selected: Vec<usize>,
    /// Score of `original_tag` on the full window.
    pub original_score: f64,
    /// Score of `original_tag` on the explanation audio.
    pub explanation_score: f64,
    pub score_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub method: Method,
    pub k: usize,
    pub fidelity: f64,
    pub same: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub predictor: String,
    pub config: FidelityConfig,
    pub rows: Vec<FidelityRow>,
    pub trials: Vec<FidelityTrial>,
}

impl FidelityReport {
    pub fn fidelity(&self, method: Method, k: usize) -> Option<f64> {
        self.row(method, k).map(|r| r.fidelity)
    }

    pub fn row(&self, method: Method, k: usize) -> Option<&FidelityRow> {
        self.rows.iter().find(|r| r.method == method && r.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,k,fidelity,count\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.6},{}", r.method, r.k, r.fidelity, r.count);
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let series: Vec<(String, Vec<(f64, f64)>)> = self
            .config
            .methods
            .iter()
            .map(|&m| {
                let points = self
                    .rows
                    .iter()
                    .filter(|r| r.method == m)
                    .map(|r| (r.k as f64, r.fidelity))
                    .collect();
                (m.to_string(), points)
            })
            .collect();
        svg::line_chart("Explanation fidelity", "k", "same top tag", &series)
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for window `window` of clip number `clip`.
pub fn window_seed(base: u64, clip: usize, window: usize) -> u64 {
    splitmix(splitmix(splitmix(base) ^ clip as u64) ^ window as u64)
}

/// `k` components drawn uniformly without replacement from the positive
/// coefficients (all of them when fewer than `k` exist), sorted ascending.
pub fn random_positive(coefficients: &[f64], k: usize, seed: u64) -> Vec<usize> {
    let positive: Vec<usize> = (0..coefficients.len())
        .filter(|&i| coefficients[i] > 0.0)
        .collect();
    if positive.len() <= k {
        return positive;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ k as u64));
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, positive.len(), k)
        .into_iter()
        .map(|i| positive[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Window length in clip samples matching the predictor's input duration.
fn window_len(clip_rate: u32, input_rate: u32, input_length: usize) -> usize {
    ((input_length as f64 * clip_rate as f64 / input_rate as f64).round() as usize).max(1)
}

/// Non-overlapping windows from the start of the clip; trailing partial
/// windows are dropped, and a clip shorter than one window is used whole.
fn tile(clip: &AudioClip, len: usize, cap: Option<usize>) -> Result<Vec<AudioClip>> {
    if clip.len() <= len {
        return Ok(vec![clip.clone()]);
    }
    let count = (clip.len() / len).min(cap.unwrap_or(usize::MAX));
    (0..count).map(|w| clip.slice(w * len, len)).collect()
}

fn validate(config: &FidelityConfig) -> Result<()> {
    if config.ks.is_empty() || config.ks.contains(&0) {
        return Err(Error::arg("ks", "must be nonempty with every k >= 1"));
    }
    if config.methods.is_empty() {
        return Err(Error::arg("methods", "must name at least one method"));
    }
    if matches!(config.separator, SeparatorSpec::StemsDirectory { .. }) {
        return Err(Error::arg(
            "separator",
            "a stems directory belongs to one recording and cannot separate every window",
        ));
    }
    Ok(())
}

struct Job<'a> {
    clip_index: usize,
    clip_id: &'a str,
    window_index: usize,
    audio: AudioClip,
}

/// Runs every method at every `k` over every window of every clip.
///
/// `toy_linear` predictors are rebuilt per window on that window's source
/// component set; all others are built once and shared.
pub fn run_fidelity(
    clips: &[FidelityClip],
    predictor: &PredictorSpec,
    config: &FidelityConfig,
) -> Result<FidelityReport> {
    validate(config)?;
    if clips.is_empty() {
        return Err(Error::arg("clips", "no input clips"));
    }
    let per_window = matches!(predictor, PredictorSpec::ToyLinear { .. });
    let shared = if per_window { None } else { Some(predictor.build(None)?) };
    let (input_rate, input_length) = match (predictor, &shared) {
        (PredictorSpec::ToyLinear { input_rate, input_length, .. }, _) => (*input_rate, *input_length),
        (_, Some(p)) => (p.input_rate(), p.input_length()),
        _ => unreachable!("non-toy_linear predictors are always built"),
    };

    let mut jobs = Vec::new();
    for (clip_index, clip) in clips.iter().enumerate() {
        let len = window_len(clip.audio.sample_rate(), input_rate, input_length);
        for (window_index, audio) in tile(&clip.audio, len, config.max_windows_per_clip)?
            .into_iter()
            .enumerate()
        {
            jobs.push(Job {
                clip_index,
                clip_id: &clip.id,
                window_index,
                audio,
            });
        }
    }

    let describe = shared.as_ref().map(|p| p.describe());
    let per_job = parallel::try_map(config.execution, &jobs, |_, job| {
        run_window(job, predictor, shared.as_ref(), config)
    })?;
    let trials: Vec<FidelityTrial> = per_job.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &method in &config.methods {
        for &k in &config.ks {
            let (same, count) = trials
                .iter()
                .filter(|t| t.method == method && t.k == k)
                .fold((0, 0), |(s, c), t| (s + t.same as usize, c + 1));
            rows.push(FidelityRow {
                method,
                k,
                fidelity: if count == 0 { 0.0 } else { same as f64 / count as f64 },
                same,
                count,
            });
        }
    }
    Ok(FidelityReport {
        predictor: describe.unwrap_or_else(|| "toy_linear (per window)".into()),
        config: config.clone(),
        rows,
        trials,
    })
}

fn run_window(
    job: &Job<'_>,
    spec: &PredictorSpec,
    shared: Option<&Arc<dyn Predictor>>,
    config: &FidelityConfig,
) -> Result<Vec<FidelityTrial>> {
    let seed = window_seed(config.lime.seed, job.clip_index, job.window_index);
    let lime = LimeConfig {
        seed,
        ..config.lime.clone()
    };
    let wants = |m: Method| config.methods.contains(&m);
    let source_set = if wants(Method::Audiolime) || wants(Method::RandomPositive) || shared.is_none() {
        Some(decompose(&job.audio, &config.separator, config.num_segments)?)
    } else {
        None
    };
    let predictor = match shared {
        Some(p) => p.clone(),
        None => spec.build(source_set.as_ref())?,
    };
    let predictor = predictor.as_ref();

    let original = predict(predictor, std::slice::from_ref(&job.audio))?.remove(0);
    let original_tag = original.top_tag().to_string();
    let original_score = original.get(&original_tag).unwrap_or(0.0);

    // (method, k, selection, audio) for every trial of this window.
    let mut pending: Vec<(Method, usize, Vec<usize>, AudioClip)> = Vec::new();
    let mut render = |method: Method, set: &ComponentSet, coef: &[f64]| -> Result<()> {
        for &k in &config.ks {
            let ids = match method {
                Method::RandomPositive => random_positive(coef, k, seed),
                _ => top_positive(coef, k),
            };
            let audio = set.compose(&set.mask_of(&ids)?)?;
            pending.push((method, k, ids, audio));
        }
        Ok(())
    };

    if let Some(set) = &source_set {
        if wants(Method::Audiolime) || wants(Method::RandomPositive) {
            let model = fit_surrogate(set, predictor, Some(&original_tag), &lime)?;
            for m in [Method::Audiolime, Method::RandomPositive] {
                if wants(m) {
                    render(m, set, &model.coefficients)?;
                }
            }
        }
    }
    if wants(Method::Slime) {
        let grid = build_grid_component_set(&job.audio, &config.grid)?;
        let model = fit_surrogate(&grid, predictor, Some(&original_tag), &lime)?;
        render(Method::Slime, &grid, &model.coefficients)?;
    }

    let audios: Vec<AudioClip> = pending.iter().map(|p| p.3.clone()).collect();
    let scores = predict(predictor, &audios)?;
    let mut trials: Vec<FidelityTrial> = pending
        .into_iter()
        .zip(scores)
        .map(|((method, k, selected, _), s)| {
            let explanation_tag = s.top_tag().to_string();
            let explanation_score = s.get(&original_tag).unwrap_or(0.0);
            FidelityTrial {
                clip_id: job.clip_id.to_string(),
                window_index: job.window_index,
                method,
                k,
                same: explanation_tag == original_tag,
                original_tag: original_tag.clone(),
                explanation_tag,
                seed,
                selected,
                original_score,
                explanation_score,
                score_delta: explanation_score - original_score,
            }
        })
        .collect();
    trials.sort_by_key(|t| {
        (
            config.methods.iter().position(|&m| m == t.method),
            config.ks.iter().position(|&k| k == t.k),
        )
    });
    Ok(trials)
}

/// Writes `<csv_path>` (method,k,fidelity,count), a JSON sidecar with the
/// full configuration and trials next to it, and optionally an SVG chart.
pub fn export_report(report: &FidelityReport, csv_path: &Path, with_svg: bool) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::arg("report", "has no rows"));
    }
    let write = |path: &Path, body: &str| std::fs::write(path, body).map_err(|e| Error::io(path, e));
    write(csv_path, &report.to_csv())?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write(&csv_path.with_extension("json"), &json)?;
    if with_svg {
        write(&csv_path.with_extension("svg"), &report.to_svg())?;
    }
    Ok(())
}
