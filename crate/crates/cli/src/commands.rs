use std::fs;
use std::path::{Path, PathBuf};

use lime_audio::audio::{load_wav, save_wav};
use lime_audio::decomposition::{decompose, ComponentSet, HpssParams, SeparatorSpec};
use lime_audio::evaluation::{export_report, run_fidelity, FidelityClip, FidelityConfig};
use lime_audio::lime::{explain_clip, LimeConfig, ScoringOptions};
use lime_audio::parallel::Execution;
use lime_audio::predictor::PredictorSpec;
use lime_audio::slime::GridSpec;
use lime_audio::{svg, AudioClip};
use serde::Serialize;

use crate::args::{
    DecomposeArgs, EvaluateArgs, ExplainArgs, PredictorArg, SeparationArgs, SeparatorArg,
    SurrogateArgs,
};

/// A failure tagged with the pipeline stage it happened in.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

pub type StageResult<T> = Result<T, StageError>;

pub fn stage<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> StageError {
    move |e| StageError {
        stage,
        message: e.to_string(),
    }
}

pub struct Context {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub execution: Execution,
}

fn separator_spec(args: &SeparationArgs) -> SeparatorSpec {
    match &args.separator {
        SeparatorArg::Hpss => SeparatorSpec::HpssBuiltin(HpssParams::default()),
        SeparatorArg::Stems(dir) => SeparatorSpec::StemsDirectory {
            directory: dir.clone(),
            strict: args.strict_stems,
        },
    }
}

fn predictor_spec(args: &SurrogateArgs, rate: u32, length: usize) -> PredictorSpec {
    let input_rate = args.input_rate.unwrap_or(rate);
    let input_length = args.input_length.unwrap_or(length);
    match &args.predictor {
        PredictorArg::ToyEnergy => PredictorSpec::ToyEnergy {
            input_rate,
            input_length,
            hpss: HpssParams::default(),
        },
        PredictorArg::ToyLinear { weights, bias } => PredictorSpec::ToyLinear {
            input_rate,
            input_length,
            weights: weights.clone(),
            bias: *bias,
        },
        PredictorArg::Command(command) => PredictorSpec::Subprocess {
            command: command.clone(),
            max_in_flight: args.max_in_flight,
            timeout_ms: args.timeout_ms,
        },
    }
}

fn lime_config(args: &SurrogateArgs, ctx: &Context) -> LimeConfig {
    LimeConfig {
        num_samples: args.samples,
        lambda: args.lambda,
        seed: ctx.seed,
        scoring: ScoringOptions {
            execution: ctx.execution,
            link: args.link.into(),
            ..Default::default()
        },
    }
}

fn write_text(path: &Path, body: &str) -> StageResult<()> {
    fs::write(path, body).map_err(|e| StageError {
        stage: "write outputs",
        message: format!("{}: {e}", path.display()),
    })
}

fn write_components(set: &ComponentSet, dir: &Path) -> StageResult<Vec<String>> {
    fs::create_dir_all(dir).map_err(stage("write outputs"))?;
    set.components()
        .iter()
        .map(|c| {
            let file = format!("{}.wav", c.name());
            save_wav(&c.audio, dir.join(&file)).map_err(stage("write outputs"))?;
            Ok(file)
        })
        .collect()
}

pub fn explain(args: &ExplainArgs, ctx: &Context) -> StageResult<()> {
    let clip = load_wav(&args.input, None).map_err(stage("load input"))?;
    let set = decompose(&clip, &separator_spec(&args.separation), args.separation.segments)
        .map_err(stage("decompose"))?;
    let predictor = predictor_spec(&args.surrogate, clip.sample_rate(), clip.len())
        .build(Some(&set))
        .map_err(stage("start predictor"))?;
    log::info!(
        "explaining with {} over {} components",
        predictor.describe(),
        set.len()
    );
    let explanation = explain_clip(
        &set,
        predictor.as_ref(),
        args.tag.as_deref(),
        &lime_config(&args.surrogate, ctx),
        args.top_k,
    )
    .map_err(stage("explain"))?;

    explanation
        .write(&set, &ctx.out_dir, "explanation")
        .map_err(stage("write outputs"))?;
    write_components(&set, &ctx.out_dir.join("components"))?;
    let names: Vec<String> = set.components().iter().map(|c| c.name()).collect();
    let chart = svg::bar_chart(
        &format!("Coefficients for '{}'", explanation.metadata.explained_tag),
        &names,
        &explanation.coefficients,
    );
    write_text(&ctx.out_dir.join("coefficients.svg"), &chart)?;

    println!("tag: {}", explanation.metadata.explained_tag);
    if explanation.metadata.no_positive_coefficients {
        println!("no component has a positive coefficient; explanation is silent");
    }
    for (&id, name) in explanation.component_ids.iter().zip(&explanation.component_names) {
        println!("{name}\t{:.6}", explanation.coefficients[id]);
    }
    Ok(())
}

fn load_inputs(dir: &Path) -> StageResult<Vec<FidelityClip>> {
    let entries = fs::read_dir(dir).map_err(|e| StageError {
        stage: "load inputs",
        message: format!("{}: {e}", dir.display()),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(StageError {
            stage: "load inputs",
            message: format!("no input clips in {}", dir.display()),
        });
    }
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(FidelityClip::new(id, load_wav(p, None).map_err(stage("load inputs"))?))
        })
        .collect()
}

pub fn evaluate(args: &EvaluateArgs, ctx: &Context) -> StageResult<()> {
    let clips = load_inputs(&args.inputs)?;
    let rate = clips[0].audio.sample_rate();
    let shortest = clips.iter().map(|c| c.audio.len()).min().unwrap_or(0);
    let spec = predictor_spec(&args.surrogate, rate, shortest);
    let config = FidelityConfig {
        methods: args.methods.iter().map(|m| m.0).collect(),
        ks: args.ks.clone(),
        separator: separator_spec(&args.separation),
        num_segments: args.separation.segments,
        grid: GridSpec::new(args.grid.freq_bands, args.grid.time_bands),
        lime: lime_config(&args.surrogate, ctx),
        max_windows_per_clip: args.max_windows,
        execution: ctx.execution,
    };
    log::info!("evaluating {} clips", clips.len());
    let report = run_fidelity(&clips, &spec, &config).map_err(stage("evaluate"))?;
    export_report(&report, &ctx.out_dir.join("fidelity.csv"), true).map_err(stage("write outputs"))?;
    print!("{}", report.to_csv());
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: String,
    source_label: &'a str,
    segment_index: usize,
    start: usize,
    end: usize,
    file: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    input: &'a Path,
    separator: SeparatorSpec,
    sample_rate: u32,
    clip_len: usize,
    num_sources: usize,
    num_segments: usize,
    components: Vec<ManifestEntry<'a>>,
}

pub fn decompose_cmd(args: &DecomposeArgs, ctx: &Context) -> StageResult<()> {
    let clip: AudioClip = load_wav(&args.input, None).map_err(stage("load input"))?;
    let separator = separator_spec(&args.separation);
    let set = decompose(&clip, &separator, args.separation.segments).map_err(stage("decompose"))?;
    let files = write_components(&set, &ctx.out_dir)?;
    let manifest = Manifest {
        input: &args.input,
        separator,
        sample_rate: set.sample_rate(),
        clip_len: set.clip_len(),
        num_sources: set.num_sources(),
        num_segments: set.num_segments(),
        components: set
            .components()
            .iter()
            .zip(files)
            .map(|(c, file)| ManifestEntry {
                name: c.name(),
                source_label: &c.source_label,
                segment_index: c.segment_index,
                start: c.support.start,
                end: c.support.end,
                file,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(stage("write outputs"))?;
    write_text(&ctx.out_dir.join("manifest.json"), &(json + "\n"))?;
    for c in &manifest.components {
        println!("{}", c.file);
    }
    Ok(())
}
