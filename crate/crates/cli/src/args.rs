use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lime_audio::evaluation::Method;
use lime_audio::lime::TargetLink;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "lime-audio", version, about = "Listenable explanations for black-box audio taggers")]
pub struct Cli {
    /// Seed for every random choice; drawn at random and echoed when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "lime-audio-out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: log::LevelFilter,
    /// Worker threads; 0 uses every logical core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explain one clip's prediction.
    Explain(ExplainArgs),
    /// Measure explanation fidelity over a directory of clips.
    Evaluate(EvaluateArgs),
    /// Write every interpretable component of a clip as a WAV file.
    Decompose(DecomposeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Explain(_) => "explain",
            Command::Evaluate(_) => "evaluate",
            Command::Decompose(_) => "decompose",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SeparationArgs {
    /// `hpss` or `stems:<directory>`.
    #[arg(long, default_value = "hpss")]
    pub separator: SeparatorArg,
    /// Temporal segments per source.
    #[arg(long, default_value_t = 1)]
    pub segments: usize,
    /// Fail instead of resampling stems whose rate differs from the input.
    #[arg(long)]
    pub strict_stems: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SurrogateArgs {
    /// Perturbations per explanation.
    #[arg(long, default_value_t = 16384)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// `toy-energy`, `toy-linear:<w1,w2,...>[@bias]` or `cmd:<command line>`.
    #[arg(long, default_value = "toy-energy")]
    pub predictor: PredictorArg,
    /// Regression target: the raw score or its logit.
    #[arg(long, value_enum, default_value_t = LinkArg::Identity)]
    pub link: LinkArg,
    /// Input rate for toy predictors; defaults to the input's rate.
    #[arg(long)]
    pub input_rate: Option<u32>,
    /// Input length for toy predictors; defaults to the (shortest) input's length.
    #[arg(long)]
    pub input_length: Option<usize>,
    /// Pipelined requests to an external predictor.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 30000)]
    pub timeout_ms: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExplainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub separation: SeparationArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub surrogate: SurrogateArgs,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    /// Tag to explain; defaults to the top prediction on the input.
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluateArgs {
    /// Directory of WAV clips.
    #[arg(long)]
    pub inputs: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "audiolime,slime,random")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub ks: Vec<usize>,
    /// Spectrogram grid for the slime baseline, `FxT`.
    #[arg(long, default_value = "4x4")]
    pub grid: GridArg,
    /// Cap on windows per clip.
    #[arg(long)]
    pub max_windows: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub separation: SeparationArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub surrogate: SurrogateArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub separation: SeparationArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkArg {
    Identity,
    Logit,
}

impl From<LinkArg> for TargetLink {
    fn from(l: LinkArg) -> Self {
        match l {
            LinkArg::Identity => TargetLink::Identity,
            LinkArg::Logit => TargetLink::Logit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum SeparatorArg {
    Hpss,
    Stems(PathBuf),
}

impl FromStr for SeparatorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hpss" => Ok(SeparatorArg::Hpss),
            _ => match s.strip_prefix("stems:") {
                Some(dir) if !dir.is_empty() => Ok(SeparatorArg::Stems(dir.into())),
                _ => Err(format!("expected 'hpss' or 'stems:<dir>', got '{s}'")),
            },
        }
    }
}

impl fmt::Display for SeparatorArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparatorArg::Hpss => f.write_str("hpss"),
            SeparatorArg::Stems(d) => write!(f, "stems:{}", d.display()),
        }
    }
}

impl From<SeparatorArg> for String {
    fn from(s: SeparatorArg) -> Self {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum PredictorArg {
    ToyEnergy,
    ToyLinear { weights: Vec<f64>, bias: f64 },
    Command(String),
}

impl FromStr for PredictorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "toy-energy" {
            return Ok(PredictorArg::ToyEnergy);
        }
        if let Some(cmd) = s.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err("cmd: needs a command line".into());
            }
            return Ok(PredictorArg::Command(cmd.to_string()));
        }
        if let Some(spec) = s.strip_prefix("toy-linear:") {
            let (w, b) = spec.split_once('@').unwrap_or((spec, "0"));
            let weights = w
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("weight '{x}': {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            let bias = b.trim().parse::<f64>().map_err(|e| format!("bias '{b}': {e}"))?;
            return Ok(PredictorArg::ToyLinear { weights, bias });
        }
        Err(format!(
            "expected toy-energy, toy-linear:<w1,w2,...>[@bias] or cmd:<command>, got '{s}'"
        ))
    }
}

impl fmt::Display for PredictorArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorArg::ToyEnergy => f.write_str("toy-energy"),
            PredictorArg::ToyLinear { weights, bias } => {
                let w: Vec<String> = weights.iter().map(|x| x.to_string()).collect();
                write!(f, "toy-linear:{}@{bias}", w.join(","))
            }
            PredictorArg::Command(c) => write!(f, "cmd:{c}"),
        }
    }
}

impl From<PredictorArg> for String {
    fn from(p: PredictorArg) -> Self {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct MethodArg(pub Method);

impl FromStr for MethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(MethodArg).map_err(|e: lime_audio::Error| e.to_string())
    }
}

impl From<MethodArg> for String {
    fn from(m: MethodArg) -> Self {
        m.0.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct GridArg {
    pub freq_bands: usize,
    pub time_bands: usize,
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected FxT such as 4x4, got '{s}'");
        let (f, t) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let freq_bands: usize = f.parse().map_err(|_| bad())?;
        let time_bands: usize = t.parse().map_err(|_| bad())?;
        if freq_bands == 0 || time_bands == 0 {
            return Err(bad());
        }
        Ok(GridArg { freq_bands, time_bands })
    }
}

impl From<GridArg> for String {
    fn from(g: GridArg) -> Self {
        format!("{}x{}", g.freq_bands, g.time_bands)
    }
}
