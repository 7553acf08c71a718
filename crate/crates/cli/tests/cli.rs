use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lime_audio::audio::{load_wav, save_wav};
use lime_audio::synth::{self, SineClickMix};
use lime_audio::AudioClip;

const BIN: &str = env!("CARGO_BIN_EXE_lime-audio");
const MOCK: &str = env!("CARGO_BIN_EXE_mock-predictor");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn mixture_wav(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    save_wav(&SineClickMix::random(seed, 16000, 16000).render(), &path).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn explain_percussive_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = mixture_wav(dir.path(), "mix.wav", 4);
    let out = dir.path().join("out");
    let o = run(&[
        "explain", "--input", input.to_str().unwrap(), "--separator", "hpss", "--segments", "1",
        "--predictor", "toy-energy", "--tag", "percussive", "--top-k", "1", "--samples", "256",
        "--seed", "5", "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&out.join("explanation.json"));
    assert_eq!(doc["schema"], "audiolime_explanation_v1");
    assert_eq!(doc["component_names"], serde_json::json!(["percussive_seg0"]));
    assert_eq!(doc["audio"], "explanation.wav");
    for f in [
        "explanation.wav",
        "components/harmonic_seg0.wav",
        "components/percussive_seg0.wav",
        "coefficients.svg",
        "run_config.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let cfg = json(&out.join("run_config.json"));
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["command"], "explain");
    assert_eq!(cfg["args"]["top_k"], 1);
}

#[test]
fn identical_flags_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = mixture_wav(dir.path(), "mix.wav", 8);
    let out = dir.path().join("out");
    let args = [
        "explain", "--input", input.to_str().unwrap(), "--segments", "2", "--samples", "300",
        "--seed", "17", "--out-dir", out.to_str().unwrap(),
    ];
    let read = |f: &str| std::fs::read(out.join(f)).unwrap();
    assert!(run(&args).status.success());
    let first = (read("explanation.json"), read("explanation.wav"), read("run_config.json"));
    assert!(run(&args).status.success());
    assert_eq!(first, (read("explanation.json"), read("explanation.wav"), read("run_config.json")));
}

#[test]
fn too_few_samples_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = mixture_wav(dir.path(), "mix.wav", 1);
    let out = dir.path().join("out");
    let o = run(&[
        "explain", "--input", input.to_str().unwrap(), "--samples", "2", "--seed", "1",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("explain failed") && err.contains("n >= d' + 1"), "{err}");
    assert!(out.join("run_config.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["explain"]).status.code(), Some(2));
    assert_eq!(run(&["evaluate", "--inputs", ".", "--grid", "0x4"]).status.code(), Some(2));
    assert_eq!(run(&["explain", "--input", "x.wav", "--predictor", "svm"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_seed_is_drawn_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let input = mixture_wav(dir.path(), "mix.wav", 2);
    let out = dir.path().join("out");
    let o = run(&["decompose", "--input", input.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = json(&out.join("run_config.json"));
    assert_eq!(cfg["seed_from_flag"], false);
    let seed = cfg["seed"].as_u64().unwrap();
    assert!(stderr(&o).contains(&format!("using seed {seed}")));
}

#[test]
fn missing_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "explain", "--input", "/nonexistent.wav", "--seed", "0", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("load input failed"), "{}", stderr(&o));
}

#[test]
fn decompose_writes_components_that_sum_to_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = mixture_wav(dir.path(), "mix.wav", 3);
    let out = dir.path().join("out");
    let o = run(&[
        "decompose", "--input", input.to_str().unwrap(), "--segments", "2", "--seed", "0",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    let files: Vec<&str> = manifest["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["file"].as_str().unwrap())
        .collect();
    assert_eq!(
        files,
        ["harmonic_seg0.wav", "harmonic_seg1.wav", "percussive_seg0.wav", "percussive_seg1.wav"]
    );
    let original = load_wav(&input, None).unwrap();
    let mut sum = vec![0.0f32; original.len()];
    for f in files {
        for (s, x) in sum.iter_mut().zip(load_wav(out.join(f), None).unwrap().samples()) {
            *s += x;
        }
    }
    let sum = AudioClip::new(sum, 16000).unwrap();
    assert!(sum.max_abs_diff(&original).unwrap() <= 1e-4);
}

#[test]
fn decompose_with_stems_uses_stem_labels() {
    let dir = tempfile::tempdir().unwrap();
    let stems = dir.path().join("stems");
    std::fs::create_dir(&stems).unwrap();
    let len = 8000;
    let parts = [
        ("piano", synth::sine(261.6, 0.2, 16000, len)),
        ("drums", synth::clicks(0.1, 0.5, 16000, len)),
        ("vocals", synth::sine(440.0, 0.2, 16000, len)),
        ("bass", synth::sine(55.0, 0.2, 16000, len)),
    ];
    let mut mix = AudioClip::silence(len, 16000).unwrap();
    for (name, clip) in &parts {
        save_wav(clip, stems.join(format!("{name}.wav"))).unwrap();
        mix = synth::add(&mix, clip);
    }
    let input = dir.path().join("mix.wav");
    save_wav(&mix, &input).unwrap();
    let out = dir.path().join("out");
    let sep = format!("stems:{}", stems.display());
    let o = run(&[
        "decompose", "--input", input.to_str().unwrap(), "--separator", &sep, "--seed", "0",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["piano", "drums", "vocals", "bass"] {
        assert!(out.join(format!("{name}_seg0.wav")).exists(), "{name}");
    }
}

#[test]
fn evaluate_reports_every_method_and_k() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("clips");
    std::fs::create_dir(&inputs).unwrap();
    for i in 0..3 {
        mixture_wav(&inputs, &format!("clip{i}.wav"), 100 + i);
    }
    let out = dir.path().join("out");
    let o = run(&[
        "evaluate", "--inputs", inputs.to_str().unwrap(), "--methods", "audiolime,random",
        "--ks", "1,2", "--segments", "2", "--samples", "256", "--seed", "3",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("fidelity.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(csv.lines().next(), Some("method,k,fidelity,count"));
    assert_eq!(rows.len(), 4);
    let fid = |m: &str, k: &str| -> f64 {
        rows.iter().find(|r| r[0] == m && r[1] == k).unwrap()[2].parse().unwrap()
    };
    for k in ["1", "2"] {
        assert!(fid("audiolime", k) >= fid("random_positive", k), "{csv}");
    }
    assert!(out.join("fidelity.json").exists() && out.join("fidelity.svg").exists());
    assert_eq!(json(&out.join("run_config.json"))["args"]["grid"], "4x4");
}

#[test]
fn evaluate_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = run(&[
        "evaluate", "--inputs", empty.to_str().unwrap(), "--seed", "0", "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no input clips"), "{}", stderr(&o));
}

fn explain_with_mock(dir: &Path, mock_flags: &str, extra: &[&str]) -> Output {
    let input = mixture_wav(dir, "mix.wav", 6);
    let predictor = format!("cmd:{MOCK} --rate 16000 --length 16000 {mock_flags}");
    let out = dir.join("out");
    let mut args = vec![
        "explain", "--input", input.to_str().unwrap(), "--segments", "2", "--samples", "64",
        "--seed", "9", "--predictor", &predictor, "--out-dir", out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    Command::new(BIN).args(&args).output().unwrap()
}

#[test]
fn external_predictor_with_reordered_replies() {
    let dir = tempfile::tempdir().unwrap();
    let o = explain_with_mock(dir.path(), "--reverse 4", &["--max-in-flight", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&dir.path().join("out/explanation.json"));
    assert_eq!(doc["metadata"]["explained_tag"], "loud");

    let sequential = tempfile::tempdir().unwrap();
    let o = explain_with_mock(sequential.path(), "", &["--max-in-flight", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(dir.path().join("out/explanation.json")).unwrap(),
        std::fs::read(sequential.path().join("out/explanation.json")).unwrap()
    );
}

#[test]
fn external_predictor_failures_exit_with_one() {
    for (flags, expected) in [
        ("--error-on 3", "refused by --error-on"),
        ("--malformed-after 2", "malformed"),
        ("--exit-after 2", "exited"),
        ("--protocol 7", "start predictor failed"),
        ("--sleep-ms 400", "no reply within"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = explain_with_mock(dir.path(), flags, &["--timeout-ms", "100"]);
        assert_eq!(o.status.code(), Some(1), "{flags}: {}", stderr(&o));
        assert!(stderr(&o).contains(expected), "{flags}: {}", stderr(&o));
    }
}

#[test]
fn external_scores_out_of_range_are_clamped_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = explain_with_mock(dir.path(), "--scale 1.5", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("clamped to [0, 1]"), "{}", stderr(&o));
}
