mod common;

use common::*;
use lime_audio::evaluation::{run_fidelity, FidelityClip, FidelityConfig, Method};
use lime_audio::lime::LimeConfig;
use lime_audio::predictor::predict;
use proptest::prelude::*;

const LEN: usize = 8192;

fn short_mixture(seed: u64) -> lime_audio::AudioClip {
    lime_audio::synth::SineClickMix::random(seed, RATE, LEN).render()
}

fn config(methods: Vec<Method>, ks: Vec<usize>, segments: usize) -> FidelityConfig {
    FidelityConfig {
        methods,
        ks,
        num_segments: segments,
        lime: LimeConfig {
            num_samples: 512,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn clips(n: u64) -> Vec<FidelityClip> {
    (0..n)
        .map(|i| FidelityClip::new(format!("c{i}"), short_mixture(i)))
        .collect()
}

#[test]
fn single_relevant_bit_gives_full_fidelity() {
    let report = run_fidelity(
        &clips(5),
        &toy_linear(LEN, &[3.0, 0.0, 0.0, 0.0], -1.5),
        &config(vec![Method::Audiolime], vec![1], 2),
    )
    .unwrap();
    assert_eq!(report.fidelity(Method::Audiolime, 1), Some(1.0));
    for t in &report.trials {
        assert_eq!(t.selected, vec![0]);
        assert_eq!(t.original_tag, "target");
    }
}

#[test]
fn full_selection_matches_reconstruction_tag() {
    let cs = clips(4);
    let report = run_fidelity(
        &cs,
        &toy_energy(LEN),
        &config(vec![Method::Audiolime], vec![4], 2),
    )
    .unwrap();
    let predictor = toy_energy(LEN).build(None).unwrap();
    for (t, c) in report.trials.iter().zip(&cs) {
        if t.selected.len() < 4 {
            continue;
        }
        let recon = hpss_set(&c.audio, 2).reconstruction();
        let tag = predict(predictor.as_ref(), &[recon]).unwrap()[0].top_tag().to_string();
        assert_eq!(t.explanation_tag, tag);
    }
}

#[test]
fn random_draw_of_every_positive_component_matches_audiolime() {
    let report = run_fidelity(
        &clips(4),
        &toy_linear(LEN, &[2.0, -1.0, 1.0, -1.0], 0.0),
        &config(vec![Method::Audiolime, Method::RandomPositive], vec![2], 2),
    )
    .unwrap();
    let (a, r): (Vec<_>, Vec<_>) = report.trials.iter().partition(|t| t.method == Method::Audiolime);
    assert_eq!(a.len(), 4);
    for (a, r) in a.iter().zip(&r) {
        let mut sel = a.selected.clone();
        sel.sort_unstable();
        assert_eq!(sel, vec![0, 2]);
        assert_eq!(sel, r.selected);
        assert_eq!(a.same, r.same);
    }
    assert_eq!(
        report.fidelity(Method::Audiolime, 2),
        report.fidelity(Method::RandomPositive, 2)
    );
}

#[test]
fn windows_are_tiled_per_clip() {
    let long = FidelityClip::new("long", lime_audio::synth::SineClickMix::random(9, RATE, 3 * LEN + 100).render());
    let report = run_fidelity(
        &[long],
        &toy_energy(LEN),
        &config(vec![Method::Audiolime], vec![1], 1),
    )
    .unwrap();
    let windows: Vec<usize> = report.trials.iter().map(|t| t.window_index).collect();
    assert_eq!(windows, vec![0, 1, 2]);
    let seeds: std::collections::HashSet<u64> = report.trials.iter().map(|t| t.seed).collect();
    assert_eq!(seeds.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nonnegative_weights_make_fidelity_monotone_in_k(
        weights in proptest::collection::vec(0.0f64..2.0, 4),
        bias in -3.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let cs = vec![FidelityClip::new("p", short_mixture(seed))];
        let report = run_fidelity(
            &cs,
            &toy_linear(LEN, &weights, bias),
            &config(vec![Method::Audiolime], vec![1, 2, 3, 4], 2),
        ).unwrap();
        let same: Vec<bool> = report.trials.iter().map(|t| t.same).collect();
        prop_assert!(same.windows(2).all(|w| w[0] <= w[1]), "{:?}", same);
    }
}
