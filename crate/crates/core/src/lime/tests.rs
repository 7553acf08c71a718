use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::decomposition::{build_component_set, ComponentSet, Source};
use crate::parallel::Execution;
use crate::predictor::{Predictor, ToyLinearTagger};
use crate::synth;

// Logit-space targets are unbounded, which the synthetic fits below need.
fn perturbations(masks: MaskMatrix, targets: Vec<f64>) -> PerturbationSet {
    let n = masks.rows();
    PerturbationSet::new(masks, targets, vec![1.0; n], 0, "t", TargetLink::Logit).unwrap()
}

/// Ridge by SVD least squares on the augmented design
/// `[√w·(1, z); (0, √λ·I)]`: shares no code with the normal-equations path.
fn ridge_oracle(p: &PerturbationSet, lambda: f64) -> (Vec<f64>, f64) {
    let (n, d) = (p.masks.rows(), p.masks.cols());
    let mut x = DMatrix::<f64>::zeros(n + d, d + 1);
    let mut y = DVector::<f64>::zeros(n + d);
    for i in 0..n {
        let sw = p.weights[i].sqrt();
        x[(i, 0)] = sw;
        for (j, &b) in p.masks.row(i).iter().enumerate() {
            x[(i, j + 1)] = if b { sw } else { 0.0 };
        }
        y[i] = sw * p.targets[i];
    }
    for j in 0..d {
        x[(n + j, j + 1)] = lambda.sqrt();
    }
    let sol = x.svd(true, true).solve(&y, 1e-14).unwrap();
    (sol.iter().skip(1).copied().collect(), sol[0])
}

fn linear_targets(masks: &MaskMatrix, w: &[f64], b: f64) -> Vec<f64> {
    masks
        .iter_rows()
        .map(|m| b + w.iter().zip(m).filter(|(_, &on)| on).map(|(x, _)| x).sum::<f64>())
        .collect()
}

#[test]
fn exact_linear_targets_are_interpolated() {
    let masks = sample_masks(5, 300, 11).unwrap();
    let truth = [0.5, 0.0, -0.25, 0.0, 0.0];
    let p = perturbations(masks.clone(), linear_targets(&masks, &truth, 0.1));
    let m = fit_ridge(&p, 0.0).unwrap();
    for (c, t) in m.coefficients.iter().zip(truth) {
        assert!((c - t).abs() <= 1e-6, "{c} vs {t}");
    }
    assert!((m.intercept - 0.1).abs() <= 1e-6);
    assert!((m.r_squared - 1.0).abs() < 1e-9);
    assert!(m.normal_residual <= 1e-8);
}

#[test]
fn constant_targets_give_zero_coefficients() {
    let masks = sample_masks(6, 200, 5).unwrap();
    for lambda in [0.0, 1.0, 100.0] {
        let p = perturbations(masks.clone(), vec![0.37; 200]);
        let m = fit_ridge(&p, lambda).unwrap();
        assert!(m.coefficients.iter().all(|c| c.abs() < 1e-12), "{:?}", m.coefficients);
        assert!((m.intercept - 0.37).abs() < 1e-12);
    }
}

#[test]
fn huge_lambda_shrinks_to_zero() {
    let masks = sample_masks(6, 500, 8).unwrap();
    let y = linear_targets(&masks, &[0.9, -0.4, 0.2, 0.1, 0.0, 0.3], 0.2);
    let m = fit_ridge(&perturbations(masks, y), 1e9).unwrap();
    let norm = m.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!(norm <= 1e-3, "{norm}");
}

#[test]
fn singular_system_is_reported_not_regularized() {
    // column 1 duplicates column 0
    let rows: Vec<Vec<bool>> = std::iter::once(vec![true; 3])
        .chain((0..20).map(|i| vec![i % 2 == 0, i % 2 == 0, i % 3 == 0]))
        .collect();
    let masks = MaskMatrix::from_rows(rows).unwrap();
    let y = (0..21).map(|i| (i % 5) as f64 / 5.0).collect();
    let p = perturbations(masks, y);
    assert!(matches!(fit_ridge(&p, 0.0), Err(crate::Error::SingularSystem { .. })));
    assert!(fit_ridge(&p, 0.5).is_ok());
}

#[test]
fn too_few_samples() {
    let masks = sample_masks(4, 4, 1).unwrap();
    let err = fit_ridge(&perturbations(masks, vec![0.5; 4]), 1.0).unwrap_err();
    assert!(err.to_string().contains("n >= d' + 1"), "{err}");
}

#[test]
fn execution_modes_are_bit_identical() {
    let masks = sample_masks(9, 5000, 77).unwrap();
    let y: Vec<f64> = linear_targets(&masks, &[0.3, -0.1, 0.0, 0.7, 0.2, -0.6, 0.1, 0.05, 0.4], 0.0)
        .iter()
        .enumerate()
        .map(|(i, v)| (v + 0.013 * ((i * 7919) % 13) as f64).clamp(0.0, 1.0))
        .collect();
    let p = perturbations(masks, y);
    let seq = fit_ridge_with(&p, 1.0, Execution::Sequential).unwrap();
    let par = fit_ridge_with(&p, 1.0, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn explain_orders_and_breaks_ties() {
    let set = noise_set(4, 1);
    let mut model = dummy_model(vec![0.9, -0.4, 0.6, 0.1]);
    assert_eq!(explain(&set, &model, 2).unwrap().component_ids, [0, 2]);

    let set3 = noise_set(3, 1);
    model.coefficients = vec![0.5, 0.5, 0.1];
    let e = explain(&set3, &model, 2).unwrap();
    assert_eq!(e.component_ids, [0, 1]);
    assert_eq!(e.audio, set3.compose(&[true, true, false]).unwrap());

    model.coefficients = vec![0.2, -0.1, 0.0];
    let e = explain(&set3, &model, 3).unwrap();
    assert_eq!(e.component_ids, [0], "zero is not positive");
}

#[test]
fn no_positive_coefficients_is_flagged() {
    let set = noise_set(3, 1);
    let e = explain(&set, &dummy_model(vec![-0.5, 0.0, -0.1]), 2).unwrap();
    assert!(e.component_ids.is_empty());
    assert!(e.metadata.no_positive_coefficients);
    assert!(e.audio.samples().iter().all(|&s| s == 0.0));
    assert!(explain(&set, &dummy_model(vec![0.1; 2]), 1).is_err());
    assert!(explain(&set, &dummy_model(vec![0.1; 3]), 0).is_err());
}

fn dummy_model(coefficients: Vec<f64>) -> SurrogateModel {
    SurrogateModel {
        coefficients,
        intercept: 0.0,
        lambda: 1.0,
        r_squared: 1.0,
        explained_tag: "t".into(),
        normal_residual: 0.0,
        num_samples: 10,
        rng_seed: 0,
    }
}

fn noise_set(sources: u64, segments: usize) -> ComponentSet {
    let len = 1200;
    let clip = synth::noise(0.5, 8000, len, 999);
    let srcs = (0..sources)
        .map(|k| Source {
            label: format!("s{k}"),
            audio: synth::noise(0.4, 8000, len, 31 * k + 7),
        })
        .collect();
    build_component_set(&clip, srcs, segments).unwrap()
}

#[test]
fn toy_linear_targets_follow_the_analytic_formula() {
    let set = Arc::new(noise_set(3, 2));
    let w = [1.5, -0.5, 0.25, 0.0, 2.0, -1.0];
    let b = -0.75;
    let tagger = ToyLinearTagger::new(set.clone(), w.to_vec(), b).unwrap();
    let masks = sample_masks(6, 300, 3).unwrap();
    let p = score_perturbations(&set, masks.clone(), &tagger, "target", 3, &ScoringOptions::default())
        .unwrap();
    for (row, y) in masks.iter_rows().zip(&p.targets) {
        let z: f64 = b + w.iter().zip(row).filter(|(_, &m)| m).map(|(x, _)| x).sum::<f64>();
        assert!((y - 1.0 / (1.0 + (-z).exp())).abs() <= 1e-6);
    }
    // duplicate masks get duplicate targets
    for i in 0..masks.rows() {
        for j in 0..i {
            if masks.row(i) == masks.row(j) {
                assert_eq!(p.targets[i], p.targets[j]);
            }
        }
    }
}

#[test]
fn dedupe_and_execution_do_not_change_targets() {
    let set = Arc::new(noise_set(2, 3));
    let tagger = ToyLinearTagger::new(set.clone(), vec![0.3, -0.2, 0.9, 0.0, 0.1, -0.4], 0.2).unwrap();
    let masks = sample_masks(6, 400, 19).unwrap();
    let reference = score_perturbations(
        &set,
        masks.clone(),
        &tagger,
        "target",
        19,
        &ScoringOptions {
            dedupe: false,
            execution: Execution::Sequential,
            batch_size: 7,
            ..Default::default()
        },
    )
    .unwrap();
    let fast = score_perturbations(&set, masks, &tagger, "target", 19, &ScoringOptions::default())
        .unwrap();
    assert_eq!(reference, fast);
}

#[test]
fn unknown_tag_is_rejected() {
    let set = Arc::new(noise_set(2, 1));
    let tagger = ToyLinearTagger::new(set.clone(), vec![1.0, 1.0], 0.0).unwrap();
    let masks = sample_masks(2, 10, 0).unwrap();
    let err = score_perturbations(&set, masks, &tagger, "rock", 0, &ScoringOptions::default());
    assert!(err.is_err());
    assert_eq!(tagger.tags(), ["other", "target"]);
}

#[test]
fn exhaustive_masks_recover_weights_through_logit() {
    let set = Arc::new(noise_set(2, 3));
    let w = [0.8, -1.2, 0.0, 2.5, 0.4, -0.3];
    let tagger = ToyLinearTagger::new(set.clone(), w.to_vec(), 0.3).unwrap();
    let options = ScoringOptions {
        link: TargetLink::Logit,
        ..Default::default()
    };
    let p = score_perturbations(&set, enumerate_masks(6).unwrap(), &tagger, "target", 0, &options)
        .unwrap();
    let m = fit_ridge(&p, 0.0).unwrap();
    for (c, t) in m.coefficients.iter().zip(w) {
        assert!((c - t).abs() <= 1e-6, "{c} vs {t}");
    }
    assert!((m.intercept - 0.3).abs() <= 1e-6);
}

#[test]
fn cosine_kernel_weights_the_anchor_highest() {
    let k = SampleWeighting::CosineKernel { width: 0.25 };
    assert_eq!(k.weight(&[true; 4]), 1.0);
    assert!(k.weight(&[true, false, false, false]) < k.weight(&[true, true, true, false]));
    assert_eq!(SampleWeighting::Uniform.weight(&[false; 3]), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normal_equations_match_svd_oracle(
        d in 1usize..8,
        seed in 0u64..10_000,
        lambda in prop_oneof![Just(0.0), 0.01f64..50.0],
        noise in proptest::collection::vec(0.0f64..1.0, 200),
    ) {
        let n = 120 + d;
        let masks = sample_masks(d, n, seed).unwrap();
        let targets: Vec<f64> = (0..n).map(|i| noise[i % noise.len()]).collect();
        let weights: Vec<f64> = (0..n).map(|i| 0.5 + noise[(i * 7) % noise.len()]).collect();
        let p = PerturbationSet::new(masks, targets, weights, seed, "t", TargetLink::Identity).unwrap();
        let m = fit_ridge(&p, lambda).unwrap();
        let (coef, intercept) = ridge_oracle(&p, lambda);
        for (a, b) in m.coefficients.iter().zip(&coef) {
            prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
        }
        prop_assert!((m.intercept - intercept).abs() <= 1e-8);
    }

    #[test]
    fn scaling_targets_scales_coefficients(
        seed in 0u64..10_000,
        scale in 0.05f64..0.95,
        noise in proptest::collection::vec(0.0f64..1.0, 64),
    ) {
        let masks = sample_masks(6, 300, seed).unwrap();
        let y: Vec<f64> = (0..300).map(|i| noise[i % 64]).collect();
        let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let a = fit_ridge(&perturbations(masks.clone(), y), 1.0).unwrap();
        let b = fit_ridge(&perturbations(masks, scaled), 1.0).unwrap();
        for (x, z) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x * scale - z).abs() <= 1e-10);
        }
        prop_assert_eq!(top_positive(&a.coefficients, 3), top_positive(&b.coefficients, 3));
    }
}
