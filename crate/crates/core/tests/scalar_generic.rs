//! The numeric pipeline is generic over the scalar: exercise the f32
//! instantiation end to end alongside the f64 one the CLI uses.

use bgpscope_core::event::parse_event_log;
use bgpscope_core::features::extract_features;
use bgpscope_core::matrix::{BinRange, FeatureMatrix};
use bgpscope_core::selector::{select_features_with_fit, SelectionConfig};
use bgpscope_core::stats::{generate_correlation_features, pearson, significance, standardize_apply, standardize_fit};
use bgpscope_core::svm::{train, KernelParams, TrainConfig};
use bgpscope_core::synth::{generate, preset};

#[test]
fn stats_kernels_work_in_f32() {
    let x: Vec<f32> = vec![1.0, 2.0, 3.0, 4.0, 7.0];
    let y: Vec<f32> = vec![2.0, 4.0, 6.0, 8.0, 14.0];
    let r = pearson(&x, &y).unwrap();
    assert!((r - 1.0).abs() < 1e-6);
    let s = significance(0.5f32, 30, 0.05).unwrap();
    assert!((s.p_value - 0.004_9f32).abs() < 1e-3);
}

#[test]
fn pipeline_math_runs_in_f32() {
    let mut scenario = preset("codered-like").unwrap();
    scenario.duration_bins = 700;
    scenario.anomaly_interval = BinRange::new(500, 599).unwrap();
    let log = bgpscope_core::event::write_event_log(&generate(&scenario).unwrap()).unwrap();
    let events = parse_event_log(&log).unwrap();

    let matrix: FeatureMatrix<f32> =
        extract_features(&events, &scenario.extraction_config()).unwrap();
    let fit = BinRange::new(120, 399).unwrap();
    let (augmented, _) = generate_correlation_features(&matrix, fit, 60, 0.05f32).unwrap();
    let report = select_features_with_fit(
        &augmented,
        fit,
        &SelectionConfig { n_base: 3, n_corr: 2, ..SelectionConfig::default() },
    )
    .unwrap();
    assert_eq!(report.selected_base.len(), 3);

    let selected = augmented.select_columns(&report.selected_columns()).unwrap();
    let params = standardize_fit(&selected, fit).unwrap();
    let standardized = standardize_apply(&selected, &params).unwrap();
    let rows = standardized.rows_in(fit).unwrap();
    let (model, diagnostics) = train(
        &rows,
        0.1f32,
        KernelParams::rbf(0.125f32).unwrap(),
        &TrainConfig::default(),
    )
    .unwrap();
    assert!(diagnostics.converged);

    // The anomaly region scores lower than the training region on average.
    let decisions: Vec<f32> = (0..standardized.nrows())
        .map(|r| model.decision(standardized.row(r)).unwrap())
        .collect();
    let mean = |v: &[f32]| v.iter().sum::<f32>() / v.len() as f32;
    let fit_scores: Vec<f32> = fit.iter().map(|r| decisions[r]).collect();
    let anomaly_scores: Vec<f32> = scenario.anomaly_interval.iter().map(|r| decisions[r]).collect();
    assert!(mean(&anomaly_scores) < mean(&fit_scores));
}
