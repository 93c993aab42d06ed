//! Experiment-runner integration: determinism across runs, worker pools,
//! scenario output structure, sweeps, and emission round-trips on miniature
//! datasets.

mod common;

use dendsom::experiment::{
    apply_sweep_value, read_report_json, read_trials_csv, run_experiment, run_sweep,
    write_report_json, write_trials_csv, ExperimentConfig, ModelKind, RunKind, SweepParameter,
};
use dendsom::{DatasetName, Error};

fn mini_config(dir: &std::path::Path, scenario: RunKind) -> ExperimentConfig {
    let mut config = ExperimentConfig::defaults(DatasetName::Mnist, ModelKind::DendSom, scenario);
    config.data_dir = dir.to_path_buf();
    config.n_trials = 2;
    config.base_seed = 7;
    for (k, v) in common::MINI_OVERRIDES {
        config = config.with_override(k, v).unwrap();
    }
    config
}

#[test]
fn classification_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    common::write_mini_mnist(dir.path(), 300, 100, 1);
    let config = mini_config(dir.path(), RunKind::Classification);
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    let acc = |r: &dendsom::TrialReport| -> Vec<f64> {
        r.trials.iter().map(|t| t.accuracy).collect()
    };
    assert_eq!(acc(&a), acc(&b));
    assert_eq!(a.config_hash, b.config_hash);
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.trials[0].seed, 7);
    assert_eq!(a.trials[1].seed, 8);
    // The synthetic blobs are separable; training should beat chance easily.
    assert!(a.mean > 0.5, "mean accuracy {} too low", a.mean);
}

#[test]
fn worker_pool_matches_sequential_results() {
    let dir = tempfile::tempdir().unwrap();
    common::write_mini_mnist(dir.path(), 200, 60, 2);
    let sequential = mini_config(dir.path(), RunKind::Classification);
    let parallel = sequential.with_override("workers", "2").unwrap();
    let a = run_experiment(&sequential).unwrap();
    let b = run_experiment(&parallel).unwrap();
    let acc = |r: &dendsom::TrialReport| -> Vec<f64> {
        r.trials.iter().map(|t| t.accuracy).collect()
    };
    assert_eq!(acc(&a), acc(&b));
    // Trial order is by index regardless of completion order.
    assert_eq!(
        b.trials.iter().map(|t| t.trial).collect::<Vec<_>>(),
        vec![0, 1]
    );
}

#[test]
fn scenario_reports_carry_curve_matrices() {
    let dir = tempfile::tempdir().unwrap();
    common::write_mini_mnist(dir.path(), 400, 100, 3);
    let config = mini_config(dir.path(), RunKind::ClassIl);
    let report = run_experiment(&config).unwrap();
    let scenarios = report.scenarios.as_ref().unwrap();
    assert_eq!(scenarios.len(), 2);
    for s in scenarios {
        assert_eq!(s.accuracy_after_each_task.len(), 5);
        assert!(s.accuracy_after_each_task.iter().all(|r| r.len() == 5));
    }
    let mut buf = Vec::new();
    write_report_json(&report, &mut buf).unwrap();
    assert_eq!(read_report_json(buf.as_slice()).unwrap(), report);
}

#[test]
fn emission_round_trips_and_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    common::write_mini_mnist(dir.path(), 150, 50, 4);
    let config = mini_config(dir.path(), RunKind::Classification);
    let report = run_experiment(&config).unwrap();

    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_trials_csv(&report, &mut csv_a).unwrap();
    write_trials_csv(&report, &mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(read_trials_csv(csv_a.as_slice()).unwrap(), report.trials);

    let mut json_a = Vec::new();
    let mut json_b = Vec::new();
    write_report_json(&report, &mut json_a).unwrap();
    write_report_json(&report, &mut json_b).unwrap();
    assert_eq!(json_a, json_b);
    let parsed = read_report_json(json_a.as_slice()).unwrap();
    assert_eq!(parsed, report);
    // The embedded config alone is enough to rerun the experiment.
    let rerun = run_experiment(&parsed.config).unwrap();
    assert_eq!(
        rerun.trials.iter().map(|t| t.accuracy).collect::<Vec<_>>(),
        report.trials.iter().map(|t| t.accuracy).collect::<Vec<_>>()
    );
}

#[test]
fn sweep_produces_one_report_per_value() {
    let dir = tempfile::tempdir().unwrap();
    common::write_mini_mnist(dir.path(), 150, 50, 5);
    let mut config = mini_config(dir.path(), RunKind::Classification);
    config.n_trials = 1;
    let results = run_sweep(&config, SweepParameter::Alpha0, &[0.2, 0.8]).unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0].0, 0.2);
    assert_eq!(results[0].1.config.alpha0, 0.2);
    assert_eq!(results[1].1.config.alpha0, 0.8);
    // Everything else held at the base config.
    assert_eq!(results[0].1.config.units, config.units);

    // patch_size interacts with tiling: patch == image side gives one map.
    let single = apply_sweep_value(&config, SweepParameter::PatchSize, 8.0).unwrap();
    let report = run_experiment(&single).unwrap();
    assert_eq!(report.config.patch, [8, 8]);
}

#[test]
fn missing_data_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let config = mini_config(dir.path(), RunKind::Classification);
    match run_experiment(&config) {
        Err(Error::Io(_)) => {}
        other => panic!("expected an io error, got {other:?}"),
    }
}
