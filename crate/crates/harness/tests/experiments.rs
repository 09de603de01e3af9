use std::fs;

use oee_core::envs::{Cartpole, CartpoleSpec};
use oee_core::report::EstimatorKind;
use oee_core::Policy;
use oee_harness::cem::{cem_train_expert, mean_return, CemConfig};
use oee_harness::config::parse_config;
use oee_harness::experiments::cartpole::run_cartpole_experiment;
use oee_harness::experiments::gaussian::run_gaussian_experiment;
use oee_harness::experiments::gridworld::run_gridworld_experiment;
use oee_harness::experiments::ExperimentConfig;

fn experiment(text: &str, out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig::from_config(parse_config(text).unwrap(), None)
        .unwrap()
        .with_out(out)
}

fn csv(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn cem_expert_balances_the_pole() {
    let env = Cartpole::new(CartpoleSpec::default()).unwrap();
    let cfg = CemConfig::default();
    let expert = cem_train_expert(&env, &cfg, 0).unwrap();
    assert!(matches!(expert, Policy::ExpertLinear { .. }));
    assert!(mean_return(&env, &expert, 100, 100, 12345).unwrap() >= 95.0);
    assert_eq!(expert, cem_train_expert(&env, &cfg, 0).unwrap());
}

#[test]
fn gridworld_csv_matches_the_returned_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(
        "[experiment]\nkind = gridworld\nseeds = 3\n[gridworld]\nsides = 4\nlog10_sizes = 3,3.5\n\
         deltas = 0.2,0.8\nestimators = TrueValue,Simulated,OEE,Oracle,IS,MLE\n[discount]\nrollouts = 100\n",
        dir.path(),
    );
    let res = run_gridworld_experiment(&cfg).unwrap();

    let (_, rows) = csv(&dir.path().join("zeta_error.csv"));
    assert_eq!(rows.len(), res.errors.len());
    for (row, e) in rows.iter().zip(&res.errors) {
        assert_eq!(row[1].parse::<usize>().unwrap(), e.n);
        assert_eq!(row[3].parse::<f64>().unwrap(), e.error);
    }

    let (header, rows) = csv(&dir.path().join("delta_sweep_4.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), res.sweep.len());
    for (row, s) in rows.iter().zip(&res.sweep) {
        let kind: EstimatorKind = row[col("estimator")].parse().unwrap();
        assert_eq!(kind, s.report.estimator);
        assert_eq!(row[col("mean")].parse::<f64>().unwrap(), s.report.mean);
    }
    for name in ["zeta_error.svg", "delta_sweep_4.svg", "manifest.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn small_gaussian_run_reports_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(
        "[experiment]\nkind = gaussian\nseeds = 0,1\n[gaussian]\nsizes = 200,400\np_means = 3,4\n\
         [train]\niterations = 300\neval_every = 100\n",
        dir.path(),
    );
    let res = run_gaussian_experiment(&cfg).unwrap();
    // two numerators plus the control pair, two sizes, two seeds
    assert_eq!(res.rows.len(), 3 * 2 * 2);
    assert!(res.rows.iter().all(|r| r.mae.is_finite() && r.mae >= 0.0));
    let (_, rows) = csv(&dir.path().join("mae.csv"));
    assert_eq!(rows.len(), res.rows.len());
}

#[test]
fn small_cartpole_run_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(
        "[experiment]\nkind = cartpole\nseeds = 0\n[cartpole]\ntest_gravities = 10,15\ndeltas = 0,1\nsamples = 2000\n\
         [train]\niterations = 200\n[discount]\nrollouts = 50\n",
        dir.path(),
    );
    let res = run_cartpole_experiment(&cfg).unwrap();
    assert_eq!(res.rows.len(), 2 * 2 * 5);
    for kind in [
        EstimatorKind::TrueValue,
        EstimatorKind::Oee,
        EstimatorKind::Is,
        EstimatorKind::Mle,
    ] {
        assert!(res.select(15.0, kind, 1.0, 0).is_some());
    }
    let (_, rows) = csv(&dir.path().join("cartpole.csv"));
    assert_eq!(rows.len(), res.rows.len());
    assert!(dir.path().join("expert.csv").exists());
}
