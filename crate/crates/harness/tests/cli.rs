use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oee(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oee"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn grid_config(source: &str) -> String {
    format!(
        "[env]\nkind = gridworld\nside = 4\nslip_train = 0.3\nslip_test = 0.1\n\
         [policy]\ndelta = 0.5\n[data]\nsamples = 4000\nsource = {source}\n[discount]\nrollouts = 200\n"
    )
}

#[test]
fn bounds_prints_the_estimation_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = oee(
        dir.path(),
        &[
            "bounds", "--nu", "0.5", "--mu", "2", "--n", "1e4", "--delta", "0.1", "--K", "10", "--dinf", "0.2",
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let m: f64 = text
        .lines()
        .find(|l| l.starts_with("M "))
        .and_then(|l| l.split('=').nth(1))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((m - 0.5911).abs() < 5e-5, "{text}");
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oee(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(oee(dir.path(), &["bounds", "--nu", "half"]).status.code(), Some(2));
    assert_eq!(oee(dir.path(), &["no-such-command"]).status.code(), Some(2));
    let o = oee(
        dir.path(),
        &[
            "bounds", "--nu", "2", "--mu", "2", "--n", "1e4", "--delta", "0.1", "--K", "10", "--dinf", "0.2",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let o = oee(
        dir.path(),
        &["zeta", "--sas", "missing", "--sa", "missing", "--data", "missing"],
    );
    assert_eq!(o.status.code(), Some(1));
    fs::write(dir.path().join("bad.cfg"), "[env]\nkind = gridworld\ntypo = 1\n").unwrap();
    let o = oee(dir.path(), &["gen-data", "--config", "bad.cfg", "--out", "d.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_to_evaluation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("grid.cfg"), grid_config("train")).unwrap();
    fs::write(p.join("grid_te.cfg"), grid_config("test")).unwrap();
    let run = |args: &[&str]| {
        let o = oee(p, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    run(&["gen-data", "--config", "grid.cfg", "--seed", "1", "--out", "tr.txt"]);
    run(&["gen-data", "--config", "grid_te.cfg", "--seed", "2", "--out", "te.txt"]);
    assert!(fs::read_to_string(p.join("te.txt")).unwrap().contains("source=test"));
    run(&[
        "train-ratio",
        "--config",
        "grid.cfg",
        "--test",
        "te.txt",
        "--train",
        "tr.txt",
        "--domain",
        "sas",
        "--out",
        "sas.txt",
    ]);
    run(&[
        "train-ratio",
        "--config",
        "grid.cfg",
        "--test",
        "te.txt",
        "--train",
        "tr.txt",
        "--domain",
        "sa",
        "--out",
        "sa.txt",
    ]);
    let zeta = run(&["zeta", "--sas", "sas.txt", "--sa", "sa.txt", "--data", "tr.txt"]);
    let values: Vec<f64> = zeta
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4000);
    assert!(values.iter().all(|z| (0.01..=100.0).contains(z)));

    let mean_of = |text: &str| -> f64 {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        row[header.iter().position(|h| *h == "mean").unwrap()].parse().unwrap()
    };
    let tv = mean_of(&run(&["evaluate", "--config", "grid.cfg", "--estimator", "TrueValue"]));
    let oee_est = mean_of(&run(&[
        "evaluate", "--config", "grid.cfg", "--sas", "sas.txt", "--sa", "sa.txt",
    ]));
    let oracle = mean_of(&run(&["evaluate", "--config", "grid.cfg", "--estimator", "Oracle"]));
    let is = mean_of(&run(&[
        "evaluate",
        "--config",
        "grid.cfg",
        "--estimator",
        "IS",
        "--data",
        "te.txt",
    ]));
    let mle = mean_of(&run(&[
        "evaluate",
        "--config",
        "grid.cfg",
        "--estimator",
        "MLE",
        "--data",
        "te.txt",
    ]));
    for v in [tv, oee_est, oracle, is, mle] {
        assert!(v < 0.0 && v > -200.0, "{v}");
    }
    let o = oee(p, &["evaluate", "--config", "grid.cfg", "--estimator", "IS"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiments_reproduce_from_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("exp.cfg"),
        "[experiment]\nseeds = 0,1\n[gridworld]\nsides = 4\nlog10_sizes = 3,3.5\ndeltas = 0.5\n\
         is_behavior_deltas = 0.5\nis_samples = 2000\n[discount]\nrollouts = 100\n",
    )
    .unwrap();
    for out in ["a", "b"] {
        let o = oee(p, &["experiment", "gridworld", "--config", "exp.cfg", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = fs::read_to_string(p.join("a/manifest.txt")).unwrap();
    assert!(manifest.contains("seeds"));
    let mut compared = 0;
    for entry in fs::read_dir(p.join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(p.join("a").join(&name)).unwrap();
        let b = fs::read(p.join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between reruns");
        compared += 1;
    }
    assert!(compared >= 5);

    let o = oee(
        p,
        &[
            "experiment",
            "gridworld",
            "--config",
            "exp.cfg",
            "--out",
            "c",
            "--seed",
            "5",
        ],
    );
    assert!(o.status.success());
    let c = fs::read_to_string(p.join("c/zeta_error.csv")).unwrap();
    assert!(c
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("5") || l.split(',').nth(2) == Some("6")));
}

#[test]
fn bounds_experiment_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("b.cfg"), "[bounds]\nn = 100,1000,10000\n").unwrap();
    let o = oee(p, &["experiment", "bounds", "--config", "b.cfg", "--out", "out"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(p.join("out/bounds.csv")).unwrap();
    assert!(csv.lines().count() >= 4);
    assert!(p.join("out/bounds.svg").exists());
}
