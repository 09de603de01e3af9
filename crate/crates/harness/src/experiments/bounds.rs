//! Tabulates the finite-sample guarantees over a grid of sample sizes.

use oee_core::bounds::{BoundInputs, BoundMode, BoundReport, BOUND_CSV_HEADER};
use oee_core::Result;

use super::{write_csv, write_manifest, ExperimentConfig, EXPERIMENT_KEYS};
use crate::config::Config;
use crate::plot::{emit_svg_lineplot, ColorRole, FigureSpec, Series};

const BOUND_KEYS: &[&str] = &["nu", "mu", "n", "delta", "K", "dinf", "T", "gamma", "R", "modes"];

pub fn bound_grid(cfg: &Config) -> Result<Vec<BoundReport>> {
    cfg.check_known(&[("experiment", EXPERIMENT_KEYS), ("bounds", BOUND_KEYS)])?;
    let s = "bounds";
    let sizes = cfg.list_or(s, "n", &[1e3, 1e4, 1e5, 1e6, 1e7])?;
    let modes: Vec<BoundMode> = cfg
        .str_or(s, "modes", "main,supplementary")
        .split(',')
        .map(|m| m.trim().parse())
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for mode in modes {
        for n in &sizes {
            let inputs = BoundInputs {
                nu: cfg.f64_or(s, "nu", 0.5)?,
                mu: cfg.f64_or(s, "mu", 2.0)?,
                n: *n,
                delta: cfg.f64_or(s, "delta", 0.1)?,
                k: cfg.f64_or(s, "K", 10.0)?,
                d_inf: cfg.f64_or(s, "dinf", 0.2)?,
                horizon: cfg.usize_or(s, "T", 100)?,
                gamma: cfg.f64_or(s, "gamma", 0.99)?,
                reward_bound: cfg.f64_or(s, "R", 1.0)?,
            };
            out.push(BoundReport::compute(inputs, mode)?);
        }
    }
    Ok(out)
}

pub fn run_bounds_experiment(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    let reports = bound_grid(&cfg.raw)?;
    let rows: Vec<String> = reports.iter().map(BoundReport::csv_row).collect();
    let mut files = vec![write_csv(&cfg.out, "bounds.csv", BOUND_CSV_HEADER, &rows)?];
    let mut series = Vec::new();
    for (k, mode) in [BoundMode::Main, BoundMode::Supplementary].into_iter().enumerate() {
        let points: Vec<(f64, f64)> = reports
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| (r.inputs.n.log10(), r.m.log10()))
            .collect();
        if !points.is_empty() {
            series.push(Series {
                name: format!("{mode:?}"),
                role: ColorRole::Other(k),
                points,
                band: None,
            });
        }
    }
    emit_svg_lineplot(&FigureSpec {
        title: "Ratio estimation bound".into(),
        x_label: "log10 n".into(),
        y_label: "log10 M".into(),
        series,
        path: cfg.out.join("bounds.svg"),
    })?;
    files.push("bounds.svg".into());
    write_manifest(cfg, &files)?;
    Ok(reports)
}
