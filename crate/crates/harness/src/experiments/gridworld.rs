//! Slip-gridworld experiments: error of the learned transition ratio against
//! the exact one as the sample size grows, and a sweep over the policy
//! family comparing OEE with the baselines.

use oee_core::envs::gridworld::{value_iteration_expert, Gridworld, GridworldSpec, N_ACTIONS};
use oee_core::ratio::{train_zeta_pair, TrainConfig};
use oee_core::report::monte_carlo_return;
use oee_core::report::{EstimatorKind, EvaluationReport, CSV_HEADER};
use oee_core::rng::label;
use oee_core::zeta::{
    is_ope_baseline, mle_baseline, oee_return, simulated_baseline, zeta_value, MleTemplate, ZetaEstimator,
};
use oee_core::{
    collect_dataset, Action, DiscountSpec, Error, FeatureEncoding, Policy, Result, Source, TransitionDataset,
};

use super::{
    cell_seed, discount_spec, f, mean_std, train_config, write_csv, write_manifest, ExperimentConfig, DISCOUNT_KEYS,
    EXPERIMENT_KEYS, TRAIN_KEYS,
};
use crate::config::Config;
use crate::plot::{emit_svg_lineplot, ColorRole, FigureSpec, Series};

#[derive(Debug, Clone)]
pub struct GridworldSettings {
    pub sides: Vec<usize>,
    pub slip_train: f64,
    pub slip_test: f64,
    /// Sample sizes as powers of ten.
    pub log10_sizes: Vec<f64>,
    pub deltas: Vec<f64>,
    pub delta_collect: f64,
    pub collect_horizon: usize,
    /// Compute the ratio-error curve.
    pub error_curve: bool,
    /// Estimators evaluated in the policy sweep; empty skips the sweep.
    pub estimators: Vec<EstimatorKind>,
    /// Behavior mixtures for the separate importance-sampling study.
    pub is_behavior_deltas: Vec<f64>,
    pub is_samples: usize,
    pub alpha: f64,
    pub train: TrainConfig,
    pub discount: DiscountSpec,
}

const GRID_KEYS: &[&str] = &[
    "sides",
    "slip_train",
    "slip_test",
    "log10_sizes",
    "deltas",
    "delta_collect",
    "collect_horizon",
    "error_curve",
    "estimators",
    "is_behavior_deltas",
    "is_samples",
    "alpha",
];

impl GridworldSettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.check_known(&[
            ("experiment", EXPERIMENT_KEYS),
            ("gridworld", GRID_KEYS),
            ("train", TRAIN_KEYS),
            ("discount", DISCOUNT_KEYS),
        ])?;
        let s = "gridworld";
        let estimators = match cfg.get(s, "estimators") {
            None => vec![
                EstimatorKind::TrueValue,
                EstimatorKind::Simulated,
                EstimatorKind::Oee,
                EstimatorKind::Oracle,
                EstimatorKind::Is,
                EstimatorKind::Mle,
            ],
            Some("none") => Vec::new(),
            Some(v) => v.split(',').map(|e| e.trim().parse()).collect::<Result<Vec<_>>>()?,
        };
        let settings = GridworldSettings {
            sides: cfg.list_or(s, "sides", &[10])?,
            slip_train: cfg.f64_or(s, "slip_train", 0.3)?,
            slip_test: cfg.f64_or(s, "slip_test", 0.1)?,
            log10_sizes: cfg.list_or(s, "log10_sizes", &[3.0, 3.5, 4.0, 4.5, 5.0, 5.5])?,
            deltas: cfg.list_or(s, "deltas", &[0.1, 0.5, 0.9])?,
            delta_collect: cfg.f64_or(s, "delta_collect", 0.5)?,
            collect_horizon: cfg.usize_or(s, "collect_horizon", 200)?,
            error_curve: cfg.bool_or(s, "error_curve", true)?,
            estimators,
            is_behavior_deltas: cfg.list_or(s, "is_behavior_deltas", &[])?,
            is_samples: cfg.usize_or(s, "is_samples", 20_000)?,
            alpha: cfg.f64_or(s, "alpha", 1.0)?,
            train: train_config(cfg, TrainConfig::tabular())?,
            discount: discount_spec(cfg, DiscountSpec::new(0.99, 200, 2000)?)?,
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |d: &f64| (0.0..=1.0).contains(d);
        if !self.deltas.iter().all(in_unit)
            || !in_unit(&self.delta_collect)
            || !self.is_behavior_deltas.iter().all(in_unit)
        {
            return Err(Error::Argument("mixture weights must lie in [0, 1]".into()));
        }
        if self.sides.is_empty() || self.log10_sizes.is_empty() {
            return Err(Error::Argument("grid sides and sample sizes must be nonempty".into()));
        }
        for side in &self.sides {
            GridworldSpec::new(*side, self.slip_train)?;
            GridworldSpec::new(*side, self.slip_test)?;
        }
        Ok(())
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        self.log10_sizes
            .iter()
            .map(|e| 10f64.powf(*e).round() as usize)
            .collect()
    }

    fn needs_learning(&self) -> bool {
        self.error_curve
            || self
                .estimators
                .iter()
                .any(|e| matches!(e, EstimatorKind::Oee | EstimatorKind::Is | EstimatorKind::Mle))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaErrorRow {
    pub side: usize,
    pub n: usize,
    pub seed: u64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub side: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsRow {
    pub side: usize,
    pub seed: u64,
    pub behavior_delta: f64,
    pub target_delta: f64,
    pub mean: f64,
    pub ess: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GridworldResults {
    pub errors: Vec<ZetaErrorRow>,
    pub sweep: Vec<SweepRow>,
    pub is_rows: Vec<IsRow>,
}

impl GridworldResults {
    /// Sweep reports for one grid, estimator and mixture weight, in seed order.
    pub fn reports(&self, side: usize, kind: EstimatorKind, delta: f64) -> Vec<&EvaluationReport> {
        self.sweep
            .iter()
            .filter(|r| r.side == side && r.report.estimator == kind && r.report.delta == Some(delta))
            .map(|r| &r.report)
            .collect()
    }
}

/// Mean absolute difference between the estimated and exact ratio over every
/// `(s, a, s')` with positive training probability.
pub fn zeta_l1_error(est: &ZetaEstimator, train: &GridworldSpec, test: &GridworldSpec) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for c in train.cells() {
        let s = train.state_of(c);
        for a in 0..N_ACTIONS {
            for (n, p) in train.distribution(c, a)? {
                if p <= 0.0 {
                    continue;
                }
                let s_next = train.state_of(n);
                let truth = test.transition_prob(c, a, n)? / p;
                let got = zeta_value(est, &s, &Action::Discrete(a), &s_next)?;
                total += (got - truth).abs();
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

struct Learned {
    zeta: ZetaEstimator,
    data_te: TransitionDataset,
}

fn error_curve(
    st: &GridworldSettings,
    seed: u64,
    side: usize,
    spec_tr: GridworldSpec,
    spec_te: GridworldSpec,
    behavior: &Policy,
    rows: &mut Vec<ZetaErrorRow>,
) -> Result<Learned> {
    let sizes = st.sample_sizes();
    let n_max = *sizes.iter().max().unwrap();
    let base = cell_seed(seed, &[side as u64]);
    let env_tr = Gridworld::new(spec_tr)?;
    let env_te = Gridworld::new(spec_te)?;
    let data_tr = collect_dataset(
        &env_tr,
        behavior,
        st.collect_horizon,
        n_max,
        Source::Train,
        cell_seed(base, &[label::DATA_TRAIN]),
    )?;
    let data_te = collect_dataset(
        &env_te,
        behavior,
        st.collect_horizon,
        n_max,
        Source::Test,
        cell_seed(base, &[label::DATA_TEST]),
    )?;
    let mut last = None;
    for (i, n) in sizes.iter().enumerate() {
        let cfg = TrainConfig {
            seed: cell_seed(base, &[label::TRAIN_SA, i as u64]),
            ..st.train.clone()
        };
        let (sas, sa) = train_zeta_pair(&data_te.prefix(*n), &data_tr.prefix(*n), &cfg, FeatureEncoding::RAW)?;
        let zeta = ZetaEstimator::learned(sas, sa, 2, env_tr_action_spec())?;
        if st.error_curve {
            let error = zeta_l1_error(&zeta, &spec_tr, &spec_te)?;
            log::info!("gridworld {side}x{side} seed {seed} n {n}: zeta L1 error {error:.4}");
            rows.push(ZetaErrorRow {
                side,
                n: *n,
                seed,
                error,
            });
        }
        if *n == n_max {
            last = Some(zeta);
        }
    }
    Ok(Learned {
        zeta: last.expect("largest sample size is in the grid"),
        data_te,
    })
}

fn env_tr_action_spec() -> oee_core::ActionSpec {
    oee_core::ActionSpec::Discrete(N_ACTIONS)
}

/// Policy sweep for one seed and grid size.
#[allow(clippy::too_many_arguments)]
fn sweep(
    st: &GridworldSettings,
    seed: u64,
    side: usize,
    spec_tr: GridworldSpec,
    spec_te: GridworldSpec,
    expert: &Policy,
    behavior: &Policy,
    learned: Option<&Learned>,
    out: &mut Vec<SweepRow>,
) -> Result<()> {
    let env_tr = Gridworld::new(spec_tr)?;
    let env_te = Gridworld::new(spec_te)?;
    let oracle = ZetaEstimator::gridworld_oracle(spec_tr, spec_te);
    let spec = &st.discount;
    for (j, delta) in st.deltas.iter().enumerate() {
        let policy = Policy::grid_mixture(*delta, expert.clone())?;
        let base = cell_seed(seed, &[side as u64, label::EVAL, j as u64]);
        // Estimators that roll out the training environment share streams.
        let s_tr = cell_seed(base, &[0]);
        let s_te = cell_seed(base, &[1]);
        let s_mle = cell_seed(base, &[2]);
        for kind in &st.estimators {
            let report = match kind {
                EstimatorKind::TrueValue => monte_carlo_return(&env_te, &policy, spec, s_te)?,
                EstimatorKind::Simulated => simulated_baseline(&env_tr, &policy, spec, s_tr)?,
                EstimatorKind::Oracle => oee_return(&env_tr, &policy, &oracle, spec, s_tr)?,
                EstimatorKind::Oee => {
                    let l = learned.ok_or_else(|| Error::Argument("OEE needs a learned ratio".into()))?;
                    oee_return(&env_tr, &policy, &l.zeta, spec, s_tr)?
                }
                EstimatorKind::Is => {
                    let l = learned.ok_or_else(|| Error::Argument("IS needs test data".into()))?;
                    is_ope_baseline(&l.data_te, &policy, behavior, spec)?
                }
                EstimatorKind::Mle => {
                    let l = learned.ok_or_else(|| Error::Argument("MLE needs test data".into()))?;
                    let template = MleTemplate::Gridworld {
                        spec: spec_te,
                        alpha: st.alpha,
                    };
                    mle_baseline(&l.data_te, &template, &policy, spec, s_mle)?
                }
            };
            let mut report = report.with_delta(*delta);
            report.seed = seed;
            log::info!(
                "gridworld {side}x{side} seed {seed} delta {delta}: {} {:.3}",
                report.estimator,
                report.mean
            );
            out.push(SweepRow { side, report });
        }
    }
    Ok(())
}

fn is_study(
    st: &GridworldSettings,
    seed: u64,
    side: usize,
    spec_te: GridworldSpec,
    expert: &Policy,
    out: &mut Vec<IsRow>,
) -> Result<()> {
    let env_te = Gridworld::new(spec_te)?;
    for (b, db) in st.is_behavior_deltas.iter().enumerate() {
        let behavior = Policy::grid_mixture(*db, expert.clone())?;
        let data = collect_dataset(
            &env_te,
            &behavior,
            st.collect_horizon,
            st.is_samples,
            Source::Test,
            cell_seed(seed, &[side as u64, label::DATA_TEST, 100 + b as u64]),
        )?;
        // Keep whole episodes only.
        let mut trajectories = data.trajectories();
        if trajectories.len() > 1 {
            trajectories.pop();
        }
        let mut whole = TransitionDataset::new(data.state_dim, data.action_spec, Source::Test);
        whole.seed = data.seed;
        whole.behavior = data.behavior.clone();
        whole.records = trajectories.into_iter().flat_map(|t| t.transitions).collect();
        for dt in &st.deltas {
            let target = Policy::grid_mixture(*dt, expert.clone())?;
            let r = is_ope_baseline(&whole, &target, &behavior, &st.discount)?;
            out.push(IsRow {
                side,
                seed,
                behavior_delta: *db,
                target_delta: *dt,
                mean: r.mean,
                ess: r.ess,
                n: r.n(),
            });
        }
    }
    Ok(())
}

pub fn run_gridworld_experiment(cfg: &ExperimentConfig) -> Result<GridworldResults> {
    let st = GridworldSettings::from_config(&cfg.raw)?;
    let mut results = GridworldResults::default();
    for side in &st.sides {
        let spec_tr = GridworldSpec::new(*side, st.slip_train)?;
        let spec_te = GridworldSpec::new(*side, st.slip_test)?;
        let (expert, _) = value_iteration_expert(&spec_tr, st.discount.gamma.min(0.999_999), 1e-10)?;
        let behavior = Policy::grid_mixture(st.delta_collect, expert.clone())?;
        for seed in &cfg.seeds {
            let learned = if st.needs_learning() {
                Some(error_curve(
                    &st,
                    *seed,
                    *side,
                    spec_tr,
                    spec_te,
                    &behavior,
                    &mut results.errors,
                )?)
            } else {
                None
            };
            sweep(
                &st,
                *seed,
                *side,
                spec_tr,
                spec_te,
                &expert,
                &behavior,
                learned.as_ref(),
                &mut results.sweep,
            )?;
            is_study(&st, *seed, *side, spec_te, &expert, &mut results.is_rows)?;
        }
    }
    write_outputs(cfg, &st, &results)?;
    Ok(results)
}

fn write_outputs(cfg: &ExperimentConfig, st: &GridworldSettings, res: &GridworldResults) -> Result<()> {
    let dir = &cfg.out;
    let mut files = Vec::new();
    if !res.errors.is_empty() {
        let rows: Vec<String> = res
            .errors
            .iter()
            .map(|r| format!("{},{},{},{}", r.side, r.n, r.seed, f(r.error)))
            .collect();
        files.push(write_csv(dir, "zeta_error.csv", "side,n,seed,l1_error", &rows)?);
        let mut series = Vec::new();
        for (i, side) in st.sides.iter().enumerate() {
            let mut points = Vec::new();
            let mut band = Vec::new();
            for n in st.sample_sizes() {
                let errs: Vec<f64> = res
                    .errors
                    .iter()
                    .filter(|r| r.side == *side && r.n == n)
                    .map(|r| r.error)
                    .collect();
                let (m, s) = mean_std(&errs);
                points.push(((n as f64).log10(), m));
                band.push((m - s, m + s));
            }
            series.push(Series {
                name: format!("{side}x{side}"),
                role: ColorRole::Other(i),
                points,
                band: Some(band),
            });
        }
        emit_svg_lineplot(&FigureSpec {
            title: "Transition ratio error".into(),
            x_label: "log10 samples".into(),
            y_label: "mean |zeta_hat - zeta|".into(),
            series,
            path: dir.join("zeta_error.svg"),
        })?;
        files.push("zeta_error.svg".into());
    }
    for side in &st.sides {
        let rows: Vec<String> = res
            .sweep
            .iter()
            .filter(|r| r.side == *side)
            .map(|r| r.report.csv_row())
            .collect();
        if rows.is_empty() {
            continue;
        }
        let name = format!("delta_sweep_{side}.csv");
        files.push(write_csv(dir, &name, CSV_HEADER, &rows)?);
        let mut series = Vec::new();
        for kind in &st.estimators {
            let mut points = Vec::new();
            let mut band = Vec::new();
            for d in &st.deltas {
                let means: Vec<f64> = res.reports(*side, *kind, *d).iter().map(|r| r.mean).collect();
                let (m, s) = mean_std(&means);
                points.push((*d, m));
                band.push((m - s, m + s));
            }
            series.push(Series {
                name: kind.to_string(),
                role: role_of(*kind),
                points,
                band: Some(band),
            });
        }
        let svg = format!("delta_sweep_{side}.svg");
        emit_svg_lineplot(&FigureSpec {
            title: format!("{side}x{side} gridworld"),
            x_label: "delta".into(),
            y_label: "average return".into(),
            series,
            path: dir.join(&svg),
        })?;
        files.push(svg);
    }
    if !res.is_rows.is_empty() {
        let rows: Vec<String> = res
            .is_rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    r.side,
                    r.seed,
                    r.behavior_delta,
                    r.target_delta,
                    f(r.mean),
                    f(r.ess),
                    r.n
                )
            })
            .collect();
        files.push(write_csv(
            dir,
            "is_ess.csv",
            "side,seed,behavior_delta,target_delta,mean,ess,n",
            &rows,
        )?);
    }
    write_manifest(cfg, &files)
}

pub fn role_of(kind: EstimatorKind) -> ColorRole {
    match kind {
        EstimatorKind::Oee => ColorRole::Ours,
        EstimatorKind::TrueValue => ColorRole::Truth,
        EstimatorKind::Simulated => ColorRole::Simulator,
        EstimatorKind::Is => ColorRole::Is,
        EstimatorKind::Mle => ColorRole::Mle,
        EstimatorKind::Oracle => ColorRole::Oracle,
    }
}
