//! Cart-pole under changed gravity: policies mixing a CEM expert with
//! uniform actions, evaluated in each test gravity from training-gravity
//! rollouts.

use oee_core::envs::{Cartpole, CartpoleSpec};
use oee_core::ratio::{train_zeta_pair, ModelClass, TrainConfig};
use oee_core::report::{monte_carlo_return, EstimatorKind, EvaluationReport, CSV_HEADER};
use oee_core::rng::label;
use oee_core::zeta::{is_ope_baseline, mle_baseline, oee_return, simulated_baseline, MleTemplate, ZetaEstimator};
use oee_core::{collect_dataset, ActionSpec, DiscountSpec, Error, FeatureEncoding, Policy, Result, Source};

use super::gridworld::role_of;
use super::{
    cell_seed, discount_spec, mean_std, train_config, write_csv, write_manifest, ExperimentConfig, DISCOUNT_KEYS,
    EXPERIMENT_KEYS, TRAIN_KEYS,
};
use crate::cem::{cem_train_expert, CemConfig};
use crate::config::Config;
use crate::plot::{emit_svg_lineplot, FigureSpec, Series};

#[derive(Debug, Clone)]
pub struct CartpoleSettings {
    pub train_gravity: f64,
    pub test_gravities: Vec<f64>,
    pub noise_std: f64,
    pub deltas: Vec<f64>,
    pub delta_collect: f64,
    pub samples: usize,
    pub estimators: Vec<EstimatorKind>,
    pub encoding: FeatureEncoding,
    pub cem: CemConfig,
    pub train: TrainConfig,
    pub discount: DiscountSpec,
}

const CARTPOLE_KEYS: &[&str] = &[
    "train_gravity",
    "test_gravities",
    "noise_std",
    "deltas",
    "delta_collect",
    "samples",
    "estimators",
    "cem_population",
    "cem_elite",
    "cem_generations",
];

pub fn cartpole_train_defaults() -> TrainConfig {
    TrainConfig {
        class: ModelClass::Mlp { hidden: [32, 32, 32] },
        batch_size: 256,
        iterations: 3000,
        lr: 0.01,
        lambda: 0.1,
        eval_every: 500,
        ..TrainConfig::mlp()
    }
}

impl CartpoleSettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.check_known(&[
            ("experiment", EXPERIMENT_KEYS),
            ("cartpole", CARTPOLE_KEYS),
            ("train", TRAIN_KEYS),
            ("discount", DISCOUNT_KEYS),
        ])?;
        let s = "cartpole";
        let estimators = match cfg.get(s, "estimators") {
            None => vec![
                EstimatorKind::TrueValue,
                EstimatorKind::Simulated,
                EstimatorKind::Oee,
                EstimatorKind::Is,
                EstimatorKind::Mle,
            ],
            Some(v) => v.split(',').map(|e| e.trim().parse()).collect::<Result<Vec<_>>>()?,
        };
        if estimators.contains(&EstimatorKind::Oracle) {
            return Err(Error::Argument("cart-pole has no exact transition ratio".into()));
        }
        let defaults = CemConfig::default();
        let st = CartpoleSettings {
            train_gravity: cfg.f64_or(s, "train_gravity", 10.0)?,
            test_gravities: cfg.list_or(s, "test_gravities", &[7.5, 10.0, 12.5, 15.0])?,
            noise_std: cfg.f64_or(s, "noise_std", 1e-3)?,
            deltas: cfg.list_or(s, "deltas", &[0.0, 0.25, 0.5, 0.75, 1.0])?,
            delta_collect: cfg.f64_or(s, "delta_collect", 0.5)?,
            samples: cfg.usize_or(s, "samples", 20_000)?,
            estimators,
            encoding: FeatureEncoding {
                one_hot: cfg.bool_or("train", "one_hot", true)?,
                delta_next: cfg.bool_or("train", "delta_next", true)?,
            },
            cem: CemConfig {
                population: cfg.usize_or(s, "cem_population", defaults.population)?,
                elite: cfg.usize_or(s, "cem_elite", defaults.elite)?,
                generations: cfg.usize_or(s, "cem_generations", defaults.generations)?,
                ..defaults
            },
            train: train_config(cfg, cartpole_train_defaults())?,
            discount: discount_spec(cfg, DiscountSpec::new(0.99, 100, 1000)?)?,
        };
        let in_unit = |d: &f64| (0.0..=1.0).contains(d);
        if !st.deltas.iter().all(in_unit) || !in_unit(&st.delta_collect) {
            return Err(Error::Argument("mixture weights must lie in [0, 1]".into()));
        }
        if st.test_gravities.is_empty() || st.deltas.is_empty() || st.samples == 0 {
            return Err(Error::Argument(
                "need test gravities, mixture weights and samples".into(),
            ));
        }
        st.spec(st.train_gravity).validate()?;
        Ok(st)
    }

    pub fn spec(&self, gravity: f64) -> CartpoleSpec {
        CartpoleSpec {
            noise_std: self.noise_std,
            ..CartpoleSpec::with_gravity(gravity)
        }
    }
}

#[derive(Debug, Clone)]
pub struct CartpoleRow {
    pub gravity: f64,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, Default)]
pub struct CartpoleResults {
    pub expert: Option<Policy>,
    pub rows: Vec<CartpoleRow>,
}

impl CartpoleResults {
    pub fn select(&self, gravity: f64, kind: EstimatorKind, delta: f64, seed: u64) -> Option<&EvaluationReport> {
        self.rows
            .iter()
            .find(|r| {
                r.gravity == gravity
                    && r.report.estimator == kind
                    && r.report.delta == Some(delta)
                    && r.report.seed == seed
            })
            .map(|r| &r.report)
    }
}

pub fn run_cartpole_experiment(cfg: &ExperimentConfig) -> Result<CartpoleResults> {
    let st = CartpoleSettings::from_config(&cfg.raw)?;
    let env_tr = Cartpole::new(st.spec(st.train_gravity))?;
    // The expert is trained once, on the first seed, and shared by every run.
    let expert = cem_train_expert(&env_tr, &st.cem, cfg.seeds[0])?;
    let behavior = Policy::cartpole_mixture(st.delta_collect, expert.clone())?;
    let mut res = CartpoleResults {
        expert: Some(expert.clone()),
        rows: Vec::new(),
    };
    let needs_data = st
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Oee | EstimatorKind::Is | EstimatorKind::Mle));
    for seed in &cfg.seeds {
        let data_tr = if needs_data {
            Some(collect_dataset(
                &env_tr,
                &behavior,
                st.discount.horizon,
                st.samples,
                Source::Train,
                cell_seed(*seed, &[label::DATA_TRAIN]),
            )?)
        } else {
            None
        };
        for (g, gravity) in st.test_gravities.iter().enumerate() {
            let env_te = Cartpole::new(st.spec(*gravity))?;
            let base = cell_seed(*seed, &[g as u64]);
            let mut learned = None;
            let mut data_te = None;
            if let Some(data_tr) = &data_tr {
                let te = collect_dataset(
                    &env_te,
                    &behavior,
                    st.discount.horizon,
                    st.samples,
                    Source::Test,
                    cell_seed(base, &[label::DATA_TEST]),
                )?;
                if st.estimators.contains(&EstimatorKind::Oee) {
                    let tcfg = TrainConfig {
                        seed: cell_seed(base, &[label::INIT]),
                        ..st.train.clone()
                    };
                    let (sas, sa) = train_zeta_pair(&te, data_tr, &tcfg, st.encoding)?;
                    for m in [&sas, &sa] {
                        if m.meta.saturation > 0.01 {
                            log::warn!(
                                "gravity {gravity} seed {seed}: {:.1}% of {} ratios at a bound",
                                100.0 * m.meta.saturation,
                                m.domain.tag()
                            );
                        }
                    }
                    learned = Some(ZetaEstimator::learned(sas, sa, 4, ActionSpec::Discrete(2))?);
                }
                data_te = Some(te);
            }
            for (j, delta) in st.deltas.iter().enumerate() {
                let policy = Policy::cartpole_mixture(*delta, expert.clone())?;
                let cell = cell_seed(base, &[label::EVAL, j as u64]);
                let s_tr = cell_seed(cell, &[0]);
                let s_te = cell_seed(cell, &[1]);
                let s_mle = cell_seed(cell, &[2]);
                for kind in &st.estimators {
                    let report = match kind {
                        EstimatorKind::TrueValue => monte_carlo_return(&env_te, &policy, &st.discount, s_te)?,
                        EstimatorKind::Simulated => simulated_baseline(&env_tr, &policy, &st.discount, s_tr)?,
                        EstimatorKind::Oee => {
                            let z = learned.as_ref().expect("trained above");
                            oee_return(&env_tr, &policy, z, &st.discount, s_tr)?
                        }
                        EstimatorKind::Is => {
                            let d = data_te.as_ref().expect("collected above");
                            is_ope_baseline(d, &policy, &behavior, &st.discount)?
                        }
                        EstimatorKind::Mle => {
                            let d = data_te.as_ref().expect("collected above");
                            mle_baseline(d, &MleTemplate::Cartpole(env_te), &policy, &st.discount, s_mle)?
                        }
                        EstimatorKind::Oracle => unreachable!("rejected in settings"),
                    };
                    let mut report = report.with_delta(*delta);
                    report.seed = *seed;
                    log::info!(
                        "cartpole g {gravity} seed {seed} delta {delta}: {} {:.2}",
                        report.estimator,
                        report.mean
                    );
                    res.rows.push(CartpoleRow {
                        gravity: *gravity,
                        report,
                    });
                }
            }
        }
    }
    write_outputs(cfg, &st, &res)?;
    Ok(res)
}

fn write_outputs(cfg: &ExperimentConfig, st: &CartpoleSettings, res: &CartpoleResults) -> Result<()> {
    let dir = &cfg.out;
    let mut files = Vec::new();
    let rows: Vec<String> = res
        .rows
        .iter()
        .map(|r| format!("{},{}", r.gravity, r.report.csv_row()))
        .collect();
    files.push(write_csv(dir, "cartpole.csv", &format!("gravity,{CSV_HEADER}"), &rows)?);
    if let Some(Policy::ExpertLinear { weights, bias }) = &res.expert {
        let w: Vec<String> = weights.iter().map(|v| super::f(*v)).collect();
        files.push(write_csv(
            dir,
            "expert.csv",
            "weights,bias",
            &[format!("{},{}", w.join(" "), super::f(*bias))],
        )?);
    }
    for (k, gravity) in st.test_gravities.iter().enumerate() {
        let mut series = Vec::new();
        for kind in &st.estimators {
            let mut points = Vec::new();
            let mut band = Vec::new();
            for d in &st.deltas {
                let v: Vec<f64> = cfg
                    .seeds
                    .iter()
                    .filter_map(|s| res.select(*gravity, *kind, *d, *s))
                    .map(|r| r.mean)
                    .collect();
                let (m, s) = mean_std(&v);
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
        let name = format!("cartpole_{k}.svg");
        emit_svg_lineplot(&FigureSpec {
            title: format!("gravity {gravity} from {}", st.train_gravity),
            x_label: "delta".into(),
            y_label: "average return".into(),
            series,
            path: dir.join(&name),
        })?;
        files.push(name);
    }
    write_manifest(cfg, &files)
}
