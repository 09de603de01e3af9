//! One-step archery: estimate the expected score of each launch angle under
//! a different wind from shots taken in the training wind.

use oee_core::envs::{Archery, ArcherySpec};
use oee_core::ratio::{train_zeta_pair, ModelClass, TrainConfig};
use oee_core::report::{monte_carlo_return, EstimatorKind, EvaluationReport, CSV_HEADER};
use oee_core::rng::label;
use oee_core::zeta::{oee_return, simulated_baseline, ZetaEstimator};
use oee_core::{collect_dataset, Action, DiscountSpec, Error, FeatureEncoding, Policy, Result, Source};

use super::gridworld::role_of;
use super::{
    cell_seed, discount_spec, f, mean_std, train_config, write_csv, write_manifest, ExperimentConfig, DISCOUNT_KEYS,
    EXPERIMENT_KEYS, TRAIN_KEYS,
};
use crate::config::Config;
use crate::plot::{emit_svg_lineplot, FigureSpec, Series};

#[derive(Debug, Clone)]
pub struct ArcherySettings {
    pub train_wind: (f64, f64),
    pub test_winds: Vec<(f64, f64)>,
    pub thetas: Vec<f64>,
    /// `(weight, mean, std)` components of the angle distribution used to
    /// collect data.
    pub behavior: Vec<(f64, f64, f64)>,
    pub samples: usize,
    /// Angles whose behavior density is below this fraction of the peak are
    /// flagged as sparse.
    pub sparse_fraction: f64,
    pub train: TrainConfig,
    pub discount: DiscountSpec,
}

const ARCHERY_KEYS: &[&str] = &[
    "train_wind",
    "test_winds",
    "thetas",
    "behavior",
    "samples",
    "sparse_fraction",
];

/// Parses `a:b` pairs separated by commas.
fn pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|p| {
            let (a, b) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Argument(format!("expected mean:std, got {p:?}")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Argument(format!("bad number {s:?}")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

/// Parses `w:m:s` triples separated by commas.
fn triples(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    text.split(',')
        .map(|p| {
            let v: Vec<f64> = p
                .split(':')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Argument(format!("bad mixture component {p:?}")))?;
            match v[..] {
                [w, m, s] if w > 0.0 && s > 0.0 => Ok((w, m, s)),
                _ => Err(Error::Argument(format!("expected weight:mean:std, got {p:?}"))),
            }
        })
        .collect()
}

pub fn archery_train_defaults() -> TrainConfig {
    TrainConfig {
        class: ModelClass::Mlp { hidden: [16, 16, 16] },
        batch_size: 512,
        iterations: 4000,
        lr: 0.03,
        lambda: 0.01,
        eval_every: 500,
        ..TrainConfig::mlp()
    }
}

impl ArcherySettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.check_known(&[
            ("experiment", EXPERIMENT_KEYS),
            ("archery", ARCHERY_KEYS),
            ("train", TRAIN_KEYS),
            ("discount", DISCOUNT_KEYS),
        ])?;
        let s = "archery";
        let default_thetas: Vec<f64> = (1..=15).map(|i| 0.1 * i as f64).collect();
        let st = ArcherySettings {
            train_wind: pairs(cfg.str_or(s, "train_wind", "4:2"))?[0],
            test_winds: pairs(cfg.str_or(s, "test_winds", "2:1,3:1,4:1"))?,
            thetas: cfg.list_or(s, "thetas", &default_thetas)?,
            behavior: triples(cfg.str_or(s, "behavior", "0.5:0.2:0.12,0.5:1.0:0.2"))?,
            samples: cfg.usize_or(s, "samples", 5000)?,
            sparse_fraction: cfg.f64_or(s, "sparse_fraction", 0.1)?,
            train: train_config(cfg, archery_train_defaults())?,
            discount: discount_spec(cfg, DiscountSpec::new(1.0, 1, 2000)?)?,
        };
        ArcherySpec::new(st.train_wind.0, st.train_wind.1)?;
        for (m, s) in &st.test_winds {
            ArcherySpec::new(*m, *s)?;
        }
        let range = 0.0..=std::f64::consts::FRAC_PI_2;
        if st.thetas.is_empty() || !st.thetas.iter().all(|t| range.contains(t)) {
            return Err(Error::Argument("angles must lie in [0, pi/2]".into()));
        }
        if st.samples == 0 {
            return Err(Error::Argument("sample count must be positive".into()));
        }
        Ok(st)
    }

    pub fn behavior_policy(&self) -> Policy {
        Policy::GaussianMixture {
            components: self.behavior.clone(),
            low: 0.0,
            high: std::f64::consts::FRAC_PI_2,
        }
    }

    /// Unclipped density of the behavior angle distribution.
    pub fn behavior_density(&self, theta: f64) -> f64 {
        let total: f64 = self.behavior.iter().map(|c| c.0).sum();
        self.behavior
            .iter()
            .map(|(w, m, s)| {
                let z = (theta - m) / s;
                w / total * (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum()
    }

    pub fn sparse(&self, theta: f64) -> bool {
        let peak = self
            .thetas
            .iter()
            .chain(self.behavior.iter().map(|c| &c.1))
            .map(|t| self.behavior_density(*t))
            .fold(0.0, f64::max);
        self.behavior_density(theta) < self.sparse_fraction * peak
    }
}

#[derive(Debug, Clone)]
pub struct ArcheryRow {
    pub wind: (f64, f64),
    pub theta: f64,
    pub sparse: bool,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, Default)]
pub struct ArcheryResults {
    pub rows: Vec<ArcheryRow>,
}

impl ArcheryResults {
    pub fn select(&self, wind: (f64, f64), kind: EstimatorKind) -> Vec<&ArcheryRow> {
        self.rows
            .iter()
            .filter(|r| r.wind == wind && r.report.estimator == kind)
            .collect()
    }
}

pub fn run_archery_experiment(cfg: &ExperimentConfig) -> Result<ArcheryResults> {
    let st = ArcherySettings::from_config(&cfg.raw)?;
    let spec_tr = ArcherySpec::new(st.train_wind.0, st.train_wind.1)?;
    let env_tr = Archery::new(spec_tr)?;
    let behavior = st.behavior_policy();
    let mut res = ArcheryResults::default();
    for seed in &cfg.seeds {
        let data_tr = collect_dataset(
            &env_tr,
            &behavior,
            1,
            st.samples,
            Source::Train,
            cell_seed(*seed, &[label::DATA_TRAIN]),
        )?;
        for (w, (m, s)) in st.test_winds.iter().enumerate() {
            let spec_te = ArcherySpec::new(*m, *s)?;
            let env_te = Archery::new(spec_te)?;
            let base = cell_seed(*seed, &[w as u64]);
            let data_te = collect_dataset(
                &env_te,
                &behavior,
                1,
                st.samples,
                Source::Test,
                cell_seed(base, &[label::DATA_TEST]),
            )?;
            let tcfg = TrainConfig {
                seed: cell_seed(base, &[label::INIT]),
                ..st.train.clone()
            };
            let (sas, sa) = train_zeta_pair(&data_te, &data_tr, &tcfg, FeatureEncoding::RAW)?;
            let zeta = ZetaEstimator::learned(sas, sa, 1, oee_core::ActionSpec::Continuous(1))?;
            for (j, theta) in st.thetas.iter().enumerate() {
                let policy = Policy::Constant(Action::Continuous(vec![*theta]));
                let cell = cell_seed(base, &[label::EVAL, j as u64]);
                let s_tr = cell_seed(cell, &[0]);
                let s_te = cell_seed(cell, &[1]);
                let reports = [
                    monte_carlo_return(&env_te, &policy, &st.discount, s_te)?,
                    simulated_baseline(&env_tr, &policy, &st.discount, s_tr)?,
                    oee_return(&env_tr, &policy, &zeta, &st.discount, s_tr)?,
                ];
                let sparse = st.sparse(*theta);
                for mut report in reports {
                    report.seed = *seed;
                    let report = report.with_delta(*theta);
                    res.rows.push(ArcheryRow {
                        wind: (*m, *s),
                        theta: *theta,
                        sparse,
                        report,
                    });
                }
            }
            log::info!("archery wind N({m}, {s}) seed {seed} done");
        }
    }
    write_outputs(cfg, &st, &res)?;
    Ok(res)
}

fn write_outputs(cfg: &ExperimentConfig, st: &ArcherySettings, res: &ArcheryResults) -> Result<()> {
    let dir = &cfg.out;
    let mut files = Vec::new();
    let rows: Vec<String> = res
        .rows
        .iter()
        .map(|r| format!("{},{},{},{}", r.wind.0, r.wind.1, r.sparse, r.report.csv_row()))
        .collect();
    // The delta column holds the launch angle.
    let header = format!("wind_mean,wind_std,sparse,{}", CSV_HEADER.replace("delta", "theta"));
    files.push(write_csv(dir, "archery.csv", &header, &rows)?);
    for (k, wind) in st.test_winds.iter().enumerate() {
        let mut series = Vec::new();
        for kind in [EstimatorKind::TrueValue, EstimatorKind::Simulated, EstimatorKind::Oee] {
            let rows = res.select(*wind, kind);
            let mut points = Vec::new();
            let mut band = Vec::new();
            for theta in &st.thetas {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.theta == *theta)
                    .map(|r| r.report.mean)
                    .collect();
                let (m, s) = mean_std(&v);
                points.push((*theta, m));
                band.push((m - s, m + s));
            }
            series.push(Series {
                name: kind.to_string(),
                role: role_of(kind),
                points,
                band: Some(band),
            });
        }
        let name = format!("archery_{k}.svg");
        emit_svg_lineplot(&FigureSpec {
            title: format!(
                "wind N({}, {}) from N({}, {})",
                wind.0, wind.1, st.train_wind.0, st.train_wind.1
            ),
            x_label: "theta (rad)".into(),
            y_label: "expected score".into(),
            series,
            path: dir.join(&name),
        })?;
        files.push(name);
    }
    let sparse: Vec<String> = st.thetas.iter().filter(|t| st.sparse(**t)).map(|t| f(*t)).collect();
    if !sparse.is_empty() {
        log::warn!("few training shots near angles {}", sparse.join(", "));
    }
    write_manifest(cfg, &files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_wind_lists_and_mixtures() {
        assert_eq!(pairs("2:1, 3:1").unwrap(), vec![(2.0, 1.0), (3.0, 1.0)]);
        assert!(pairs("2").is_err());
        assert_eq!(triples("1:0.2:0.1").unwrap(), vec![(1.0, 0.2, 0.1)]);
        assert!(triples("1:0.2").is_err());
        assert!(triples("1:0.2:-1").is_err());
    }

    #[test]
    fn default_behavior_leaves_a_gap_near_half_a_radian() {
        let st = ArcherySettings::from_config(&Config::default()).unwrap();
        assert!(st.sparse(0.5));
        assert!(!st.sparse(0.2));
        assert!(!st.sparse(1.0));
    }
}
