//! Density-ratio recovery between one-dimensional Gaussians.

use oee_core::envs::{gaussian_pair_sample, true_gaussian_ratio, Gaussian, GaussianPairSpec};
use oee_core::ratio::{train_ratio, ModelClass, RatioModel, TrainConfig};
use oee_core::rng::{label, stream};
use oee_core::{Error, Result};

use super::{
    cell_seed, f, median, train_config, write_csv, write_manifest, ExperimentConfig, EXPERIMENT_KEYS, TRAIN_KEYS,
};
use crate::config::Config;
use crate::plot::{emit_svg_lineplot, ColorRole, FigureSpec, Series};

#[derive(Debug, Clone)]
pub struct GaussianSettings {
    pub q: Gaussian,
    /// Numerator distributions, each paired with `q`.
    pub p: Vec<Gaussian>,
    pub sizes: Vec<usize>,
    /// Error is averaged over a uniform grid on this interval.
    pub eval_range: (f64, f64),
    pub eval_points: usize,
    /// Also fit `q` against itself.
    pub control: bool,
    pub train: TrainConfig,
}

const GAUSSIAN_KEYS: &[&str] = &[
    "q_mean",
    "q_std",
    "p_means",
    "p_std",
    "sizes",
    "eval_low",
    "eval_high",
    "eval_points",
    "control",
];

pub fn gaussian_train_defaults() -> TrainConfig {
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

impl GaussianSettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.check_known(&[
            ("experiment", EXPERIMENT_KEYS),
            ("gaussian", GAUSSIAN_KEYS),
            ("train", TRAIN_KEYS),
        ])?;
        let s = "gaussian";
        let p_std = cfg.f64_or(s, "p_std", 1.0)?;
        let p = cfg
            .list_or(s, "p_means", &[2.0, 3.0, 4.0])?
            .into_iter()
            .map(|m| Gaussian::new(m, p_std))
            .collect::<Result<Vec<_>>>()?;
        let settings = GaussianSettings {
            q: Gaussian::new(cfg.f64_or(s, "q_mean", 4.0)?, cfg.f64_or(s, "q_std", 2.0)?)?,
            p,
            sizes: cfg.list_or(s, "sizes", &[500, 2000, 8000])?,
            eval_range: (cfg.f64_or(s, "eval_low", 2.0)?, cfg.f64_or(s, "eval_high", 6.0)?),
            eval_points: cfg.usize_or(s, "eval_points", 201)?,
            control: cfg.bool_or(s, "control", true)?,
            train: train_config(cfg, gaussian_train_defaults())?,
        };
        if settings.p.is_empty() || settings.sizes.is_empty() || settings.sizes.contains(&0) {
            return Err(Error::Argument(
                "need at least one numerator and positive sample sizes".into(),
            ));
        }
        if settings.eval_points < 2 || !(settings.eval_range.0 < settings.eval_range.1) {
            return Err(Error::Argument(
                "evaluation grid needs two points on a nonempty interval".into(),
            ));
        }
        Ok(settings)
    }

    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.eval_range;
        let k = self.eval_points - 1;
        (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
    }

    fn pairs(&self) -> Vec<Gaussian> {
        let mut v = self.p.clone();
        if self.control {
            v.push(self.q);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaeRow {
    pub p: Gaussian,
    pub n: usize,
    pub seed: u64,
    pub mae: f64,
    pub saturation: f64,
}

/// `(x, true ratio, estimate)` at one grid point.
pub type CurvePoint = (f64, f64, f64);

#[derive(Debug, Clone, Default)]
pub struct GaussianResults {
    pub rows: Vec<MaeRow>,
    /// `(p, n, seed, x, true ratio, estimate)` over the evaluation grid.
    pub curves: Vec<(Gaussian, usize, u64, Vec<CurvePoint>)>,
}

impl GaussianResults {
    /// Median error over seeds for one numerator and sample size.
    pub fn median_mae(&self, p: Gaussian, n: usize) -> f64 {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.p == p && r.n == n)
            .map(|r| r.mae)
            .collect();
        median(&v)
    }
}

/// Mean absolute error of `model` against the exact ratio `p / q` on `grid`,
/// with the per-point values.
pub fn ratio_mae(model: &RatioModel, p: &Gaussian, q: &Gaussian, grid: &[f64]) -> Result<(f64, Vec<CurvePoint>)> {
    let mut pts = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    for x in grid {
        let truth = true_gaussian_ratio(p, q, *x)?;
        let est = model.eval(&[*x])?;
        total += (est - truth).abs();
        pts.push((*x, truth, est));
    }
    Ok((total / grid.len() as f64, pts))
}

pub fn fit_pair(st: &GaussianSettings, p: Gaussian, n: usize, seed: u64, index: u64) -> Result<RatioModel> {
    let base = cell_seed(seed, &[index, n as u64]);
    let mut rng = stream(base, label::DATA_TEST);
    let (xp, xq) = gaussian_pair_sample(&GaussianPairSpec { p, q: st.q, n }, &mut rng)?;
    let col = |v: Vec<f64>| v.into_iter().map(|x| vec![x]).collect::<Vec<_>>();
    let cfg = TrainConfig {
        seed: cell_seed(base, &[label::INIT]),
        ..st.train.clone()
    };
    train_ratio(&col(xp), &col(xq), &cfg)
}

pub fn run_gaussian_experiment(cfg: &ExperimentConfig) -> Result<GaussianResults> {
    let st = GaussianSettings::from_config(&cfg.raw)?;
    let grid = st.grid();
    let mut res = GaussianResults::default();
    for (i, p) in st.pairs().into_iter().enumerate() {
        for n in &st.sizes {
            for seed in &cfg.seeds {
                let model = fit_pair(&st, p, *n, *seed, i as u64)?;
                let (mae, pts) = ratio_mae(&model, &p, &st.q, &grid)?;
                let saturation = model.meta.saturation;
                log::info!("gaussian P=N({}, {}) n {n} seed {seed}: MAE {mae:.4}", p.mean, p.std);
                res.rows.push(MaeRow {
                    p,
                    n: *n,
                    seed: *seed,
                    mae,
                    saturation,
                });
                if *seed == cfg.seeds[0] {
                    res.curves.push((p, *n, *seed, pts));
                }
            }
        }
    }
    write_outputs(cfg, &st, &res)?;
    Ok(res)
}

fn write_outputs(cfg: &ExperimentConfig, st: &GaussianSettings, res: &GaussianResults) -> Result<()> {
    let dir = &cfg.out;
    let mut files = Vec::new();
    let rows: Vec<String> = res
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.p.mean,
                r.p.std,
                r.n,
                r.seed,
                f(r.mae),
                f(r.saturation)
            )
        })
        .collect();
    files.push(write_csv(dir, "mae.csv", "p_mean,p_std,n,seed,mae,saturation", &rows)?);
    let rows: Vec<String> = res
        .curves
        .iter()
        .flat_map(|(p, n, seed, pts)| {
            pts.iter()
                .map(move |(x, t, e)| format!("{},{},{},{},{},{},{}", p.mean, p.std, n, seed, f(*x), f(*t), f(*e)))
        })
        .collect();
    files.push(write_csv(
        dir,
        "ratio_curves.csv",
        "p_mean,p_std,n,seed,x,true,estimate",
        &rows,
    )?);

    let n_max = *st.sizes.iter().max().expect("validated nonempty");
    for (k, p) in st.pairs().iter().enumerate() {
        let Some((_, _, _, pts)) = res.curves.iter().find(|(q, n, _, _)| q == p && *n == n_max) else {
            continue;
        };
        let name = format!("ratio_p{k}.svg");
        emit_svg_lineplot(&FigureSpec {
            title: format!("N({}, {}) / N({}, {}), n = {n_max}", p.mean, p.std, st.q.mean, st.q.std),
            x_label: "x".into(),
            y_label: "ratio".into(),
            series: vec![
                Series {
                    name: "true".into(),
                    role: ColorRole::Truth,
                    points: pts.iter().map(|(x, t, _)| (*x, *t)).collect(),
                    band: None,
                },
                Series {
                    name: "estimate".into(),
                    role: ColorRole::Ours,
                    points: pts.iter().map(|(x, _, e)| (*x, *e)).collect(),
                    band: None,
                },
            ],
            path: dir.join(&name),
        })?;
        files.push(name);
    }
    let series = st
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, p)| Series {
            name: format!("N({}, {})", p.mean, p.std),
            role: ColorRole::Other(k),
            points: st
                .sizes
                .iter()
                .map(|n| ((*n as f64).log10(), res.median_mae(*p, *n)))
                .collect(),
            band: None,
        })
        .collect();
    emit_svg_lineplot(&FigureSpec {
        title: "Ratio error against sample size".into(),
        x_label: "log10 n".into(),
        y_label: "median MAE".into(),
        series,
        path: dir.join("mae.svg"),
    })?;
    files.push("mae.svg".into());
    write_manifest(cfg, &files)
}
