//! Experiment drivers. Each reads its settings from a [`Config`], writes CSV
//! and SVG artifacts plus a manifest into the output directory, and returns
//! its results in memory.

pub mod archery;
pub mod bounds;
pub mod cartpole;
pub mod gaussian;
pub mod gridworld;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oee_core::ratio::{ModelClass, TrainConfig};
use oee_core::{DiscountSpec, Error, Result};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::plot::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Gridworld,
    Cartpole,
    Archery,
    Gaussian,
    Bounds,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Gridworld => "gridworld",
            ExperimentKind::Cartpole => "cartpole",
            ExperimentKind::Archery => "archery",
            ExperimentKind::Gaussian => "gaussian",
            ExperimentKind::Bounds => "bounds",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridworld" => Ok(ExperimentKind::Gridworld),
            "cartpole" => Ok(ExperimentKind::Cartpole),
            "archery" => Ok(ExperimentKind::Archery),
            "gaussian" => Ok(ExperimentKind::Gaussian),
            "bounds" => Ok(ExperimentKind::Bounds),
            _ => Err(Error::Argument(format!("unknown experiment kind {s:?}"))),
        }
    }
}

/// Settings shared by every experiment; the rest stays in `raw` and is read
/// by the individual drivers.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub raw: Config,
}

pub const DEFAULT_SEEDS: usize = 10;

impl ExperimentConfig {
    /// Reads `[experiment] kind`, `seeds` and `out`. A `kind` argument
    /// overrides the file, and must agree with it if both are present.
    pub fn from_config(raw: Config, kind: Option<ExperimentKind>) -> Result<Self> {
        let file_kind = raw.get("experiment", "kind").map(str::parse).transpose()?;
        let kind = match (kind, file_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Argument(format!("config describes a {b} experiment, not {a}")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Argument("experiment kind not given".into())),
        };
        let default_seeds: Vec<u64> = (0..DEFAULT_SEEDS as u64).collect();
        let seeds = raw.list_or("experiment", "seeds", &default_seeds)?;
        if seeds.is_empty() {
            return Err(Error::Argument("seed list is empty".into()));
        }
        let out = PathBuf::from(raw.str_or("experiment", "out", "out"));
        let mut raw = raw;
        raw.set("experiment", "kind", kind.to_string());
        Ok(ExperimentConfig { kind, seeds, out, raw })
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        let text: Vec<String> = seeds.iter().map(u64::to_string).collect();
        self.raw.set("experiment", "seeds", text.join(","));
        self.seeds = seeds;
        self
    }

    pub fn with_out(mut self, out: impl Into<PathBuf>) -> Self {
        self.out = out.into();
        self
    }
}

pub const TRAIN_KEYS: &[&str] = &[
    "model",
    "hidden",
    "batch",
    "iterations",
    "lr",
    "lambda",
    "nu",
    "mu",
    "eval_every",
    "standardize",
    "tolerance",
    "anneal",
    "one_hot",
    "delta_next",
];

/// `[train]` settings over experiment-specific defaults.
pub fn train_config(cfg: &Config, defaults: TrainConfig) -> Result<TrainConfig> {
    let class = match cfg.get("train", "model") {
        None => defaults.class,
        Some("tabular") => ModelClass::Tabular,
        Some("mlp") => {
            let fallback = match defaults.class {
                ModelClass::Mlp { hidden } => hidden,
                ModelClass::Tabular => [64, 64, 64],
            };
            ModelClass::Mlp { hidden: fallback }
        }
        Some(other) => return Err(Error::Argument(format!("unknown model class {other:?}"))),
    };
    let class = match class {
        ModelClass::Mlp { hidden } => {
            let h: Vec<usize> = cfg.list_or("train", "hidden", &hidden)?;
            if h.len() != 3 {
                return Err(Error::Argument("[train] hidden needs three widths".into()));
            }
            ModelClass::Mlp {
                hidden: [h[0], h[1], h[2]],
            }
        }
        ModelClass::Tabular => ModelClass::Tabular,
    };
    let base = if class == ModelClass::Tabular && defaults.class != ModelClass::Tabular {
        TrainConfig::tabular()
    } else if class != ModelClass::Tabular && defaults.class == ModelClass::Tabular {
        TrainConfig::mlp()
    } else {
        defaults
    };
    let t = TrainConfig {
        class,
        batch_size: cfg.usize_or("train", "batch", base.batch_size)?,
        iterations: cfg.usize_or("train", "iterations", base.iterations)?,
        lr: cfg.f64_or("train", "lr", base.lr)?,
        lambda: cfg.f64_or("train", "lambda", base.lambda)?,
        nu: cfg.f64_or("train", "nu", base.nu)?,
        mu: cfg.f64_or("train", "mu", base.mu)?,
        seed: base.seed,
        eval_every: cfg.usize_or("train", "eval_every", base.eval_every)?,
        standardize: cfg.bool_or("train", "standardize", base.standardize)?,
        tolerance: cfg.f64_or("train", "tolerance", base.tolerance)?,
        anneal: cfg.bool_or("train", "anneal", base.anneal)?,
    };
    t.validate()?;
    Ok(t)
}

pub const DISCOUNT_KEYS: &[&str] = &["gamma", "horizon", "rollouts"];

pub fn discount_spec(cfg: &Config, defaults: DiscountSpec) -> Result<DiscountSpec> {
    DiscountSpec::new(
        cfg.f64_or("discount", "gamma", defaults.gamma)?,
        cfg.usize_or("discount", "horizon", defaults.horizon)?,
        cfg.usize_or("discount", "rollouts", defaults.n_rollouts)?,
    )
}

pub const EXPERIMENT_KEYS: &[&str] = &["kind", "seeds", "out"];

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Writes `config.txt` (canonical effective config) and `manifest.txt`.
pub fn write_manifest(cfg: &ExperimentConfig, files: &[String]) -> Result<()> {
    let canonical = cfg.raw.to_string();
    write_file(&cfg.out.join("config.txt"), &canonical)?;
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    let mut text = String::new();
    text.push_str(&format!("experiment = {}\n", cfg.kind));
    text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("config_sha256 = {}\n", sha256_hex(&canonical)));
    text.push_str(&format!("seeds = {}\n", seeds.join(",")));
    text.push_str("rng = chacha8 with splitmix64 seed derivation\n");
    for f in files {
        text.push_str(&format!("file = {f}\n"));
    }
    write_file(&cfg.out.join("manifest.txt"), &text)
}

pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<String> {
    let mut text = String::with_capacity(64 * rows.len() + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    write_file(&dir.join(name), &text)?;
    Ok(name.to_string())
}

/// Median of a nonempty slice (mean of the two middle values for even
/// lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed for one cell of an experiment grid.
pub fn cell_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, i| oee_core::rng::derive_seed(s, *i))
}

/// Shortest round-trip formatting for CSV fields.
pub fn f(v: f64) -> String {
    oee_core::report::fmt_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn kind_agreement() {
        let cfg = parse_config("[experiment]\nkind = gaussian\n").unwrap();
        assert!(ExperimentConfig::from_config(cfg.clone(), Some(ExperimentKind::Gridworld)).is_err());
        let e = ExperimentConfig::from_config(cfg, None).unwrap();
        assert_eq!(e.kind, ExperimentKind::Gaussian);
        assert_eq!(e.seeds.len(), DEFAULT_SEEDS);
    }

    #[test]
    fn train_section_overrides_defaults() {
        let cfg = parse_config("[train]\nmodel = mlp\nhidden = 8,4,2\nlr = 0.5\n").unwrap();
        let t = train_config(&cfg, TrainConfig::tabular()).unwrap();
        assert_eq!(t.class, ModelClass::Mlp { hidden: [8, 4, 2] });
        assert_eq!(t.lr, 0.5);
        assert_eq!(t.lambda, TrainConfig::mlp().lambda);
        let bad = parse_config("[train]\nnu = 2\n").unwrap();
        assert!(train_config(&bad, TrainConfig::tabular()).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
