//! Evaluation reports and plain Monte Carlo returns.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{rollout, DiscountSpec, Environment, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Oee,
    TrueValue,
    Oracle,
    Simulated,
    Is,
    Mle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Oee,
        EstimatorKind::TrueValue,
        EstimatorKind::Oracle,
        EstimatorKind::Simulated,
        EstimatorKind::Is,
        EstimatorKind::Mle,
    ];
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Oee => "OEE",
            EstimatorKind::TrueValue => "TrueValue",
            EstimatorKind::Oracle => "Oracle",
            EstimatorKind::Simulated => "Simulated",
            EstimatorKind::Is => "IS",
            EstimatorKind::Mle => "MLE",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::arg(format!("unknown estimator {s:?}")))
    }
}

/// Aggregate of per-rollout (possibly weighted) returns.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub estimator: EstimatorKind,
    pub mean: f64,
    /// `None` when there is a single rollout.
    pub stderr: Option<f64>,
    pub values: Vec<f64>,
    pub spec: DiscountSpec,
    /// Effective sample size of the per-rollout importance weights.
    pub ess: f64,
    pub delta: Option<f64>,
    pub seed: u64,
    /// Rollout steps that needed a fallback (for example an unvisited
    /// state-action pair in a learned model).
    pub fallbacks: usize,
}

pub const CSV_HEADER: &str = "estimator,delta,mean,stderr,ess,n,T,gamma,seed";

impl EvaluationReport {
    /// Builds a report from per-rollout values. `weights` are the trajectory
    /// importance weights, or `None` for unweighted estimators.
    pub fn from_values(
        estimator: EstimatorKind,
        values: Vec<f64>,
        weights: Option<&[f64]>,
        spec: DiscountSpec,
        seed: u64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("report needs at least one value"));
        }
        let (mean, stderr) = mean_stderr(&values);
        let ess = match weights {
            Some(w) => effective_sample_size(w)?,
            None => values.len() as f64,
        };
        Ok(EvaluationReport {
            estimator,
            mean,
            stderr,
            values,
            spec,
            ess,
            delta: None,
            seed,
            fallbacks: 0,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn relabel(mut self, estimator: EstimatorKind) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.estimator,
            self.delta.map_or("NA".to_string(), |d| format!("{d}")),
            fmt_f64(self.mean),
            self.stderr.map_or("NA".to_string(), fmt_f64),
            fmt_f64(self.ess),
            self.values.len(),
            self.spec.horizon,
            self.spec.gamma,
            self.seed
        )
    }

    /// Per-rollout values, one per line.
    pub fn values_text(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 24);
        for v in &self.values {
            s.push_str(&fmt_f64(*v));
            s.push('\n');
        }
        s
    }
}

/// Summary fields of a report CSV row, as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub estimator: EstimatorKind,
    pub delta: Option<f64>,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub ess: f64,
    pub n: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl FromStr for ReportRow {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(Error::parse(1, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(1, format!("bad number {s:?}")))
        };
        let opt = |s: &str| if s == "NA" { Ok(None) } else { num(s).map(Some) };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(1, format!("bad integer {s:?}")))
        };
        Ok(ReportRow {
            estimator: f[0].parse()?,
            delta: opt(f[1])?,
            mean: num(f[2])?,
            stderr: opt(f[3])?,
            ess: num(f[4])?,
            n: int(f[5])? as usize,
            horizon: int(f[6])? as usize,
            gamma: num(f[7])?,
            seed: int(f[8])?,
        })
    }
}

/// Shortest decimal that round-trips the value exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn mean_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::arg("weights must be finite and nonnegative"));
    }
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        return Err(Error::arg("all weights are zero"));
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok(sum * sum / sq)
}

/// Mean discounted return over `spec.n_rollouts` episodes; rollout `i` draws
/// from `rng::stream(seed, i)`.
pub fn monte_carlo_return<E: Environment + ?Sized>(
    env: &E,
    policy: &Policy,
    spec: &DiscountSpec,
    seed: u64,
) -> Result<EvaluationReport> {
    let values = (0..spec.n_rollouts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            rollout(env, policy, spec, &mut rng).map(|tr| tr.discounted_return(spec.gamma))
        })
        .collect::<Result<Vec<f64>>>()?;
    EvaluationReport::from_values(EstimatorKind::TrueValue, values, None, *spec, seed)
}
