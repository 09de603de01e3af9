//! Density-ratio estimation by minimising the convex dual of the KL
//! divergence.
//!
//! For samples `x_p ~ P` and `x_q ~ Q` the empirical objective is
//!
//! ```text
//! L(g) = mean_q g(x_q) - mean_p ln g(x_p) + (lambda / 2) I(g)^2
//! ```
//!
//! whose population minimiser is `g* = P / Q`. The linear term always runs
//! over the denominator distribution `Q` (the training environment) and the
//! log term over the numerator `P` (the test environment).
//!
//! Two function classes are supported. A tabular model keeps one value per
//! distinct input vector and regularises `I(g)^2 = sum (g(x) - 1)^2`. An MLP
//! model uses [`crate::nn`] with `I(g)^2` the squared L2 norm of its weights.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::nn::{check_bounds, sgd_update, GradientBuffer, MlpParams, Workspace};
use crate::rng::{self, label, Rng};
use crate::types::{FeatureEncoding, TransitionDataset};

/// What a model's input vectors describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Plain samples, e.g. the Gaussian benchmark.
    X,
    /// State-action pairs.
    Sa,
    /// State-action-next-state tuples.
    Sas,
}

impl Domain {
    pub fn tag(&self) -> &'static str {
        match self {
            Domain::X => "x",
            Domain::Sa => "sa",
            Domain::Sas => "sas",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Domain::X),
            "sa" => Ok(Domain::Sa),
            "sas" => Ok(Domain::Sas),
            _ => Err(Error::arg(format!("unknown model domain {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    Tabular,
    Mlp { hidden: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub class: ModelClass,
    /// Minibatch size drawn from each sample set; a batch at least as large
    /// as a sample set uses that whole set.
    pub batch_size: usize,
    pub iterations: usize,
    pub lr: f64,
    pub lambda: f64,
    pub nu: f64,
    pub mu: f64,
    pub seed: u64,
    /// Record the full-data loss every this many iterations.
    pub eval_every: usize,
    /// Standardise MLP inputs with the pooled sample mean and deviation.
    pub standardize: bool,
    /// Full-batch tabular training stops once no entry moves more than this.
    pub tolerance: f64,
    /// Cosine-anneal the MLP step size from `lr` to zero over the run.
    pub anneal: bool,
}

impl TrainConfig {
    pub fn mlp() -> Self {
        TrainConfig {
            class: ModelClass::Mlp { hidden: [64, 64, 64] },
            batch_size: 256,
            iterations: 50_000,
            lr: 1e-5,
            lambda: 1e-4,
            nu: 0.1,
            mu: 10.0,
            seed: 0,
            eval_every: 1000,
            standardize: true,
            tolerance: 0.0,
            anneal: true,
        }
    }

    /// Tabular defaults: full batch, no regulariser, unit step. The tabular
    /// update is preconditioned (see [`train_ratio`]), so a unit step
    /// contracts every entry towards its optimum.
    pub fn tabular() -> Self {
        TrainConfig {
            class: ModelClass::Tabular,
            batch_size: usize::MAX,
            iterations: 5_000,
            lr: 1.0,
            lambda: 0.0,
            nu: 0.1,
            mu: 10.0,
            seed: 0,
            eval_every: 100,
            standardize: false,
            tolerance: 1e-14,
            anneal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_bounds(self.nu, self.mu)?;
        if self.batch_size == 0 || self.iterations == 0 || self.eval_every == 0 {
            return Err(Error::arg("batch size, iterations and eval stride must be positive"));
        }
        if !(self.lr >= 0.0) || !(self.lambda >= 0.0) || !self.lr.is_finite() {
            return Err(Error::arg(
                "learning rate and regulariser weight must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

/// Anything that can be plugged into the dual objective.
pub trait RatioFunction {
    fn ratio(&self, x: &[f64]) -> Result<f64>;

    /// `I(g)^2`.
    fn regularizer_sq(&self) -> f64 {
        0.0
    }
}

/// Exact-match key of an input vector. `-0.0` and `0.0` share a key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TabularKey(Vec<u64>);

impl TabularKey {
    pub fn new(x: &[f64]) -> Self {
        TabularKey(x.iter().map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() }).collect())
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|b| f64::from_bits(*b)).collect()
    }
}

/// One value per distinct input; unseen inputs map to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRatio {
    pub dim: usize,
    pub values: BTreeMap<TabularKey, f64>,
}

impl TabularRatio {
    pub fn new(dim: usize) -> Self {
        TabularRatio {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, x: &[f64]) -> f64 {
        self.values.get(&TabularKey::new(x)).copied().unwrap_or(1.0)
    }
}

/// Per-coordinate affine map applied to inputs before the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit<'a>(samples: impl Iterator<Item = &'a Vec<f64>>, dim: usize) -> Self {
        let mut n: f64 = 0.0;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for x in samples {
            n += 1.0;
            for k in 0..dim {
                sum[k] += x[k];
                sq[k] += x[k] * x[k];
            }
        }
        let shift: Vec<f64> = sum.iter().map(|s| s / n.max(1.0)).collect();
        let scale = sq
            .iter()
            .zip(&shift)
            .map(|(q, m)| {
                let var = q / n.max(1.0) - m * m;
                if var > 1e-24 {
                    1.0 / var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { shift, scale }
    }

    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            x.iter()
                .zip(self.shift.iter().zip(&self.scale))
                .map(|(v, (m, s))| (v - m) * s),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RatioBody {
    Tabular(TabularRatio),
    Mlp { params: MlpParams, scaler: Option<Scaler> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMeta {
    pub n_p: usize,
    pub n_q: usize,
    pub iterations: usize,
    pub seed: u64,
    /// `(iteration, full-data loss)`.
    pub curve: Vec<(usize, f64)>,
    /// Fraction of training-sample evaluations sitting on `nu` or `mu`.
    pub saturation: f64,
}

/// A trained (or hand-built) bounded ratio model `g: X -> [nu, mu]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    pub body: RatioBody,
    pub domain: Domain,
    pub encoding: FeatureEncoding,
    pub nu: f64,
    pub mu: f64,
    pub lambda: f64,
    pub meta: TrainMeta,
}

impl RatioModel {
    pub fn input_dim(&self) -> usize {
        match &self.body {
            RatioBody::Tabular(t) => t.dim,
            RatioBody::Mlp { params, .. } => params.input_dim(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match &self.body {
            RatioBody::Tabular(t) => Ok(t.get(x).clamp(self.nu, self.mu)),
            RatioBody::Mlp { params, scaler } => {
                let mut ws = Workspace::default();
                mlp_eval(params, scaler.as_ref(), x, &mut Vec::new(), &mut ws)
            }
        }
    }

    /// Fraction of `samples` on which the model sits at one of its bounds.
    pub fn saturation(&self, samples: &[Vec<f64>]) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let tol = 1e-9;
        let mut hits = 0usize;
        for x in samples {
            let g = self.eval(x)?;
            if g <= self.nu * (1.0 + tol) || g >= self.mu * (1.0 - tol) {
                hits += 1;
            }
        }
        Ok(hits as f64 / samples.len() as f64)
    }
}

fn mlp_eval(
    params: &MlpParams,
    scaler: Option<&Scaler>,
    x: &[f64],
    buf: &mut Vec<f64>,
    ws: &mut Workspace,
) -> Result<f64> {
    match scaler {
        Some(s) => {
            s.apply(x, buf);
            params.forward_into(buf, ws)
        }
        None => params.forward_into(x, ws),
    }
}

impl RatioFunction for RatioModel {
    fn ratio(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    fn regularizer_sq(&self) -> f64 {
        match &self.body {
            RatioBody::Tabular(t) => t.values.values().map(|v| (v - 1.0).powi(2)).sum(),
            RatioBody::Mlp { params, .. } => params.l2_norm_sq(),
        }
    }
}

fn check_batches(batch_p: &[Vec<f64>], batch_q: &[Vec<f64>]) -> Result<()> {
    if batch_p.is_empty() || batch_q.is_empty() {
        return Err(Error::arg("both sample batches must be nonempty"));
    }
    Ok(())
}

/// `mean_q g - mean_p ln g + (lambda / 2) I(g)^2`.
pub fn empirical_dual_loss<G: RatioFunction + ?Sized>(
    g: &G,
    batch_p: &[Vec<f64>],
    batch_q: &[Vec<f64>],
    lambda: f64,
) -> Result<f64> {
    check_batches(batch_p, batch_q)?;
    let mut linear = 0.0;
    for x in batch_q {
        linear += g.ratio(x)?;
    }
    let mut log = 0.0;
    for x in batch_p {
        let v = g.ratio(x)?;
        if v <= 0.0 {
            return Err(Error::Domain(format!("ratio model returned nonpositive value {v}")));
        }
        log += v.ln();
    }
    Ok(linear / batch_q.len() as f64 - log / batch_p.len() as f64 + 0.5 * lambda * g.regularizer_sq())
}

/// Gradient of [`empirical_dual_loss`] with respect to a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LossGradient {
    Mlp(GradientBuffer),
    /// Per-entry derivative with respect to the stored table values.
    Tabular(BTreeMap<TabularKey, f64>),
}

pub fn loss_gradient(
    model: &RatioModel,
    batch_p: &[Vec<f64>],
    batch_q: &[Vec<f64>],
    lambda: f64,
) -> Result<LossGradient> {
    check_batches(batch_p, batch_q)?;
    let (np, nq) = (batch_p.len() as f64, batch_q.len() as f64);
    match &model.body {
        RatioBody::Mlp { params, scaler } => {
            let mut grad = GradientBuffer::zeros_like(params);
            mlp_data_gradient(params, scaler.as_ref(), batch_p, batch_q, &mut grad)?;
            grad.add_params(params, lambda);
            Ok(LossGradient::Mlp(grad))
        }
        RatioBody::Tabular(table) => {
            let mut grad: BTreeMap<TabularKey, f64> = table
                .values
                .iter()
                .map(|(k, v)| (k.clone(), lambda * (v - 1.0)))
                .collect();
            for x in batch_q {
                model.check_dim(x)?;
                *grad.entry(TabularKey::new(x)).or_insert(0.0) += 1.0 / nq;
            }
            for x in batch_p {
                model.check_dim(x)?;
                let g = table.get(x);
                *grad.entry(TabularKey::new(x)).or_insert(0.0) -= 1.0 / (np * g);
            }
            Ok(LossGradient::Tabular(grad))
        }
    }
}

/// Adds the data part of the loss gradient (no regulariser) to `grad`.
fn mlp_data_gradient(
    params: &MlpParams,
    scaler: Option<&Scaler>,
    batch_p: &[Vec<f64>],
    batch_q: &[Vec<f64>],
    grad: &mut GradientBuffer,
) -> Result<()> {
    let (np, nq) = (batch_p.len() as f64, batch_q.len() as f64);
    let mut ws = Workspace::default();
    let mut buf = Vec::new();
    for x in batch_q {
        mlp_eval(params, scaler, x, &mut buf, &mut ws)?;
        params.backward_into(&ws, 1.0 / nq, grad);
    }
    for x in batch_p {
        let g = mlp_eval(params, scaler, x, &mut buf, &mut ws)?;
        params.backward_into(&ws, -1.0 / (np * g), grad);
    }
    Ok(())
}

fn check_samples(samples_p: &[Vec<f64>], samples_q: &[Vec<f64>]) -> Result<usize> {
    check_batches(samples_p, samples_q)?;
    let dim = samples_q[0].len();
    if dim == 0 {
        return Err(Error::arg("samples must have at least one coordinate"));
    }
    for x in samples_p.iter().chain(samples_q) {
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sample coordinate is not finite".into()));
        }
    }
    Ok(dim)
}

/// Fits a ratio model `P / Q` on plain samples.
pub fn train_ratio(samples_p: &[Vec<f64>], samples_q: &[Vec<f64>], config: &TrainConfig) -> Result<RatioModel> {
    fit(samples_p, samples_q, config, Domain::X, FeatureEncoding::RAW)
}

/// Fits a ratio model and tags it with the domain and feature encoding its
/// inputs were built with.
///
/// Tabular models take preconditioned gradient steps: entry `x` moves by
/// `-lr * g(x) / (P(x) + Q(x)) * dL/dg(x)`, with `P` and `Q` the full-sample
/// frequencies. The fixed points are those of plain gradient descent, and in
/// full-batch mode each entry contracts geometrically towards
/// `clamp(P(x) / Q(x), nu, mu)` at a rate independent of its frequency.
///
/// MLP models take plain SGD steps on minibatches drawn with replacement.
pub fn fit(
    samples_p: &[Vec<f64>],
    samples_q: &[Vec<f64>],
    config: &TrainConfig,
    domain: Domain,
    encoding: FeatureEncoding,
) -> Result<RatioModel> {
    config.validate()?;
    let dim = check_samples(samples_p, samples_q)?;
    let mut model = match config.class {
        ModelClass::Tabular => fit_tabular(samples_p, samples_q, config, dim)?,
        ModelClass::Mlp { hidden } => fit_mlp(samples_p, samples_q, config, dim, hidden)?,
    };
    model.domain = domain;
    model.encoding = encoding;
    model.meta.n_p = samples_p.len();
    model.meta.n_q = samples_q.len();
    model.meta.seed = config.seed;
    let sat_p = model.saturation(samples_p)?;
    let sat_q = model.saturation(samples_q)?;
    model.meta.saturation =
        (sat_p * samples_p.len() as f64 + sat_q * samples_q.len() as f64) / (samples_p.len() + samples_q.len()) as f64;
    if model.meta.saturation > 0.01 {
        log::warn!(
            "{:.1}% of {} ratio evaluations sit on the bounds [{}, {}]; the true ratio may lie outside the model class",
            100.0 * model.meta.saturation,
            domain.tag(),
            config.nu,
            config.mu
        );
    }
    Ok(model)
}

fn tabular_loss(atoms: &BTreeMap<TabularKey, (f64, f64)>, table: &TabularRatio, lambda: f64) -> f64 {
    let mut loss = 0.0;
    for (k, (p, q)) in atoms {
        let g = table.values[k];
        loss += q * g;
        if *p > 0.0 {
            loss -= p * g.ln();
        }
    }
    loss + 0.5 * lambda * table.values.values().map(|v| (v - 1.0).powi(2)).sum::<f64>()
}

fn fit_tabular(samples_p: &[Vec<f64>], samples_q: &[Vec<f64>], config: &TrainConfig, dim: usize) -> Result<RatioModel> {
    let (np, nq) = (samples_p.len(), samples_q.len());
    // (P frequency, Q frequency) per atom.
    let mut atoms: BTreeMap<TabularKey, (f64, f64)> = BTreeMap::new();
    let mut keys_p = Vec::with_capacity(np);
    let mut keys_q = Vec::with_capacity(nq);
    for x in samples_p {
        let k = TabularKey::new(x);
        atoms.entry(k.clone()).or_default().0 += 1.0 / np as f64;
        keys_p.push(k);
    }
    for x in samples_q {
        let k = TabularKey::new(x);
        atoms.entry(k.clone()).or_default().1 += 1.0 / nq as f64;
        keys_q.push(k);
    }
    let mut table = TabularRatio::new(dim);
    for k in atoms.keys() {
        table.values.insert(k.clone(), 1.0);
    }
    let (nu, mu, lr, lambda) = (config.nu, config.mu, config.lr, config.lambda);
    let step = |g: f64, p: f64, q: f64, bp: f64, bq: f64| -> f64 {
        let grad = bq - bp / g + lambda * (g - 1.0);
        (g - lr * g / (p + q) * grad).clamp(nu, mu)
    };
    let full_batch = config.batch_size >= np.max(nq);
    let mut curve = vec![(0, tabular_loss(&atoms, &table, lambda))];
    let mut rng = rng::stream(config.seed, label::BATCH);
    let mut counts: BTreeMap<TabularKey, (f64, f64)> = BTreeMap::new();
    let mut done = 0;
    for it in 1..=config.iterations {
        done = it;
        let mut change: f64 = 0.0;
        if full_batch {
            for (k, (p, q)) in &atoms {
                let g = table.values.get_mut(k).unwrap();
                let next = step(*g, *p, *q, *p, *q);
                change = change.max((next - *g).abs());
                *g = next;
            }
        } else {
            counts.clear();
            let b = config.batch_size as f64;
            for _ in 0..config.batch_size {
                let kp = &keys_p[rng.random_range(0..np)];
                counts.entry(kp.clone()).or_default().0 += 1.0 / b;
                let kq = &keys_q[rng.random_range(0..nq)];
                counts.entry(kq.clone()).or_default().1 += 1.0 / b;
            }
            for (k, (bp, bq)) in &counts {
                let (p, q) = atoms[k];
                let g = table.values.get_mut(k).unwrap();
                *g = step(*g, p, q, *bp, *bq);
            }
        }
        if it % config.eval_every == 0 || it == config.iterations {
            let loss = tabular_loss(&atoms, &table, lambda);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    iteration: it,
                    reason: format!("loss became {loss}"),
                });
            }
            curve.push((it, loss));
        }
        if full_batch && change <= config.tolerance {
            if curve.last().map(|c| c.0) != Some(it) {
                curve.push((it, tabular_loss(&atoms, &table, lambda)));
            }
            break;
        }
    }
    Ok(RatioModel {
        body: RatioBody::Tabular(table),
        domain: Domain::X,
        encoding: FeatureEncoding::RAW,
        nu,
        mu,
        lambda,
        meta: TrainMeta {
            iterations: done,
            curve,
            ..Default::default()
        },
    })
}

fn draw_batch<'a>(samples: &'a [Vec<f64>], size: usize, rng: &mut Rng, out: &mut Vec<&'a Vec<f64>>) {
    out.clear();
    if size >= samples.len() {
        out.extend(samples.iter());
    } else {
        out.extend((0..size).map(|_| &samples[rng.random_range(0..samples.len())]));
    }
}

fn fit_mlp(
    samples_p: &[Vec<f64>],
    samples_q: &[Vec<f64>],
    config: &TrainConfig,
    dim: usize,
    hidden: [usize; 3],
) -> Result<RatioModel> {
    let mut init_rng = rng::stream(config.seed, label::INIT);
    let mut params = MlpParams::init(dim, hidden, config.nu, config.mu, &mut init_rng)?;
    let scaler = config
        .standardize
        .then(|| Scaler::fit(samples_p.iter().chain(samples_q), dim));
    let mut model = RatioModel {
        body: RatioBody::Mlp {
            params: params.clone(),
            scaler: scaler.clone(),
        },
        domain: Domain::X,
        encoding: FeatureEncoding::RAW,
        nu: config.nu,
        mu: config.mu,
        lambda: config.lambda,
        meta: TrainMeta::default(),
    };
    let full_loss = |params: &MlpParams, model: &mut RatioModel| -> Result<f64> {
        if let RatioBody::Mlp { params: p, .. } = &mut model.body {
            p.clone_from(params);
        }
        empirical_dual_loss(model, samples_p, samples_q, config.lambda)
    };
    let mut curve = vec![(0, full_loss(&params, &mut model)?)];
    let mut rng = rng::stream(config.seed, label::BATCH);
    let (mut bp, mut bq) = (Vec::new(), Vec::new());
    let mut grad = GradientBuffer::zeros_like(&params);
    let mut ws = Workspace::default();
    let mut buf = Vec::new();
    for it in 1..=config.iterations {
        draw_batch(samples_p, config.batch_size, &mut rng, &mut bp);
        draw_batch(samples_q, config.batch_size, &mut rng, &mut bq);
        grad.scale(0.0);
        let (np, nq) = (bp.len() as f64, bq.len() as f64);
        for x in &bq {
            mlp_eval(&params, scaler.as_ref(), x, &mut buf, &mut ws)?;
            params.backward_into(&ws, 1.0 / nq, &mut grad);
        }
        for x in &bp {
            let g = mlp_eval(&params, scaler.as_ref(), x, &mut buf, &mut ws)?;
            params.backward_into(&ws, -1.0 / (np * g), &mut grad);
        }
        grad.add_params(&params, config.lambda);
        let lr = if config.anneal {
            let frac = (it - 1) as f64 / config.iterations as f64;
            0.5 * config.lr * (1.0 + (std::f64::consts::PI * frac).cos())
        } else {
            config.lr
        };
        sgd_update(&mut params, &grad, lr).map_err(|e| match e {
            Error::TrainingDiverged { reason, .. } => Error::TrainingDiverged { iteration: it, reason },
            other => other,
        })?;
        if it % config.eval_every == 0 || it == config.iterations {
            let loss = full_loss(&params, &mut model)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    iteration: it,
                    reason: format!("loss became {loss}"),
                });
            }
            curve.push((it, loss));
        }
    }
    if let RatioBody::Mlp { params: p, .. } = &mut model.body {
        *p = params;
    }
    model.meta.iterations = config.iterations;
    model.meta.curve = curve;
    Ok(model)
}

/// Trains the `(s, a, s')` and `(s, a)` ratio models between test data
/// (numerator) and training data (denominator). Each model gets its own
/// random stream, and the two fits run concurrently.
pub fn train_zeta_pair(
    dataset_te: &TransitionDataset,
    dataset_tr: &TransitionDataset,
    config: &TrainConfig,
    encoding: FeatureEncoding,
) -> Result<(RatioModel, RatioModel)> {
    if dataset_te.is_empty() || dataset_tr.is_empty() {
        return Err(Error::arg("both datasets must be nonempty"));
    }
    if dataset_te.state_dim != dataset_tr.state_dim || dataset_te.action_spec != dataset_tr.action_spec {
        return Err(Error::arg(
            "train and test datasets disagree on state or action dimensions",
        ));
    }
    let cfg_sas = TrainConfig {
        seed: rng::derive_seed(config.seed, label::TRAIN_SAS),
        ..config.clone()
    };
    let cfg_sa = TrainConfig {
        seed: rng::derive_seed(config.seed, label::TRAIN_SA),
        ..config.clone()
    };
    let (sas, sa) = rayon::join(
        || {
            fit(
                &dataset_te.sas_features(encoding),
                &dataset_tr.sas_features(encoding),
                &cfg_sas,
                Domain::Sas,
                encoding,
            )
        },
        || {
            fit(
                &dataset_te.sa_features(encoding),
                &dataset_tr.sa_features(encoding),
                &cfg_sa,
                Domain::Sa,
                encoding,
            )
        },
    );
    Ok((sas?, sa?))
}

/// Training curve as `iteration,loss` CSV.
pub fn curve_csv(meta: &TrainMeta) -> String {
    let mut s = String::from("iteration,loss\n");
    for (it, loss) in &meta.curve {
        s.push_str(&format!("{it},{loss:?}\n"));
    }
    s
}
