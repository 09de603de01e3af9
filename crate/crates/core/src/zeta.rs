//! Transition ratios and off-environment evaluation.
//!
//! A rollout in the training environment is reweighted into an estimate of
//! the test-environment return: the reward at step `t` is multiplied by
//! `w_t = prod_{k=1..t} zeta(s_{k-1}, a_{k-1}, s_k)`, the likelihood ratio of
//! the transitions realised so far. Environments whose reward depends on the
//! arrival state also include the transition that produced it.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::envs::archery::{true_zeta_archery, ArcherySpec};
use crate::envs::cartpole::Cartpole;
use crate::envs::gridworld::{true_zeta_gridworld, Cell, Gridworld, GridworldSpec, N_ACTIONS};
use crate::error::{Error, Result};
use crate::ratio::{Domain, RatioModel};
use crate::report::{monte_carlo_return, EstimatorKind, EvaluationReport};
use crate::rng::{self, Rng};
use crate::types::{
    rollout, Action, ActionSpec, DiscountSpec, Environment, Policy, RewardTiming, StateVec, Step, Trajectory,
    TransitionDataset,
};

type ZetaFn = dyn Fn(&StateVec, &Action, &StateVec) -> Result<f64> + Send + Sync;

#[derive(Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ZetaEstimator {
    /// `model_sas(s, a, s') / model_sa(s, a)`.
    Learned {
        sas: RatioModel,
        sa: RatioModel,
        action_spec: ActionSpec,
    },
    /// An exact ratio, available when both kernels are known.
    Oracle(Arc<ZetaFn>),
    Unit,
}

impl fmt::Debug for ZetaEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZetaEstimator::Learned { sas, sa, .. } => f
                .debug_struct("Learned")
                .field("sas_dim", &sas.input_dim())
                .field("sa_dim", &sa.input_dim())
                .finish(),
            ZetaEstimator::Oracle(_) => f.write_str("Oracle"),
            ZetaEstimator::Unit => f.write_str("Unit"),
        }
    }
}

impl ZetaEstimator {
    pub fn learned(sas: RatioModel, sa: RatioModel, state_dim: usize, action_spec: ActionSpec) -> Result<Self> {
        if sas.domain != Domain::Sas || sa.domain != Domain::Sa {
            return Err(Error::arg("zeta needs an (s, a, s') model and an (s, a) model"));
        }
        if sas.nu != sa.nu || sas.mu != sa.mu {
            return Err(Error::arg("the two ratio models must share their bounds"));
        }
        if sas.encoding != sa.encoding {
            return Err(Error::arg("the two ratio models were trained on different encodings"));
        }
        let enc = sas.encoding;
        for (model, want) in [
            (&sas, enc.sas_dim(state_dim, action_spec)),
            (&sa, enc.sa_dim(state_dim, action_spec)),
        ] {
            if model.input_dim() != want {
                return Err(Error::Dimension {
                    expected: want,
                    got: model.input_dim(),
                });
            }
        }
        Ok(ZetaEstimator::Learned { sas, sa, action_spec })
    }

    pub fn gridworld_oracle(train: GridworldSpec, test: GridworldSpec) -> Self {
        ZetaEstimator::Oracle(Arc::new(move |s, a, s_next| {
            let a = a.index().ok_or_else(|| Error::arg("gridworld actions are discrete"))?;
            true_zeta_gridworld(&train, &test, s, a, s_next)
        }))
    }

    pub fn archery_oracle(train: ArcherySpec, test: ArcherySpec) -> Self {
        ZetaEstimator::Oracle(Arc::new(move |_s, a, s_next| match a {
            Action::Continuous(v) => true_zeta_archery(&train, &test, v[0], s_next[0]),
            Action::Discrete(_) => Err(Error::arg("archery actions are continuous")),
        }))
    }

    /// Range every learned value lies in.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self {
            ZetaEstimator::Learned { sas, .. } => Some((sas.nu / sas.mu, sas.mu / sas.nu)),
            _ => None,
        }
    }
}

pub fn zeta_value(est: &ZetaEstimator, s: &StateVec, a: &Action, s_next: &StateVec) -> Result<f64> {
    match est {
        ZetaEstimator::Unit => Ok(1.0),
        ZetaEstimator::Oracle(f) => f(s, a, s_next),
        ZetaEstimator::Learned { sas, sa, action_spec } => {
            let enc = sas.encoding;
            let num = sas.eval(&enc.sas(*action_spec, s, a, s_next))?;
            let den = sa.eval(&enc.sa(*action_spec, s, a))?;
            Ok(num / den)
        }
    }
}

/// Weighted discounted return of one training-environment trajectory, and
/// the trajectory's final weight.
pub fn weighted_return(
    traj: &Trajectory,
    zeta: &ZetaEstimator,
    gamma: f64,
    timing: RewardTiming,
) -> Result<(f64, f64)> {
    let mut discount = 1.0;
    let mut total = 0.0;
    let mut w = 1.0;
    for tr in &traj.transitions {
        let z = zeta_value(zeta, &tr.s, &tr.a, &tr.s_next)?;
        if timing == RewardTiming::Arrival {
            w *= z;
        }
        if !w.is_finite() {
            return Err(Error::Evaluation {
                step: tr.t,
                reason: format!("importance weight became {w}"),
            });
        }
        total += discount * (w * tr.r);
        discount *= gamma;
        if timing == RewardTiming::Departure {
            w *= z;
        }
    }
    if !w.is_finite() {
        return Err(Error::Evaluation {
            step: traj.len(),
            reason: format!("importance weight became {w}"),
        });
    }
    Ok((total, w))
}

/// Estimates the test-environment return of `policy` from rollouts of the
/// training environment. Rollout `i` draws from `rng::stream(seed, i)`, the
/// same streams [`monte_carlo_return`] uses.
pub fn oee_return<E: Environment + ?Sized>(
    env_tr: &E,
    policy: &Policy,
    zeta: &ZetaEstimator,
    spec: &DiscountSpec,
    seed: u64,
) -> Result<EvaluationReport> {
    let timing = env_tr.reward_timing();
    let pairs = (0..spec.n_rollouts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let traj = rollout(env_tr, policy, spec, &mut rng)?;
            weighted_return(&traj, zeta, spec.gamma, timing)
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (values, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let kind = match zeta {
        ZetaEstimator::Oracle(_) => EstimatorKind::Oracle,
        _ => EstimatorKind::Oee,
    };
    EvaluationReport::from_values(kind, values, Some(&weights), *spec, seed)
}

/// Plain Monte Carlo in the training environment.
pub fn simulated_baseline<E: Environment + ?Sized>(
    env_tr: &E,
    policy: &Policy,
    spec: &DiscountSpec,
    seed: u64,
) -> Result<EvaluationReport> {
    Ok(monte_carlo_return(env_tr, policy, spec, seed)?.relabel(EstimatorKind::Simulated))
}

/// Per-decision importance sampling over the logged test trajectories:
/// `sum_t gamma^t (prod_{k<=t} pi_target(a_k|s_k) / pi_behavior(a_k|s_k)) r_t`.
/// Trajectories longer than the horizon are truncated. The reported effective
/// sample size uses the full-trajectory weight products.
pub fn is_ope_baseline(
    dataset_te: &TransitionDataset,
    target: &Policy,
    behavior: &Policy,
    spec: &DiscountSpec,
) -> Result<EvaluationReport> {
    let trajectories = dataset_te.trajectories();
    if trajectories.is_empty() {
        return Err(Error::arg("dataset holds no trajectories"));
    }
    let mut values = Vec::with_capacity(trajectories.len());
    let mut weights = Vec::with_capacity(trajectories.len());
    for traj in &trajectories {
        let mut discount = 1.0;
        let mut total = 0.0;
        let mut w = 1.0;
        for tr in traj.transitions.iter().take(spec.horizon) {
            let pb = behavior.prob(&tr.s, &tr.a)?;
            if pb <= 0.0 {
                return Err(Error::SupportViolation(format!(
                    "behavior policy gives zero probability to the logged action at step {}",
                    tr.t
                )));
            }
            w *= target.prob(&tr.s, &tr.a)? / pb;
            total += discount * (w * tr.r);
            discount *= spec.gamma;
        }
        values.push(total);
        weights.push(w);
    }
    let n = values.len();
    let spec = DiscountSpec::new(spec.gamma, spec.horizon, n)?;
    match EvaluationReport::from_values(EstimatorKind::Is, values.clone(), Some(&weights), spec, dataset_te.seed) {
        Err(Error::Argument(_)) if weights.iter().all(|w| *w == 0.0) => {
            // No logged trajectory is possible under the target policy.
            let mut r = EvaluationReport::from_values(EstimatorKind::Is, values, None, spec, dataset_te.seed)?;
            r.ess = 0.0;
            Ok(r)
        }
        other => other,
    }
}

/// Count-based gridworld dynamics with Laplace smoothing over the cells each
/// state can reach.
#[derive(Debug)]
pub struct TabularGridModel {
    pub spec: GridworldSpec,
    /// Indexed by `cell index * N_ACTIONS + action`; `None` for unvisited
    /// pairs.
    table: Vec<Option<Vec<(Cell, f64)>>>,
    fallbacks: AtomicUsize,
}

impl TabularGridModel {
    pub fn fit(dataset: &TransitionDataset, template: &GridworldSpec, alpha: f64) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::arg("dataset is empty"));
        }
        if !(alpha >= 0.0) {
            return Err(Error::arg("smoothing constant must be nonnegative"));
        }
        let mut counts: BTreeMap<(usize, usize), BTreeMap<Cell, f64>> = BTreeMap::new();
        for tr in &dataset.records {
            let c = template.cell_of(&tr.s)?;
            let n = template.cell_of(&tr.s_next)?;
            let a =
                tr.a.index()
                    .filter(|a| *a < N_ACTIONS)
                    .ok_or_else(|| Error::arg("gridworld data needs discrete actions below 4"))?;
            *counts
                .entry((template.index(c), a))
                .or_default()
                .entry(n)
                .or_insert(0.0) += 1.0;
        }
        let mut table = vec![None; template.n_cells() * N_ACTIONS];
        for c in template.cells() {
            for a in 0..N_ACTIONS {
                let Some(seen) = counts.get(&(template.index(c), a)) else {
                    continue;
                };
                let mut support = template.candidates(c);
                for n in seen.keys() {
                    if !support.contains(n) {
                        support.push(*n);
                    }
                }
                let total: f64 = seen.values().sum::<f64>() + alpha * support.len() as f64;
                let row = support
                    .iter()
                    .map(|n| (*n, (seen.get(n).copied().unwrap_or(0.0) + alpha) / total))
                    .collect();
                table[template.index(c) * N_ACTIONS + a] = Some(row);
            }
        }
        Ok(TabularGridModel {
            spec: *template,
            table,
            fallbacks: AtomicUsize::new(0),
        })
    }

    /// Learned next-cell distribution; unvisited pairs get the uniform
    /// distribution over reachable cells.
    pub fn distribution(&self, c: Cell, a: usize) -> (Vec<(Cell, f64)>, bool) {
        if self.spec.goal_absorbing && c == self.spec.goal() {
            return (vec![(c, 1.0)], false);
        }
        match &self.table[self.spec.index(c) * N_ACTIONS + a] {
            Some(row) => (row.clone(), false),
            None => {
                let cand = self.spec.candidates(c);
                let p = 1.0 / cand.len() as f64;
                (cand.into_iter().map(|n| (n, p)).collect(), true)
            }
        }
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

impl Environment for TabularGridModel {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Discrete(N_ACTIONS)
    }

    fn reset(&self, rng: &mut Rng) -> StateVec {
        Gridworld { spec: self.spec }.reset(rng)
    }

    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        self.action_spec().check(a)?;
        let c = self.spec.cell_of(s)?;
        let (row, fallback) = self.distribution(c, a.index().unwrap());
        if fallback {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = row[row.len() - 1].0;
        for (n, p) in &row {
            acc += p;
            if u < acc {
                next = *n;
                break;
            }
        }
        Ok(Step {
            next: self.spec.state_of(next),
            reward: self.spec.reward(c),
            done: next == self.spec.goal(),
        })
    }
}

/// Per-action affine dynamics `s' = A_a [s; 1] + sigma_a * N(0, I)` fitted by
/// least squares, with the template's termination rule and unit reward.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    pub template: Cartpole,
    /// One `4 x 5` coefficient matrix per action.
    pub coefficients: Vec<DMatrix<f64>>,
    /// Residual standard deviation per action and coordinate.
    pub residual_std: Vec<Vec<f64>>,
}

impl LinearGaussianModel {
    pub fn fit(dataset: &TransitionDataset, template: &Cartpole) -> Result<Self> {
        let d = template.state_dim();
        let n_actions = match template.action_spec() {
            ActionSpec::Discrete(n) => n,
            ActionSpec::Continuous(_) => return Err(Error::arg("linear model needs discrete actions")),
        };
        if dataset.state_dim != d {
            return Err(Error::Dimension {
                expected: d,
                got: dataset.state_dim,
            });
        }
        let mut coefficients = Vec::with_capacity(n_actions);
        let mut residual_std = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let rows: Vec<_> = dataset.records.iter().filter(|r| r.a.index() == Some(a)).collect();
            if rows.len() < d + 2 {
                return Err(Error::arg(format!(
                    "action {a} has {} transitions, too few to fit its dynamics",
                    rows.len()
                )));
            }
            let x = DMatrix::from_fn(rows.len(), d + 1, |i, j| if j < d { rows[i].s[j] } else { 1.0 });
            let y = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].s_next[j]);
            let svd = x.clone().svd(true, true);
            let beta = svd
                .solve(&y, 1e-12)
                .map_err(|e| Error::Domain(format!("least-squares fit failed: {e}")))?;
            let resid = &y - &x * &beta;
            let dof = (rows.len() - (d + 1)).max(1) as f64;
            residual_std.push(
                (0..d)
                    .map(|j| (resid.column(j).iter().map(|v| v * v).sum::<f64>() / dof).sqrt())
                    .collect(),
            );
            coefficients.push(beta.transpose());
        }
        Ok(LinearGaussianModel {
            template: *template,
            coefficients,
            residual_std,
        })
    }

    pub fn predict_mean(&self, s: &StateVec, a: usize) -> Result<Vec<f64>> {
        let m = self
            .coefficients
            .get(a)
            .ok_or_else(|| Error::Env(format!("action {a} out of range")))?;
        let mut x = DVector::from_column_slice(s.as_slice()).push(1.0);
        if x.len() != m.ncols() {
            x = DVector::zeros(m.ncols());
            return Err(Error::Dimension {
                expected: m.ncols() - 1,
                got: x.len() - 1,
            });
        }
        Ok((m * x).iter().copied().collect())
    }
}

impl Environment for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.template.state_dim()
    }

    fn action_spec(&self) -> ActionSpec {
        self.template.action_spec()
    }

    fn reset(&self, rng: &mut Rng) -> StateVec {
        self.template.reset(rng)
    }

    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        self.action_spec().check(a)?;
        let a = a.index().unwrap();
        let mut next = self.predict_mean(s, a)?;
        for (v, sd) in next.iter_mut().zip(&self.residual_std[a]) {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Env("learned dynamics produced a non-finite state".into()));
        }
        let done = self.template.spec.terminal(&next);
        Ok(Step {
            next: StateVec::new(next)?,
            reward: 1.0,
            done,
        })
    }
}

/// Environment family an MLE baseline is fitted for.
#[derive(Debug, Clone, Copy)]
pub enum MleTemplate {
    Gridworld { spec: GridworldSpec, alpha: f64 },
    Cartpole(Cartpole),
}

/// Fits a dynamics model to the test data, then runs Monte Carlo on it.
pub fn mle_baseline(
    dataset_te: &TransitionDataset,
    template: &MleTemplate,
    policy: &Policy,
    spec: &DiscountSpec,
    seed: u64,
) -> Result<EvaluationReport> {
    match template {
        MleTemplate::Gridworld { spec: grid, alpha } => {
            let model = TabularGridModel::fit(dataset_te, grid, *alpha)?;
            let mut report = monte_carlo_return(&model, policy, spec, seed)?.relabel(EstimatorKind::Mle);
            report.fallbacks = model.fallbacks();
            if report.fallbacks > 0 {
                log::info!("MLE rollouts visited {} unseen state-action pairs", report.fallbacks);
            }
            Ok(report)
        }
        MleTemplate::Cartpole(env) => {
            let model = LinearGaussianModel::fit(dataset_te, env)?;
            Ok(monte_carlo_return(&model, policy, spec, seed)?.relabel(EstimatorKind::Mle))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::cartpole::CartpoleSpec;
    use crate::envs::gridworld::{value_iteration_expert, Gridworld, NORTH};
    use crate::ratio::{RatioBody, TabularKey, TabularRatio, TrainMeta};
    use crate::report::monte_carlo_return;
    use crate::types::{collect_dataset, FeatureEncoding, Source};

    fn grid(side: usize, slip: f64) -> GridworldSpec {
        GridworldSpec::new(side, slip).unwrap()
    }

    fn constant_model(domain: Domain, dim: usize, c: f64, data: &[Vec<f64>]) -> RatioModel {
        let mut t = TabularRatio::new(dim);
        for x in data {
            t.values.insert(TabularKey::new(x), c);
        }
        RatioModel {
            body: RatioBody::Tabular(t),
            domain,
            encoding: FeatureEncoding::RAW,
            nu: 0.1,
            mu: 10.0,
            lambda: 0.0,
            meta: TrainMeta::default(),
        }
    }

    #[test]
    fn unit_and_equal_constant_models_give_one() {
        let s = StateVec::new(vec![1.0, 2.0]).unwrap();
        let a = Action::Discrete(1);
        let s2 = StateVec::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(zeta_value(&ZetaEstimator::Unit, &s, &a, &s2).unwrap(), 1.0);
        let spec = ActionSpec::Discrete(4);
        let enc = FeatureEncoding::RAW;
        let sas = constant_model(Domain::Sas, 5, 3.7, &[enc.sas(spec, &s, &a, &s2)]);
        let sa = constant_model(Domain::Sa, 3, 3.7, &[enc.sa(spec, &s, &a)]);
        let z = ZetaEstimator::learned(sas, sa, 2, spec).unwrap();
        assert_eq!(zeta_value(&z, &s, &a, &s2).unwrap(), 1.0);
    }

    #[test]
    fn learned_rejects_swapped_models() {
        let sas = constant_model(Domain::Sas, 5, 1.0, &[]);
        let sa = constant_model(Domain::Sa, 3, 1.0, &[]);
        assert!(ZetaEstimator::learned(sa.clone(), sas.clone(), 2, ActionSpec::Discrete(4)).is_err());
        assert!(ZetaEstimator::learned(sas, sa, 3, ActionSpec::Discrete(4)).is_err());
    }

    #[test]
    fn oracle_matches_enumeration() {
        let (tr, te) = (grid(5, 0.3), grid(5, 0.1));
        let z = ZetaEstimator::gridworld_oracle(tr, te);
        let s = tr.state_of((2, 2));
        let north = tr.state_of((2, 3));
        let east = tr.state_of((3, 2));
        let v = zeta_value(&z, &s, &Action::Discrete(NORTH), &north).unwrap();
        assert!((v - 9.0 / 7.0).abs() < 1e-12);
        let v = zeta_value(&z, &s, &Action::Discrete(NORTH), &east).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unit_zeta_reproduces_monte_carlo_bit_exactly() {
        let spec_g = grid(5, 0.2);
        let env = Gridworld::new(spec_g).unwrap();
        let (expert, _) = value_iteration_expert(&spec_g, 0.99, 1e-10).unwrap();
        let policy = Policy::grid_mixture(0.5, expert).unwrap();
        let spec = DiscountSpec::new(0.99, 200, 300).unwrap();
        let a = oee_return(&env, &policy, &ZetaEstimator::Unit, &spec, 17).unwrap();
        let b = monte_carlo_return(&env, &policy, &spec, 17).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.ess, 300.0);
    }

    #[test]
    fn weights_stay_within_the_model_range() {
        let s = StateVec::new(vec![0.0]).unwrap();
        let mut traj = Trajectory::default();
        for t in 0..30 {
            traj.transitions.push(crate::types::Transition {
                t,
                s: s.clone(),
                a: Action::Discrete(0),
                s_next: s.clone(),
                r: 1.0,
            });
        }
        let big = ZetaEstimator::Oracle(Arc::new(|_, _, _| Ok(100.0)));
        let (v, w) = weighted_return(&traj, &big, 1.0, RewardTiming::Departure).unwrap();
        assert!((w / 1e60 - 1.0).abs() < 1e-12);
        assert!(v > 0.0);
        let huge = ZetaEstimator::Oracle(Arc::new(|_, _, _| Ok(1e200)));
        match weighted_return(&traj, &huge, 1.0, RewardTiming::Departure) {
            Err(Error::Evaluation { step, .. }) => assert_eq!(step, 2),
            other => panic!("expected an evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn first_reward_is_unweighted_unless_it_depends_on_the_arrival() {
        let s = StateVec::new(vec![0.0]).unwrap();
        let traj = Trajectory {
            transitions: vec![crate::types::Transition {
                t: 0,
                s: s.clone(),
                a: Action::Discrete(0),
                s_next: s,
                r: 2.0,
            }],
        };
        let z = ZetaEstimator::Oracle(Arc::new(|_, _, _| Ok(0.5)));
        assert_eq!(
            weighted_return(&traj, &z, 0.9, RewardTiming::Departure).unwrap(),
            (2.0, 0.5)
        );
        assert_eq!(
            weighted_return(&traj, &z, 0.9, RewardTiming::Arrival).unwrap(),
            (1.0, 0.5)
        );
    }

    fn grid_data(spec_g: GridworldSpec, delta: f64, n: usize, seed: u64) -> (TransitionDataset, Policy) {
        let (expert, _) = value_iteration_expert(&spec_g, 0.99, 1e-10).unwrap();
        let policy = Policy::grid_mixture(delta, expert).unwrap();
        let env = Gridworld::new(spec_g).unwrap();
        (
            collect_dataset(&env, &policy, 200, n, Source::Test, seed).unwrap(),
            policy,
        )
    }

    #[test]
    fn is_with_target_equal_to_behavior_is_the_plain_mean() {
        let (data, policy) = grid_data(grid(5, 0.1), 0.5, 5000, 3);
        let spec = DiscountSpec::new(0.99, 200, 1).unwrap();
        let r = is_ope_baseline(&data, &policy, &policy, &spec).unwrap();
        let plain: Vec<f64> = data.trajectories().iter().map(|t| t.discounted_return(0.99)).collect();
        assert_eq!(r.values, plain);
        assert_eq!(r.mean, plain.iter().sum::<f64>() / plain.len() as f64);
    }

    #[test]
    fn is_rejects_unsupported_actions() {
        let (data, _) = grid_data(grid(5, 0.1), 0.0, 500, 3);
        let (expert, _) = value_iteration_expert(&grid(5, 0.1), 0.99, 1e-10).unwrap();
        let spec = DiscountSpec::new(0.99, 200, 1).unwrap();
        assert!(matches!(
            is_ope_baseline(&data, &expert, &expert, &spec),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn tabular_mle_approaches_the_true_kernel() {
        // States and actions drawn uniformly so every pair is well covered.
        let spec_g = grid(3, 0.3);
        let mut r = rng::from_seed(9);
        let cells: Vec<Cell> = spec_g.cells().filter(|c| *c != spec_g.goal()).collect();
        let mut data = TransitionDataset::new(2, ActionSpec::Discrete(4), Source::Test);
        for _ in 0..1_000_000 {
            let c = cells[r.random_range(0..cells.len())];
            let a = r.random_range(0..N_ACTIONS);
            let s = spec_g.state_of(c);
            let step = crate::envs::gridworld::gridworld_step(&spec_g, &s, a, &mut r).unwrap();
            data.push(crate::types::Transition {
                t: 0,
                s,
                a: Action::Discrete(a),
                s_next: step.next,
                r: step.reward,
            })
            .unwrap();
        }
        let model = TabularGridModel::fit(&data, &spec_g, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for c in spec_g.cells() {
            if c == spec_g.goal() {
                continue;
            }
            for a in 0..N_ACTIONS {
                let (row, fallback) = model.distribution(c, a);
                assert!(!fallback, "cell {c:?} action {a} unvisited");
                for (n, p) in row {
                    worst = worst.max((p - spec_g.transition_prob(c, a, n).unwrap()).abs());
                }
            }
        }
        assert!(worst < 0.01, "worst deviation {worst}");
    }

    #[test]
    fn unvisited_pairs_fall_back_to_uniform_candidates() {
        let spec_g = grid(4, 0.3);
        let mut data = TransitionDataset::new(2, ActionSpec::Discrete(4), Source::Test);
        data.push(crate::types::Transition {
            t: 0,
            s: spec_g.state_of((0, 0)),
            a: Action::Discrete(NORTH),
            s_next: spec_g.state_of((0, 1)),
            r: -1.0,
        })
        .unwrap();
        let model = TabularGridModel::fit(&data, &spec_g, 1.0).unwrap();
        let (row, fallback) = model.distribution((1, 1), 0);
        assert!(fallback);
        assert_eq!(row.len(), 4);
        assert!(row.iter().all(|(_, p)| *p == 0.25));
        // Corner with one observation: candidates are stay, north, east.
        let (row, fallback) = model.distribution((0, 0), NORTH);
        assert!(!fallback);
        let p_north = row.iter().find(|(n, _)| *n == (0, 1)).unwrap().1;
        assert!((p_north - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_predicts_noiseless_steps() {
        let spec = CartpoleSpec {
            noise_std: 0.0,
            ..Default::default()
        };
        let env = Cartpole::new(spec).unwrap();
        let policy = Policy::Uniform { n_actions: 2 };
        let data = collect_dataset(&env, &policy, 100, 5000, Source::Test, 4).unwrap();
        let model = LinearGaussianModel::fit(&data, &env).unwrap();
        for sd in model.residual_std.iter().flatten() {
            assert!(*sd < 1e-2, "residual std {sd}");
        }
        let s = StateVec::new(vec![0.01, -0.02, 0.01, 0.03]).unwrap();
        let truth = crate::envs::cartpole::cartpole_mean_next(&spec, &s, 1).unwrap();
        let pred = model.predict_mean(&s, 1).unwrap();
        for (a, b) in truth.iter().zip(&pred) {
            assert!((a - b).abs() < 1e-2);
        }
    }
}
