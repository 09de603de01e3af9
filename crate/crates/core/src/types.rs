//! Shared vocabulary: states, actions, transitions, datasets, policies and the
//! environment interface.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A point in the state space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVec(Vec<f64>);

impl StateVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("state must have at least one coordinate"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("state coordinate {i} is not finite")));
        }
        Ok(StateVec(values))
    }

    /// Builds a state from coordinates the caller has already validated.
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        StateVec(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for StateVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpec {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpec {
    /// Number of columns an action occupies in a dataset line.
    pub fn columns(&self) -> usize {
        match *self {
            ActionSpec::Discrete(_) => 1,
            ActionSpec::Continuous(d) => d,
        }
    }

    pub fn check(&self, a: &Action) -> Result<()> {
        match (self, a) {
            (ActionSpec::Discrete(n), Action::Discrete(i)) if i < n => Ok(()),
            (ActionSpec::Discrete(n), Action::Discrete(i)) => {
                Err(Error::Env(format!("action {i} out of range for {n} actions")))
            }
            (ActionSpec::Continuous(d), Action::Continuous(v)) => {
                if v.len() != *d {
                    Err(Error::Dimension {
                        expected: *d,
                        got: v.len(),
                    })
                } else if v.iter().any(|x| !x.is_finite()) {
                    Err(Error::Domain("continuous action is not finite".into()))
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::Env(format!("action {a:?} does not match spec {self}"))),
        }
    }
}

impl fmt::Display for ActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionSpec::Discrete(n) => write!(f, "discrete:{n}"),
            ActionSpec::Continuous(d) => write!(f, "continuous:{d}"),
        }
    }
}

impl FromStr for ActionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("bad action spec {s:?}")))?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::arg(format!("bad action count in {s:?}")))?;
        if n == 0 {
            return Err(Error::arg("action spec needs at least one action"));
        }
        match kind {
            "discrete" => Ok(ActionSpec::Discrete(n)),
            "continuous" => Ok(ActionSpec::Continuous(n)),
            _ => Err(Error::arg(format!("unknown action kind {kind:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn index(&self) -> Option<usize> {
        match self {
            Action::Discrete(i) => Some(*i),
            Action::Continuous(_) => None,
        }
    }

    /// Numeric encoding used as model input. Discrete actions become either a
    /// one-hot vector over `spec` or their index as a single real.
    pub fn encode(&self, spec: ActionSpec, one_hot: bool, out: &mut Vec<f64>) {
        match (self, spec) {
            (Action::Discrete(i), ActionSpec::Discrete(n)) if one_hot => {
                out.extend((0..n).map(|j| if j == *i { 1.0 } else { 0.0 }))
            }
            (Action::Discrete(i), _) => out.push(*i as f64),
            (Action::Continuous(v), _) => out.extend_from_slice(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub t: usize,
    pub s: StateVec,
    pub a: Action,
    pub s_next: StateVec,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Checks that time steps count up from zero and that each step starts
    /// where the previous one ended.
    pub fn validate(&self) -> Result<()> {
        for (i, tr) in self.transitions.iter().enumerate() {
            if tr.t != i {
                return Err(Error::arg(format!("step {i} carries time index {}", tr.t)));
            }
            if i > 0 && self.transitions[i - 1].s_next != tr.s {
                return Err(Error::arg(format!("trajectory breaks between steps {} and {i}", i - 1)));
            }
        }
        Ok(())
    }

    /// Σ γ^t r_t over the recorded steps.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut discount = 1.0;
        let mut total = 0.0;
        for tr in &self.transitions {
            total += discount * tr.r;
            discount *= gamma;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Train,
    Test,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Train => "train",
            Source::Test => "test",
        })
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Source::Train),
            "test" => Ok(Source::Test),
            _ => Err(Error::arg(format!("unknown dataset source {s:?}"))),
        }
    }
}

/// How a transition is turned into a model input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureEncoding {
    /// One-hot discrete actions (MLP inputs) instead of the raw index.
    pub one_hot: bool,
    /// Encode the next state as `s' - s`. This is a volume-preserving change
    /// of variables, so density ratios over (s, a, s') are unchanged.
    pub delta_next: bool,
}

impl FeatureEncoding {
    pub const RAW: FeatureEncoding = FeatureEncoding {
        one_hot: false,
        delta_next: false,
    };

    pub fn sa(&self, spec: ActionSpec, s: &StateVec, a: &Action) -> Vec<f64> {
        let mut x = Vec::with_capacity(s.dim() + 4);
        x.extend_from_slice(s.as_slice());
        a.encode(spec, self.one_hot, &mut x);
        x
    }

    pub fn sas(&self, spec: ActionSpec, s: &StateVec, a: &Action, s_next: &StateVec) -> Vec<f64> {
        let mut x = self.sa(spec, s, a);
        if self.delta_next {
            x.extend(s_next.as_slice().iter().zip(s.as_slice()).map(|(n, c)| n - c));
        } else {
            x.extend_from_slice(s_next.as_slice());
        }
        x
    }

    pub fn sa_dim(&self, state_dim: usize, spec: ActionSpec) -> usize {
        state_dim
            + match spec {
                ActionSpec::Discrete(n) if self.one_hot => n,
                other => other.columns(),
            }
    }

    pub fn sas_dim(&self, state_dim: usize, spec: ActionSpec) -> usize {
        self.sa_dim(state_dim, spec) + state_dim
    }
}

/// A bag of transitions collected in one environment under one behavior
/// policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    pub state_dim: usize,
    pub action_spec: ActionSpec,
    pub source: Source,
    pub behavior: String,
    pub seed: u64,
    pub records: Vec<Transition>,
}

impl TransitionDataset {
    pub fn new(state_dim: usize, action_spec: ActionSpec, source: Source) -> Self {
        TransitionDataset {
            state_dim,
            action_spec,
            source,
            behavior: String::new(),
            seed: 0,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, tr: Transition) -> Result<()> {
        self.check_record(&tr)?;
        self.records.push(tr);
        Ok(())
    }

    fn check_record(&self, tr: &Transition) -> Result<()> {
        for s in [&tr.s, &tr.s_next] {
            if s.dim() != self.state_dim {
                return Err(Error::Dimension {
                    expected: self.state_dim,
                    got: s.dim(),
                });
            }
        }
        self.action_spec.check(&tr.a)?;
        if !tr.r.is_finite() {
            return Err(Error::Domain("reward is not finite".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.records.iter().try_for_each(|tr| self.check_record(tr))
    }

    /// The first `n` records, keeping the metadata.
    pub fn prefix(&self, n: usize) -> TransitionDataset {
        TransitionDataset {
            records: self.records[..n.min(self.records.len())].to_vec(),
            behavior: self.behavior.clone(),
            ..*self
        }
    }

    /// Splits the records into episodes; a record with `t == 0` opens a new one.
    pub fn trajectories(&self) -> Vec<Trajectory> {
        let mut out: Vec<Trajectory> = Vec::new();
        for tr in &self.records {
            if tr.t == 0 || out.is_empty() {
                out.push(Trajectory::default());
            }
            out.last_mut().unwrap().transitions.push(tr.clone());
        }
        out
    }

    pub fn sa_features(&self, enc: FeatureEncoding) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|tr| enc.sa(self.action_spec, &tr.s, &tr.a))
            .collect()
    }

    pub fn sas_features(&self, enc: FeatureEncoding) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|tr| enc.sas(self.action_spec, &tr.s, &tr.a, &tr.s_next))
            .collect()
    }
}

/// A stationary policy.
///
/// Mixtures carry an explicit `(uniform_weight, expert_weight)` pair because
/// experiments disagree on which side the mixing parameter multiplies; use
/// [`Policy::grid_mixture`] or [`Policy::cartpole_mixture`] to build one.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Uniform {
        n_actions: usize,
    },
    /// Deterministic lookup over an `side x side` grid, indexed `y * side + x`.
    ExpertTable {
        side: usize,
        n_actions: usize,
        actions: Vec<usize>,
    },
    /// Deterministic two-action threshold rule: action 1 iff `w.s + b > 0`.
    ExpertLinear {
        weights: Vec<f64>,
        bias: f64,
    },
    Mixture {
        uniform_weight: f64,
        expert_weight: f64,
        expert: Box<Policy>,
    },
    /// Always plays the same action.
    Constant(Action),
    /// One-dimensional continuous action drawn from a mixture of Gaussians
    /// `(weight, mean, std)` and clipped to `[low, high]`.
    GaussianMixture {
        components: Vec<(f64, f64, f64)>,
        low: f64,
        high: f64,
    },
}

impl Policy {
    /// `(1 - delta) U + delta pi_E`.
    pub fn grid_mixture(delta: f64, expert: Policy) -> Result<Policy> {
        check_unit(delta)?;
        Ok(Policy::Mixture {
            uniform_weight: 1.0 - delta,
            expert_weight: delta,
            expert: Box::new(expert),
        })
    }

    /// `delta U + (1 - delta) pi_E`.
    pub fn cartpole_mixture(delta: f64, expert: Policy) -> Result<Policy> {
        check_unit(delta)?;
        Ok(Policy::Mixture {
            uniform_weight: delta,
            expert_weight: 1.0 - delta,
            expert: Box::new(expert),
        })
    }

    pub fn n_actions(&self) -> Option<usize> {
        match self {
            Policy::Uniform { n_actions } | Policy::ExpertTable { n_actions, .. } => Some(*n_actions),
            Policy::ExpertLinear { .. } => Some(2),
            Policy::Mixture { expert, .. } => expert.n_actions(),
            Policy::Constant(Action::Discrete(_)) => None,
            Policy::Constant(_) | Policy::GaussianMixture { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            Policy::Constant(a) => a.index().is_some(),
            Policy::GaussianMixture { .. } => false,
            _ => true,
        }
    }

    /// Action probabilities at `s` for discrete policies, summing to one.
    /// `Constant` discrete policies need the action count, so callers should
    /// prefer [`Policy::prob`] for those.
    pub fn action_probs(&self, s: &StateVec) -> Result<Vec<f64>> {
        match self {
            Policy::Uniform { n_actions } => Ok(vec![1.0 / *n_actions as f64; *n_actions]),
            Policy::ExpertTable {
                side,
                n_actions,
                actions,
            } => {
                if s.dim() != 2 {
                    return Err(Error::Dimension {
                        expected: 2,
                        got: s.dim(),
                    });
                }
                let (x, y) = (s[0], s[1]);
                let limit = *side as f64;
                if x < 0.0 || y < 0.0 || x >= limit || y >= limit {
                    return Err(Error::Domain(format!("state ({x}, {y}) outside the expert table")));
                }
                let idx = y as usize * side + x as usize;
                let mut p = vec![0.0; *n_actions];
                p[actions[idx]] = 1.0;
                Ok(p)
            }
            Policy::ExpertLinear { weights, bias } => {
                if weights.len() != s.dim() {
                    return Err(Error::Dimension {
                        expected: weights.len(),
                        got: s.dim(),
                    });
                }
                let score: f64 = weights.iter().zip(s.as_slice()).map(|(w, v)| w * v).sum::<f64>() + bias;
                Ok(if score > 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
            }
            Policy::Mixture {
                uniform_weight,
                expert_weight,
                expert,
            } => {
                let mut p = expert.action_probs(s)?;
                let u = uniform_weight / p.len() as f64;
                for v in &mut p {
                    *v = u + expert_weight * *v;
                }
                Ok(p)
            }
            Policy::Constant(Action::Discrete(i)) => {
                let mut p = vec![0.0; i + 1];
                p[*i] = 1.0;
                Ok(p)
            }
            _ => Err(Error::arg("continuous policies have no action table")),
        }
    }

    /// Probability of discrete action `a` at `s`.
    pub fn prob(&self, s: &StateVec, a: &Action) -> Result<f64> {
        let i = a
            .index()
            .ok_or_else(|| Error::arg("probability of a continuous action is undefined"))?;
        if let Policy::Constant(Action::Discrete(j)) = self {
            return Ok(if i == *j { 1.0 } else { 0.0 });
        }
        let p = self.action_probs(s)?;
        p.get(i)
            .copied()
            .ok_or_else(|| Error::Env(format!("action {i} out of range for {} actions", p.len())))
    }

    /// Draws `a ~ pi(.|s)`. Discrete policies consume exactly one uniform draw.
    pub fn sample(&self, s: &StateVec, rng: &mut Rng) -> Result<Action> {
        match self {
            Policy::Constant(a) => Ok(a.clone()),
            Policy::GaussianMixture { components, low, high } => {
                let total: f64 = components.iter().map(|c| c.0).sum();
                let mut u = rng.random::<f64>() * total;
                let mut chosen = components.last().ok_or_else(|| Error::arg("empty mixture"))?;
                for c in components {
                    if u < c.0 {
                        chosen = c;
                        break;
                    }
                    u -= c.0;
                }
                let normal = Normal::new(chosen.1, chosen.2).map_err(|e| Error::arg(e.to_string()))?;
                Ok(Action::Continuous(vec![normal.sample(rng).clamp(*low, *high)]))
            }
            _ => {
                let p = self.action_probs(s)?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, pi) in p.iter().enumerate() {
                    acc += pi;
                    if u < acc {
                        return Ok(Action::Discrete(i));
                    }
                }
                // u landed in the rounding slack above the last cumulative sum.
                let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(p.len() - 1);
                Ok(Action::Discrete(last))
            }
        }
    }
}

fn check_unit(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::arg(format!("mixing weight {delta} outside [0, 1]")))
    }
}

/// Discount factor, horizon and Monte Carlo budget for an evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSpec {
    pub gamma: f64,
    pub horizon: usize,
    pub n_rollouts: usize,
}

impl DiscountSpec {
    pub fn new(gamma: f64, horizon: usize, n_rollouts: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::arg(format!("discount {gamma} outside (0, 1]")));
        }
        if horizon == 0 || n_rollouts == 0 {
            return Err(Error::arg("horizon and rollout count must be positive"));
        }
        Ok(DiscountSpec {
            gamma,
            horizon,
            n_rollouts,
        })
    }
}

/// Whether a step's reward is a function of the state it leaves or of the
/// state it arrives in. Importance weights must cover every transition the
/// reward depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTiming {
    /// `r(s_t, a_t)`.
    Departure,
    /// `r(s_t, a_t, s_{t+1})`.
    Arrival,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: StateVec,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_spec(&self) -> ActionSpec;
    fn reset(&self, rng: &mut Rng) -> StateVec;
    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step>;

    fn reward_timing(&self) -> RewardTiming {
        RewardTiming::Departure
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_spec(&self) -> ActionSpec {
        (**self).action_spec()
    }
    fn reset(&self, rng: &mut Rng) -> StateVec {
        (**self).reset(rng)
    }
    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        (**self).step(s, a, rng)
    }
    fn reward_timing(&self) -> RewardTiming {
        (**self).reward_timing()
    }
}

/// Runs one episode of at most `spec.horizon` steps, stopping early only when
/// the environment reports an absorbing state.
pub fn rollout<E: Environment + ?Sized>(
    env: &E,
    policy: &Policy,
    spec: &DiscountSpec,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let mut s = env.reset(rng);
    let mut transitions = Vec::new();
    for t in 0..spec.horizon {
        let a = policy.sample(&s, rng)?;
        let step = env.step(&s, &a, rng)?;
        let done = step.done;
        transitions.push(Transition {
            t,
            s,
            a,
            s_next: step.next.clone(),
            r: step.reward,
        });
        if done {
            break;
        }
        s = step.next;
    }
    Ok(Trajectory { transitions })
}

/// Collects at least `n` transitions (then truncates to exactly `n`) by
/// running whole episodes under `policy`.
pub fn collect_dataset<E: Environment + ?Sized>(
    env: &E,
    policy: &Policy,
    horizon: usize,
    n: usize,
    source: Source,
    seed: u64,
) -> Result<TransitionDataset> {
    let spec = DiscountSpec::new(1.0, horizon, 1)?;
    let mut data = TransitionDataset::new(env.state_dim(), env.action_spec(), source);
    data.seed = seed;
    data.behavior = describe_policy(policy);
    let mut episode = 0u64;
    while data.len() < n {
        let mut rng = crate::rng::stream(seed, episode);
        let traj = rollout(env, policy, &spec, &mut rng)?;
        for tr in traj.transitions {
            if data.len() == n {
                break;
            }
            data.records.push(tr);
        }
        episode += 1;
    }
    Ok(data)
}

/// Short label stored in dataset headers.
pub fn describe_policy(policy: &Policy) -> String {
    match policy {
        Policy::Uniform { .. } => "uniform".into(),
        Policy::ExpertTable { .. } => "expert-table".into(),
        Policy::ExpertLinear { .. } => "expert-linear".into(),
        Policy::Mixture {
            uniform_weight,
            expert_weight,
            expert,
        } => format!(
            "mixture(u={uniform_weight},e={expert_weight},{})",
            describe_policy(expert)
        ),
        Policy::Constant(_) => "constant".into(),
        Policy::GaussianMixture { .. } => "gaussian-mixture".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn state(x: f64, y: f64) -> StateVec {
        StateVec::new(vec![x, y]).unwrap()
    }

    #[test]
    fn rejects_non_finite_states() {
        assert!(StateVec::new(vec![0.0, f64::NAN]).is_err());
        assert!(StateVec::new(vec![]).is_err());
    }

    #[test]
    fn uniform_policy_passes_chi_square() {
        let p = Policy::Uniform { n_actions: 4 };
        let mut r = rng::from_seed(11);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[p.sample(&state(0.0, 0.0), &mut r).unwrap().index().unwrap()] += 1;
        }
        let e = n as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 3 degrees of freedom, upper 0.001 quantile.
        assert!(chi2 < 16.266, "chi2 = {chi2}");
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let expert = Policy::ExpertTable {
            side: 2,
            n_actions: 4,
            actions: vec![2; 4],
        };
        let s = state(1.0, 0.0);
        let zero = Policy::grid_mixture(0.0, expert.clone()).unwrap();
        assert_eq!(zero.action_probs(&s).unwrap(), vec![0.25; 4]);
        let half = Policy::grid_mixture(0.5, expert.clone()).unwrap();
        let p = half.action_probs(&s).unwrap();
        assert!((p[2] - 0.625).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Same delta, other convention: expert weight 0.5 either way.
        let cart = Policy::cartpole_mixture(0.5, expert).unwrap();
        assert_eq!(cart.action_probs(&s).unwrap(), p);
        assert!(Policy::grid_mixture(1.5, Policy::Uniform { n_actions: 4 }).is_err());
    }

    #[test]
    fn expert_linear_checks_dimension() {
        let p = Policy::ExpertLinear {
            weights: vec![1.0, 1.0, 1.0, 1.0],
            bias: 0.0,
        };
        let mut r = rng::from_seed(0);
        assert!(matches!(
            p.sample(&state(0.0, 0.0), &mut r),
            Err(Error::Dimension { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn action_spec_round_trips_through_text() {
        for spec in [ActionSpec::Discrete(4), ActionSpec::Continuous(2)] {
            assert_eq!(spec.to_string().parse::<ActionSpec>().unwrap(), spec);
        }
        assert!("discrete:0".parse::<ActionSpec>().is_err());
    }

    #[test]
    fn trajectories_split_on_time_zero() {
        let mut d = TransitionDataset::new(2, ActionSpec::Discrete(4), Source::Test);
        for t in [0, 1, 0, 0, 1, 2] {
            d.push(Transition {
                t,
                s: state(0.0, 0.0),
                a: Action::Discrete(0),
                s_next: state(0.0, 0.0),
                r: -1.0,
            })
            .unwrap();
        }
        let lens: Vec<usize> = d.trajectories().iter().map(|t| t.len()).collect();
        assert_eq!(lens, vec![2, 1, 3]);
    }

    #[test]
    fn encoding_dimensions_agree_with_vectors() {
        let spec = ActionSpec::Discrete(4);
        for one_hot in [false, true] {
            let enc = FeatureEncoding {
                one_hot,
                delta_next: true,
            };
            let s = state(1.0, 2.0);
            let x = enc.sas(spec, &s, &Action::Discrete(3), &state(1.0, 3.0));
            assert_eq!(x.len(), enc.sas_dim(2, spec));
            assert_eq!(*x.last().unwrap(), 1.0);
        }
    }
}
