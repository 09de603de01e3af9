//! One-step archery task: pick a launch angle, wind pushes the arrow sideways.
//!
//! The arrow lands at `launch * sin(2 theta) - drift * w` with wind
//! `w ~ N(wind_mean, wind_std^2)` and angle `theta` in radians. The reward is
//! minus the distance from the bull's eye at the origin. Every episode is a
//! single transition from the fixed state `[0]` to `[landing_x]`.

use rand_distr::{Distribution, Normal};

use super::gaussian::Gaussian;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{Action, ActionSpec, Environment, RewardTiming, StateVec, Step};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcherySpec {
    pub wind: Gaussian,
    pub launch: f64,
    pub drift: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl ArcherySpec {
    pub fn new(wind_mean: f64, wind_std: f64) -> Result<Self> {
        let spec = ArcherySpec {
            wind: Gaussian::new(wind_mean, wind_std)?,
            launch: 10.0,
            drift: 0.5,
            theta_min: 0.0,
            theta_max: std::f64::consts::FRAC_PI_2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.wind.validate()?;
        if !(self.drift > 0.0) || !self.launch.is_finite() {
            return Err(Error::arg(
                "archery needs a positive drift coefficient and finite launch speed",
            ));
        }
        if !(self.theta_min < self.theta_max) {
            return Err(Error::arg("empty angle range"));
        }
        Ok(())
    }

    pub fn landing_mean(&self, theta: f64) -> f64 {
        self.launch * (2.0 * theta).sin() - self.drift * self.wind.mean
    }

    /// Density of the landing point given the angle.
    pub fn landing_density(&self, theta: f64, x: f64) -> f64 {
        let w = (self.launch * (2.0 * theta).sin() - x) / self.drift;
        self.wind.pdf(w) / self.drift
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_finite() && theta >= self.theta_min && theta <= self.theta_max {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "angle {theta} outside [{}, {}]",
                self.theta_min, self.theta_max
            )))
        }
    }
}

pub fn archery_step(spec: &ArcherySpec, theta: f64, rng: &mut Rng) -> Result<Step> {
    spec.check_theta(theta)?;
    let wind = Normal::new(spec.wind.mean, spec.wind.std).map_err(|e| Error::arg(e.to_string()))?;
    let x = spec.launch * (2.0 * theta).sin() - spec.drift * wind.sample(rng);
    Ok(Step {
        next: StateVec::new(vec![x])?,
        reward: -x.abs(),
        done: true,
    })
}

/// Exact transition ratio between two archery environments.
pub fn true_zeta_archery(train: &ArcherySpec, test: &ArcherySpec, theta: f64, x: f64) -> Result<f64> {
    let p_tr = train.landing_density(theta, x);
    if p_tr <= 0.0 {
        return Err(Error::SupportViolation(format!("training density vanishes at x = {x}")));
    }
    Ok(test.landing_density(theta, x) / p_tr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Archery {
    pub spec: ArcherySpec,
}

impl Archery {
    pub fn new(spec: ArcherySpec) -> Result<Self> {
        spec.validate()?;
        Ok(Archery { spec })
    }
}

impl Environment for Archery {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Continuous(1)
    }

    fn reset(&self, _rng: &mut Rng) -> StateVec {
        StateVec::from_finite(vec![0.0])
    }

    fn step(&self, _s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        self.action_spec().check(a)?;
        match a {
            Action::Continuous(v) => archery_step(&self.spec, v[0], rng),
            Action::Discrete(_) => unreachable!("checked against the action spec"),
        }
    }

    fn reward_timing(&self) -> RewardTiming {
        RewardTiming::Arrival
    }
}
