//! Classic cart-pole with explicit Euler integration, configurable gravity
//! and additive Gaussian noise on the next state.
//!
//! State is `[x, x_dot, theta, theta_dot]`; action 0 pushes left, 1 right.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{Action, ActionSpec, Environment, StateVec, Step};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartpoleSpec {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force: f64,
    pub dt: f64,
    pub noise_std: f64,
    pub x_limit: f64,
    pub theta_limit: f64,
}

impl Default for CartpoleSpec {
    fn default() -> Self {
        CartpoleSpec {
            gravity: 10.0,
            mass_cart: 1.0,
            mass_pole: 0.1,
            half_length: 0.5,
            force: 10.0,
            dt: 0.02,
            noise_std: 1e-3,
            x_limit: 2.4,
            theta_limit: 12.0 * std::f64::consts::PI / 180.0,
        }
    }
}

impl CartpoleSpec {
    pub fn with_gravity(gravity: f64) -> Self {
        CartpoleSpec {
            gravity,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0) {
            return Err(Error::arg("noise std must be nonnegative"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::arg("timestep must be positive"));
        }
        if ![
            self.gravity,
            self.mass_cart,
            self.mass_pole,
            self.half_length,
            self.force,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return Err(Error::arg("cart-pole constants must be finite"));
        }
        Ok(())
    }

    pub fn terminal(&self, s: &[f64]) -> bool {
        s[0].abs() > self.x_limit || s[2].abs() > self.theta_limit
    }
}

fn check_state(s: &StateVec) -> Result<()> {
    if s.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: s.dim(),
        });
    }
    Ok(())
}

/// `(x_acc, theta_acc)` at `s` under push `a`.
pub fn cartpole_accelerations(spec: &CartpoleSpec, s: &StateVec, a: usize) -> Result<(f64, f64)> {
    check_state(s)?;
    if a > 1 {
        return Err(Error::Env(format!("action {a} out of range for 2 actions")));
    }
    let force = if a == 1 { spec.force } else { -spec.force };
    let (theta, theta_dot) = (s[2], s[3]);
    let total_mass = spec.mass_cart + spec.mass_pole;
    let pole_ml = spec.mass_pole * spec.half_length;
    let (sin, cos) = theta.sin_cos();
    let temp = (force + pole_ml * theta_dot * theta_dot * sin) / total_mass;
    let theta_acc =
        (spec.gravity * sin - cos * temp) / (spec.half_length * (4.0 / 3.0 - spec.mass_pole * cos * cos / total_mass));
    let x_acc = temp - pole_ml * theta_acc * cos / total_mass;
    Ok((x_acc, theta_acc))
}

/// Noise-free Euler update.
pub fn cartpole_mean_next(spec: &CartpoleSpec, s: &StateVec, a: usize) -> Result<[f64; 4]> {
    let (x_acc, theta_acc) = cartpole_accelerations(spec, s, a)?;
    Ok([
        s[0] + spec.dt * s[1],
        s[1] + spec.dt * x_acc,
        s[2] + spec.dt * s[3],
        s[3] + spec.dt * theta_acc,
    ])
}

/// One step. Four standard normals are always drawn, so runs that differ only
/// in `noise_std` see the same noise directions.
pub fn cartpole_step(spec: &CartpoleSpec, s: &StateVec, a: usize, rng: &mut Rng) -> Result<Step> {
    let mut next = cartpole_mean_next(spec, s, a)?;
    for v in &mut next {
        let z: f64 = rng.sample(StandardNormal);
        *v += spec.noise_std * z;
    }
    let next = StateVec::new(next.to_vec())?;
    let done = spec.terminal(next.as_slice());
    Ok(Step {
        next,
        reward: 1.0,
        done,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cartpole {
    pub spec: CartpoleSpec,
}

impl Cartpole {
    pub fn new(spec: CartpoleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Cartpole { spec })
    }
}

impl Environment for Cartpole {
    fn state_dim(&self) -> usize {
        4
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Discrete(2)
    }

    fn reset(&self, rng: &mut Rng) -> StateVec {
        StateVec::from_finite((0..4).map(|_| rng.random_range(-0.05..0.05)).collect())
    }

    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        self.action_spec().check(a)?;
        cartpole_step(&self.spec, s, a.index().unwrap(), rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn mirror(s: &[f64]) -> Vec<f64> {
        s.iter().map(|v| -v).collect()
    }

    #[test]
    fn noiseless_dynamics_are_mirror_symmetric() {
        let spec = CartpoleSpec {
            noise_std: 0.0,
            ..Default::default()
        };
        let mut left = StateVec::new(vec![0.0; 4]).unwrap();
        let mut right = left.clone();
        let mut r = rng::from_seed(1);
        for t in 0..20 {
            let a = t % 2;
            let l = cartpole_step(&spec, &left, a, &mut r).unwrap();
            let rr = cartpole_step(&spec, &right, 1 - a, &mut r).unwrap();
            assert_eq!(l.next.as_slice(), mirror(rr.next.as_slice()).as_slice());
            left = l.next;
            right = rr.next;
        }
    }

    #[test]
    fn stronger_gravity_accelerates_the_pole_faster() {
        let s = StateVec::new(vec![0.0, 0.0, 0.05, 0.0]).unwrap();
        for a in 0..2 {
            let (_, g10) = cartpole_accelerations(&CartpoleSpec::with_gravity(10.0), &s, a).unwrap();
            let (_, g15) = cartpole_accelerations(&CartpoleSpec::with_gravity(15.0), &s, a).unwrap();
            // Hand evaluation: the gravity term adds g sin(theta) / (l (4/3 - m cos^2 / M)).
            let cos2 = 0.05f64.cos().powi(2);
            let gain = 5.0 * 0.05f64.sin() / (0.5 * (4.0 / 3.0 - 0.1 * cos2 / 1.1));
            assert!((g15 - g10 - gain).abs() < 1e-12);
        }
        let (_, g10) = cartpole_accelerations(&CartpoleSpec::with_gravity(10.0), &s, 0).unwrap();
        let (_, g15) = cartpole_accelerations(&CartpoleSpec::with_gravity(15.0), &s, 0).unwrap();
        assert!(g15.abs() > g10.abs());
    }

    #[test]
    fn noise_has_the_configured_scale() {
        let clean = CartpoleSpec {
            noise_std: 0.0,
            ..Default::default()
        };
        let noisy = CartpoleSpec::default();
        let s = StateVec::new(vec![0.01, -0.02, 0.03, 0.01]).unwrap();
        let n = 10_000;
        let mut diffs: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
        let (mut r1, mut r2) = (rng::from_seed(9), rng::from_seed(9));
        for _ in 0..n {
            let a = cartpole_step(&clean, &s, 1, &mut r1).unwrap();
            let b = cartpole_step(&noisy, &s, 1, &mut r2).unwrap();
            for (k, d) in diffs.iter_mut().enumerate() {
                d.push(b.next[k] - a.next[k]);
            }
        }
        for d in diffs {
            let m = d.iter().sum::<f64>() / n as f64;
            let sd = (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            assert!((sd - 1e-3).abs() < 5e-5, "sd = {sd}");
        }
    }

    #[test]
    fn reward_is_one_and_termination_uses_bounds() {
        let spec = CartpoleSpec::default();
        let s = StateVec::new(vec![0.0, 0.0, 0.3, 0.0]).unwrap();
        let st = cartpole_step(&spec, &s, 0, &mut rng::from_seed(0)).unwrap();
        assert_eq!(st.reward, 1.0);
        assert!(st.done);
        assert!(cartpole_step(&spec, &s, 2, &mut rng::from_seed(0)).is_err());
    }
}
