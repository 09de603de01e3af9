//! Slippery n x n gridworld with an exact transition table.
//!
//! The agent starts in the bottom-left cell `(0, 0)` and the episode ends on
//! reaching the top-right cell. An action moves in its direction with
//! probability `1 - slip`; otherwise the agent moves in one of the other three
//! directions, each with probability `slip / 3`. A move that would leave the
//! grid keeps the agent in place, so the displaced mass accrues to staying.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{Action, ActionSpec, Environment, Policy, StateVec, Step};

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const N_ACTIONS: usize = 4;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridworldSpec {
    pub side: usize,
    pub slip: f64,
    pub step_reward: f64,
    pub goal_absorbing: bool,
}

impl GridworldSpec {
    pub fn new(side: usize, slip: f64) -> Result<Self> {
        let spec = GridworldSpec {
            side,
            slip,
            step_reward: -1.0,
            goal_absorbing: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::arg("grid side must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.slip) {
            return Err(Error::arg(format!("slip probability {} outside [0, 1)", self.slip)));
        }
        if !self.step_reward.is_finite() {
            return Err(Error::arg("step reward must be finite"));
        }
        Ok(())
    }

    pub fn start(&self) -> Cell {
        (0, 0)
    }

    pub fn goal(&self) -> Cell {
        (self.side - 1, self.side - 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.side).flat_map(move |y| (0..self.side).map(move |x| (x, y)))
    }

    pub fn index(&self, c: Cell) -> usize {
        c.1 * self.side + c.0
    }

    pub fn n_cells(&self) -> usize {
        self.side * self.side
    }

    pub fn cell_of(&self, s: &StateVec) -> Result<Cell> {
        if s.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: s.dim(),
            });
        }
        let (x, y) = (s[0], s[1]);
        let limit = self.side as f64;
        if x < 0.0 || y < 0.0 || x >= limit || y >= limit || x.fract() != 0.0 || y.fract() != 0.0 {
            return Err(Error::Domain(format!(
                "state ({x}, {y}) is not a cell of the {0}x{0} grid",
                self.side
            )));
        }
        Ok((x as usize, y as usize))
    }

    pub fn state_of(&self, c: Cell) -> StateVec {
        StateVec::from_finite(vec![c.0 as f64, c.1 as f64])
    }

    fn shift(&self, c: Cell, dir: usize) -> Cell {
        let (x, y) = c;
        match dir {
            NORTH if y + 1 < self.side => (x, y + 1),
            SOUTH if y > 0 => (x, y - 1),
            EAST if x + 1 < self.side => (x + 1, y),
            WEST if x > 0 => (x - 1, y),
            _ => c,
        }
    }

    /// Distinct cells reachable from `c` by any of the four moves.
    pub fn candidates(&self, c: Cell) -> Vec<Cell> {
        let mut out: Vec<Cell> = Vec::with_capacity(5);
        for d in 0..N_ACTIONS {
            let n = self.shift(c, d);
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }

    /// Exact next-cell distribution of `(c, a)`, outcomes in a fixed order.
    pub fn distribution(&self, c: Cell, a: usize) -> Result<Vec<(Cell, f64)>> {
        if a >= N_ACTIONS {
            return Err(Error::Env(format!("action {a} out of range for {N_ACTIONS} actions")));
        }
        if self.goal_absorbing && c == self.goal() {
            return Ok(vec![(c, 1.0)]);
        }
        let mut out: Vec<(Cell, f64)> = Vec::with_capacity(5);
        for d in 0..N_ACTIONS {
            let p = if d == a { 1.0 - self.slip } else { self.slip / 3.0 };
            if p == 0.0 {
                continue;
            }
            let n = self.shift(c, d);
            match out.iter_mut().find(|(cell, _)| *cell == n) {
                Some(entry) => entry.1 += p,
                None => out.push((n, p)),
            }
        }
        Ok(out)
    }

    pub fn transition_prob(&self, c: Cell, a: usize, next: Cell) -> Result<f64> {
        Ok(self
            .distribution(c, a)?
            .into_iter()
            .find(|(n, _)| *n == next)
            .map_or(0.0, |(_, p)| p))
    }

    /// Reward collected on leaving `c`.
    pub fn reward(&self, c: Cell) -> f64 {
        if c == self.goal() {
            0.0
        } else {
            self.step_reward
        }
    }
}

/// `P(s'|s,a)` for states given as coordinate vectors.
pub fn gridworld_transition_prob(spec: &GridworldSpec, s: &StateVec, a: usize, s_next: &StateVec) -> Result<f64> {
    spec.transition_prob(spec.cell_of(s)?, a, spec.cell_of(s_next)?)
}

/// Samples one step from the exact table with a single uniform draw.
pub fn gridworld_step(spec: &GridworldSpec, s: &StateVec, a: usize, rng: &mut Rng) -> Result<Step> {
    let c = spec.cell_of(s)?;
    let dist = spec.distribution(c, a)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut next = dist.last().unwrap().0;
    for (cell, p) in &dist {
        acc += p;
        if u < acc {
            next = *cell;
            break;
        }
    }
    Ok(Step {
        next: spec.state_of(next),
        reward: spec.reward(c),
        done: next == spec.goal(),
    })
}

/// `P_te(s'|s,a) / P_tr(s'|s,a)`.
pub fn true_zeta_gridworld(
    train: &GridworldSpec,
    test: &GridworldSpec,
    s: &StateVec,
    a: usize,
    s_next: &StateVec,
) -> Result<f64> {
    if train.side != test.side {
        return Err(Error::arg("train and test grids differ in size"));
    }
    let p_tr = gridworld_transition_prob(train, s, a, s_next)?;
    if p_tr <= 0.0 {
        return Err(Error::SupportViolation(format!(
            "training kernel assigns zero probability to {:?} -> {:?}",
            s.as_slice(),
            s_next.as_slice()
        )));
    }
    Ok(gridworld_transition_prob(test, s, a, s_next)? / p_tr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gridworld {
    pub spec: GridworldSpec,
}

impl Gridworld {
    pub fn new(spec: GridworldSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Gridworld { spec })
    }
}

impl Environment for Gridworld {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::Discrete(N_ACTIONS)
    }

    fn reset(&self, _rng: &mut Rng) -> StateVec {
        self.spec.state_of(self.spec.start())
    }

    fn step(&self, s: &StateVec, a: &Action, rng: &mut Rng) -> Result<Step> {
        self.action_spec().check(a)?;
        gridworld_step(&self.spec, s, a.index().unwrap(), rng)
    }
}

/// Greedy policy from value iteration on `spec`, iterated until the largest
/// value change drops below `tol`. Ties go to the lowest action index.
pub fn value_iteration_expert(spec: &GridworldSpec, gamma: f64, tol: f64) -> Result<(Policy, Vec<f64>)> {
    let n = spec.n_cells();
    let tables: Vec<Vec<Vec<(usize, f64)>>> = spec
        .cells()
        .map(|c| {
            (0..N_ACTIONS)
                .map(|a| {
                    spec.distribution(c, a)
                        .map(|d| d.into_iter().map(|(cell, p)| (spec.index(cell), p)).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let goal = spec.index(spec.goal());
    let mut v = vec![0.0; n];
    let q = |v: &[f64], i: usize, a: usize, r: f64| -> f64 {
        r + gamma * tables[i][a].iter().map(|(j, p)| p * v[*j]).sum::<f64>()
    };
    for _ in 0..1_000_000 {
        let mut change: f64 = 0.0;
        let mut next = vec![0.0; n];
        for (i, c) in spec.cells().enumerate() {
            if i == goal {
                continue;
            }
            let r = spec.reward(c);
            let best = (0..N_ACTIONS).map(|a| q(&v, i, a, r)).fold(f64::NEG_INFINITY, f64::max);
            change = change.max((best - v[i]).abs());
            next[i] = best;
        }
        v = next;
        if change < tol {
            break;
        }
    }
    let actions = spec
        .cells()
        .enumerate()
        .map(|(i, c)| {
            let r = spec.reward(c);
            let mut best = 0;
            for a in 1..N_ACTIONS {
                if q(&v, i, a, r) > q(&v, i, best, r) + 1e-12 {
                    best = a;
                }
            }
            best
        })
        .collect();
    Ok((
        Policy::ExpertTable {
            side: spec.side,
            n_actions: N_ACTIONS,
            actions,
        },
        v,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::types::{rollout, DiscountSpec};

    /// Independent enumeration of the slip model: walk every direction and
    /// add its mass to wherever the clipped move lands.
    fn enumerate(side: usize, slip: f64, c: Cell, a: usize) -> Vec<(Cell, f64)> {
        let moves: [(i64, i64); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];
        let mut out: Vec<(Cell, f64)> = Vec::new();
        for (d, (dx, dy)) in moves.iter().enumerate() {
            let p = if d == a { 1.0 - slip } else { slip / 3.0 };
            let (nx, ny) = (c.0 as i64 + dx, c.1 as i64 + dy);
            let inside = nx >= 0 && ny >= 0 && nx < side as i64 && ny < side as i64;
            let n = if inside { (nx as usize, ny as usize) } else { c };
            if let Some(e) = out.iter_mut().find(|e| e.0 == n) {
                e.1 += p;
            } else {
                out.push((n, p));
            }
        }
        out
    }

    #[test]
    fn interior_probabilities() {
        let spec = GridworldSpec::new(5, 0.3).unwrap();
        assert!((spec.transition_prob((2, 2), NORTH, (2, 3)).unwrap() - 0.7).abs() < 1e-15);
        assert!((spec.transition_prob((2, 2), NORTH, (3, 2)).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(spec.transition_prob((2, 2), NORTH, (2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn rows_match_enumeration_and_sum_to_one() {
        for &slip in &[0.0, 0.1, 0.3, 0.9] {
            let spec = GridworldSpec::new(4, slip).unwrap();
            for c in spec.cells().filter(|c| *c != spec.goal()) {
                for a in 0..N_ACTIONS {
                    let d = spec.distribution(c, a).unwrap();
                    let total: f64 = d.iter().map(|e| e.1).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for (cell, p) in enumerate(4, slip, c, a) {
                        assert!((spec.transition_prob(c, a, cell).unwrap() - p).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn corner_remaps_blocked_moves() {
        let spec = GridworldSpec::new(5, 0.3).unwrap();
        // Bottom-left corner, heading west: W and S both bounce back.
        let d = spec.distribution((0, 0), WEST).unwrap();
        assert_eq!(d.len(), 3);
        assert!((spec.transition_prob((0, 0), WEST, (0, 0)).unwrap() - 0.8).abs() < 1e-12);
        assert!((spec.transition_prob((0, 0), WEST, (0, 1)).unwrap() - 0.1).abs() < 1e-12);
        assert!((spec.transition_prob((0, 0), WEST, (1, 0)).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn no_slip_is_deterministic() {
        let spec = GridworldSpec::new(5, 0.0).unwrap();
        let mut r = rng::from_seed(3);
        for _ in 0..100 {
            let st = gridworld_step(&spec, &spec.state_of((2, 2)), NORTH, &mut r).unwrap();
            assert_eq!(st.next, spec.state_of((2, 3)));
        }
    }

    #[test]
    fn empirical_frequencies_within_binomial_bands() {
        let spec = GridworldSpec::new(5, 0.3).unwrap();
        let mut r = rng::from_seed(5);
        let n = 100_000;
        let s = spec.state_of((2, 2));
        let mut north = 0usize;
        let mut east = 0usize;
        for _ in 0..n {
            let st = gridworld_step(&spec, &s, NORTH, &mut r).unwrap();
            let c = spec.cell_of(&st.next).unwrap();
            north += (c == (2, 3)) as usize;
            east += (c == (3, 2)) as usize;
        }
        for (count, p) in [(north, 0.7), (east, 0.1)] {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((count as f64 - n as f64 * p).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn outside_cell_is_a_domain_error() {
        let spec = GridworldSpec::new(5, 0.3).unwrap();
        let s = StateVec::new(vec![5.0, 0.0]).unwrap();
        assert!(matches!(
            gridworld_step(&spec, &s, NORTH, &mut rng::from_seed(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zeta_examples() {
        let tr = GridworldSpec::new(10, 0.3).unwrap();
        let te = GridworldSpec::new(10, 0.1).unwrap();
        let s = tr.state_of((4, 4));
        let up = true_zeta_gridworld(&tr, &te, &s, NORTH, &tr.state_of((4, 5))).unwrap();
        assert!((up - 9.0 / 7.0).abs() < 1e-12);
        let side = true_zeta_gridworld(&tr, &te, &s, NORTH, &tr.state_of((5, 4))).unwrap();
        assert!((side - 1.0 / 3.0).abs() < 1e-12);
        let far = tr.state_of((7, 7));
        assert!(matches!(
            true_zeta_gridworld(&tr, &te, &s, NORTH, &far),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn deterministic_rollout_follows_hand_walked_path() {
        let spec = GridworldSpec::new(5, 0.0).unwrap();
        let env = Gridworld::new(spec).unwrap();
        // Alternate N and E by parity of x + y.
        let actions = spec
            .cells()
            .map(|(x, y)| if (x + y) % 2 == 0 { NORTH } else { EAST })
            .collect();
        let policy = Policy::ExpertTable {
            side: 5,
            n_actions: 4,
            actions,
        };
        let ds = DiscountSpec::new(1.0, 200, 1).unwrap();
        let traj = rollout(&env, &policy, &ds, &mut rng::from_seed(1)).unwrap();
        let cells: Vec<Cell> = traj
            .transitions
            .iter()
            .map(|t| spec.cell_of(&t.s_next).unwrap())
            .collect();
        assert_eq!(
            cells,
            vec![(0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)]
        );
        assert_eq!(traj.discounted_return(1.0), -8.0);
        traj.validate().unwrap();
    }

    #[test]
    fn expert_heads_for_the_goal() {
        let spec = GridworldSpec::new(6, 0.3).unwrap();
        let (policy, v) = value_iteration_expert(&spec, 0.99, 1e-10).unwrap();
        let s = spec.state_of((0, 0));
        let a = policy.action_probs(&s).unwrap().iter().position(|&p| p == 1.0).unwrap();
        assert!(a == NORTH || a == EAST);
        assert_eq!(v[spec.index(spec.goal())], 0.0);
        assert!(v[spec.index((0, 0))] < v[spec.index((4, 4))]);
    }
}
