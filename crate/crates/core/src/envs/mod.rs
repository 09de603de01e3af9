pub mod archery;
pub mod cartpole;
pub mod gaussian;
pub mod gridworld;

pub use archery::{archery_step, true_zeta_archery, Archery, ArcherySpec};
pub use cartpole::{cartpole_accelerations, cartpole_step, Cartpole, CartpoleSpec};
pub use gaussian::{gaussian_pair_sample, true_gaussian_ratio, Gaussian, GaussianPairSpec};
pub use gridworld::{
    gridworld_step, gridworld_transition_prob, true_zeta_gridworld, value_iteration_expert, Gridworld, GridworldSpec,
};
