//! Off-environment evaluation: estimate how a policy performs in a test
//! environment using transitions collected in a training environment and a
//! small amount of test-environment data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod envs;
pub mod error;
pub mod io;
pub mod nn;
pub mod ratio;
pub mod report;
pub mod rng;
pub mod types;
pub mod zeta;

pub use error::{Error, Result};
pub use types::*;
