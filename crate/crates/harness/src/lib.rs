//! Command-line harness: configuration files, experiment drivers, plots and
//! the `oee` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cem;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod plot;
