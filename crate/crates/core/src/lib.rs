//! Queueing models, workload generators, simulators and capacity planning
//! for comparing edge deployments against a centralized cloud.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod capacity;
pub mod desim;
mod error;
pub mod harness;
pub mod workload;

pub use error::{Error, Result};
