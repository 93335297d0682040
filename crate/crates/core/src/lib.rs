//! Reconstructing the topology, dimension and metric of a configuration space
//! from the spectral data of quantum systems on two intervals.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bc_dynamics;
pub mod error;
pub mod gelfand;
pub mod interval_domain;
pub mod linalg;
pub mod measurement;
pub mod spectral_geometry;
pub mod spectral_solver;
pub mod tolerances;
pub mod topology_reconstruct;

pub use error::{Error, Result};
pub use linalg::C64;
