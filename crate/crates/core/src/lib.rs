//! Joint beamforming and antenna placement for multi-waveguide pinching-antenna
//! downlinks with movement energy.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: geometry, channels, SINR, energy and feasibility audits.
//! - [`conic`]: a small conic-program builder on top of an interior-point solver.
//! - [`beamforming`]: minimum-power beamforming for fixed channels.
//! - [`admm`]: joint design for continuously movable antennas.
//! - [`bcd`]: joint design for antennas restricted to candidate positions.
//! - [`baselines`]: conventional-array and restricted PASS reference schemes.
//! - [`oracles`]: brute-force reference solutions for small instances.
//! - [`config`]: scenario files and seeded user drops.
//! - [`experiment`]: seeded runs, parameter sweeps and result tables.
//! - [`report`]: run outcomes shared by every algorithm.

// Index loops mirror the formulas, and negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod baselines;
pub mod bcd;
pub mod beamforming;
pub mod config;
pub mod conic;
pub mod experiment;
pub mod model;
pub mod oracles;
pub mod report;

pub use conic::{Affine, ComplexAffine, ConicError, ConicProblem, ConicSolution, ConicStatus};
pub use model::*;
pub use report::{IterationRecord, SolveReport, SolveStatus};
