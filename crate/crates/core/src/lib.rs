//! Simulation and analysis toolkit for a two-wire magnetic storage ring for
//! cold neutral atoms.
//!
//! The crate is organised bottom-up:
//!
//! * [`magnetics`] evaluates guide and ring fields, trapping potentials and
//!   static trap properties.
//! * [`dynamics`] integrates single-atom motion and classical spin precession,
//!   and builds the current ramps that move atoms from the guide to the ring.
//! * [`ensemble`] samples thermal clouds and runs whole load/orbit/probe
//!   scenarios in parallel with deterministic per-atom random streams.
//! * [`analysis`] holds the revolution peak-train model, its least-squares fit
//!   and the derived figures of merit.
//! * [`scenario`] and [`cli`] provide the unit-checked scenario file format and
//!   the command-line front end.
//!
//! All quantities are SI internally.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod magnetics;
pub mod output;
pub mod rng;
pub mod scenario;
pub mod units;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};

/// Cartesian vector in metres, tesla, m/s ... depending on context.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix, used for field Jacobians `J[(i, k)] = dB_i / dx_k`.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Crate version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
