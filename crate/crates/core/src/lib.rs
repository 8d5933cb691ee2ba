//! Ballistic transport through graphene nanoconstrictions.
//!
//! * [`lattice`] builds honeycomb devices (ribbons, constrictions, edge
//!   disorder, Peierls field, onsite potentials).
//! * [`bands`] diagonalizes lead unit cells and holds the closed-form energy
//!   scales.
//! * [`transport`] computes Landauer transmission with recursive Green's
//!   functions and assembles gate sweeps and bias maps.
//! * [`analysis`] is the extraction pipeline shared by simulated and measured
//!   traces.
//! * [`workbench`] is the configuration-driven runner behind the CLI.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod analysis;
pub mod bands;
pub mod constants;
pub mod error;
pub mod lattice;
pub mod transport;
pub mod workbench;

pub use constants::PhysicalConstants;
pub use error::{ConfigIssue, Error, Result};
pub use lattice::{DeviceLattice, DisorderSpec, EdgeType, GeometrySpec, LatticeParams, Profile};
