//! fraclab: a numerical laboratory for fractional Allen-Cahn energies and
//! nonlocal minimal partitions.
//!
//! The crate discretizes the fractional Dirichlet energy, the multi-well
//! Allen-Cahn energy, the fractional 2s-perimeter and the sigma-weighted
//! partition energy on uniform lattices with an exterior collar, computes
//! minimizers and critical points at desk scale, and ships the experiment
//! harness used to verify the quantitative predictions (energy identities,
//! eps -> 0 rates, monotone densities, non-infiltration, s -> 1/2 limits).

pub mod constants;
pub mod conv;
pub mod error;
pub mod extension;
pub mod geom;
pub mod kernel;
pub mod lattice;
pub mod nonlocal;
pub mod quad;
pub mod wells;

pub use error::{Error, Result};
