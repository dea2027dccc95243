//! Reconstruction of unknowns constrained to finite-dimensional manifolds of
//! functions from finitely many Fejér-smoothed Fourier measurements.
//!
//! The crate is organised bottom-up: [`funcspace`] and [`geometry`] provide
//! exact norms and volumes, [`manifolds`] wraps concrete families in charts,
//! [`forward`] and [`measurement`] model the data, [`reconstruct`] runs the
//! lattice + Landweber pipeline and [`stabilitylab`] estimates stability
//! constants and exponents.

pub mod config;
pub mod error;
pub mod forward;
pub mod funcspace;
pub mod geometry;
pub mod manifolds;
pub mod measurement;
pub mod quadrature;
pub mod reconstruct;
pub mod sampling;
pub mod stabilitylab;
pub mod stats;

pub use error::{Error, Result};
