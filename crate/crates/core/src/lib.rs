//! Numerical laboratory for maximum entropy production on truncated
//! velocity configuration spaces.
//!
//! The crate is organized bottom-up:
//!
//! - [`config_space`]: divergence-free Fourier bases, energy surfaces and the
//!   `m!/n!` restriction maps between cylinder subspaces.
//! - [`measures`]: densities on energy surfaces, the physical (uniform)
//!   measure, symmetrization over coefficient permutations.
//! - [`entropy`]: Baron-Jauch entropy estimators, entropy gaps and production
//!   rates.
//! - [`restriction`]: restriction of ball integrals to energy surfaces via a
//!   radial derivative, with a direct surface-quadrature cross-check.
//! - [`flow`]: a pseudo-spectral incompressible Navier-Stokes integrator on the
//!   periodic cube that supplies trajectories with known energies.
//! - [`mepp`]: verification harnesses and the admissibility selector.
//! - [`cli`]: config-driven experiment runner behind the `mepp-lab` binary.
//!
//! All Monte Carlo routines take an explicit seed. Work is split into fixed
//! size blocks, block `b` drawing from ChaCha8 stream `b` of the seed, and
//! partial results are merged in block order, so results do not depend on the
//! number of worker threads.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read better than zipped iterators in the small fixed-size
// linear algebra here.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config_space;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod measures;
pub mod mepp;
pub mod quadrature;
pub mod restriction;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
