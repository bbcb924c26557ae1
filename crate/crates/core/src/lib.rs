//! Distance from the nucleus to a uniformly random point in the 0-cell and the
//! typical cell of the d-dimensional Poisson-Voronoi tessellation.
//!
//! The crate bundles four independent routes to the same distributions:
//!
//! - closed forms ([`zerocell`], [`typical1d`], the moment-matched
//!   approximation in [`moments`]),
//! - the domain-configuration Monte Carlo integral for `d > 1`
//!   ([`typicalexact`]),
//! - direct simulation of Poisson point processes ([`simulate`]),
//! - the large-inball cap-covering probabilities ([`limitshape`]).
//!
//! Every distribution query carries a [`ModelParams`] (dimension and
//! intensity). Curves are emitted as [`curve::DistributionCurve`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod limitshape;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod specfun;
pub mod typical1d;
pub mod typicalexact;
pub mod zerocell;

pub use error::{Error, Result};
pub use zerocell::ModelParams;
