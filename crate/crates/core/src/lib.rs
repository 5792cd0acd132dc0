//! Cluster counting for the one-dimensional sticky gravitating gas.
//!
//! `n` point particles of mass `1/n` start at rest on the line, attract each
//! other with a force equal to the product of their masses and stick together
//! on contact. This crate computes when adjacent particles first share a
//! cluster (the merging times `T_{j,n}`) and the number of clusters `K_n(t)`
//! through three independent engines:
//!
//! * [`exact`]: closed-form minimisation over pairs of neighbouring blocks,
//!   `O(n^2)` per particle. The reference oracle.
//! * [`dynamics`]: an event-driven simulation of the actual trajectories with
//!   momentum-conserving merges, `O(n log n)` for the whole history.
//! * [`hull`]: `K_n(t)` as the number of strict vertices of a lower convex
//!   hull, `O(n)` per time point.
//!
//! [`model`] samples initial configurations and [`stats`] runs the Monte Carlo
//! experiments on top of the engines.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature enables
//! parallel replicates through rayon; results do not depend on it.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod hull;
pub mod math;
pub mod model;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Configuration, IncrementKind, IncrementModel, ModelSpec, ModelTag};
