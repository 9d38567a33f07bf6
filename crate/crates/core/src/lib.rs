//! Contextual bandits with decision-tree reward models.
//!
//! The tree policies fit a CART model per action and explore either by refitting on a bootstrap
//! resample of each action's history ([`policy::TreeBootstrap`]) or by Thompson sampling over
//! leaf counts ([`policy::TreeHeuristic`]). The crate is `no_std` (with `alloc`); file formats,
//! parallel replication and the command line live in the `treebandit` crate.

#![no_std]
// NaN-rejecting guards read `!(x > 0.0)` on purpose; dense numeric kernels index by position.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod env;
pub mod error;
pub mod harness;
pub mod linear;
pub mod math;
pub mod policy;
pub mod schema;
pub mod theory;
pub mod tree;

pub use error::{Error, Result};
