//! Lower-bound machinery for k-means++ seeding in the plane.
//!
//! The crate builds a family of weighted two-dimensional instances on which
//! D² seeding rarely reaches an `O(log k)` approximation, runs the seeding
//! process on them, and evaluates the potential bounds and the covering
//! Markov chain that explain why.
//!
//! Modules:
//! - [`instance`]: the adversarial instance family and its closed forms.
//! - [`seeding`]: D² sampling, Lloyd refinement, and reproducible trials.
//! - [`evaluation`]: potentials, coverage, approximation ratios, and the
//!   per-state potential-bound checks.
//! - [`chain`]: the parameter schedule, the covering Markov chain, and its
//!   tail bounds.
//! - [`oracle`]: brute-force ground truth for tiny instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chain;
mod error;
pub mod evaluation;
pub mod instance;
pub mod oracle;
pub mod rng;
pub mod seeding;

pub use error::{Error, Result};
pub use instance::{build_instance, Instance, InstanceParams, Location, Point};
pub use rng::RngStream;
pub use seeding::{kmeanspp_seed, CenterSet, SeedingTrace, TrialRecord};
