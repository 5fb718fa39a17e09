//! Countable families of affine contractions on R^d: fixed points of
//! finite compositions, approximation of the smallest invariant set,
//! invariant measures sampled by chaos game, and a set of named
//! numerical checks over all of it.
//!
//! A family is countably many maps F_i(x) = r_i x + b_i whose rational
//! coefficients are expressions in the index i, truncated to 1 <= i <= N
//! for computation. Everything runs in two arithmetic lanes: exact
//! rationals wherever individual values are asserted (fixed points,
//! interval endpoints, series partial sums, hull residuals) and f64 for
//! bulk point-cloud work. The interesting regime is sup_i r_i = 1, where
//! the family stops being uniformly contractive, invariant sets lose
//! uniqueness, and only enlarged hulls remain invariant.
//!
//! One runnable program per capability lives in `examples/`:
//!
//! - `fixed_points` — exact map fixed points, composition enumeration
//! - `attractor` — iterate the union of images until the cloud is stable
//! - `chaos_game` — sample the invariant measure, check the Markov residual
//! - `invariant_measure_support` — measure support vs composition fixed points
//! - `enlargement` — eps-enlarged hulls stay invariant at ratio supremum 1
//! - `unbounded_fixed_points` — two maps whose compositions escape every bounded set
//! - `nondecreasing_interval` — the [inf D, sup D] shortcut for monotone maps
//! - `custom_family` — JSON-described families, higher dimensions
//! - `verify_claims` — the named checks behind `ifs verify`
//!
//! The `ifs` binary drives the same entry points from the command line
//! (`fixed-points | attractor | chaos | verify`).

pub mod cli;
pub mod cloud;
pub mod contraction;
pub mod error;
pub mod expr;
pub mod family;
pub mod measure;
pub mod rational;
pub mod setops;
pub mod verify;

pub use error::{Error, Result};
