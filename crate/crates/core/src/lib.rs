//! Multi-agent online submodular maximization.
//!
//! Agents each own a disjoint block of actions and jointly maximize a stream
//! of monotone submodular objectives. Every agent keeps a belief vector over
//! the whole ground set, averages it with its neighbours through a doubly
//! stochastic weight matrix, estimates a curvature-aware surrogate gradient of
//! the multilinear extension on its own block and takes a mirror ascent step
//! (Euclidean projection or closed-form entropic update).
//!
//! Layout:
//!
//! * [`submod`]: ground sets, set-function oracles, multilinear extension, curvature.
//! * [`surrogate`]: the `e^{c(z-1)}` weighted surrogate gradient and its estimator.
//! * [`consensus`]: communication graphs, weight matrices, spectral diagnostics.
//! * [`mirror`]: Bregman divergences, capped-simplex projection, entropic update.
//! * [`coordinator`]: the round loops, rounding, OSG baseline and regret oracles.
//! * [`tracking`]: the multi-target tracking world and its objective.
//! * [`harness`]: configuration, replicated runs, reports and file output.
//! * [`validate`]: property sweeps used by the `validate-theory` command.

pub mod consensus;
pub mod coordinator;
pub mod error;
pub mod harness;
pub mod mirror;
pub mod par;
pub mod rng;
pub mod submod;
pub mod surrogate;
pub mod tracking;
pub mod validate;

pub use error::{Error, Result};
