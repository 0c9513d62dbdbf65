//! Simulation and verification toolkit for random-walk cover times of binary trees.
//!
//! The walk lives on `T_n`: a binary tree of depth `n` whose top vertex hangs from
//! an extra root `ρ`. The crate samples cover times directly ([`srw`]) and through
//! the branching structure of excursion counts ([`excursion`]), simulates the
//! Gaussian branching random walk and its derivative martingale ([`brw`]), the
//! 0-dimensional Bessel process and Brownian barrier probabilities ([`bessel`]),
//! and tests the resulting limit laws ([`stats`]). [`harness`] ties everything to
//! CSV sample files and JSON reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod brw;
pub mod error;
pub mod excursion;
pub mod harness;
pub mod mc;
pub mod rng;
pub mod srw;
pub mod stats;
pub mod tree;
pub mod variates;
pub mod verify;

pub use error::{Error, Result};
