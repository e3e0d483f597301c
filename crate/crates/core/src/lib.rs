//! Distributed false discovery rate control over a star network.
//!
//! A center node talks to `N` leaf nodes, each holding a batch of p-values.
//! The crate provides
//!
//! * generative p-value models and samplers ([`distmodel`]),
//! * null-proportion estimators ([`estimators`]),
//! * the BH family and proportion-matching calibration ([`procedures`]),
//! * the interval-grid selection machinery ([`greedy`]),
//! * the asymptotically optimal rejection regions and robustness bounds ([`oracleopt`]),
//! * message-level protocol simulation with bit accounting ([`netsim`]),
//! * a Monte Carlo experiment harness and CLI ([`expharness`]).
//!
//! Trials run on rayon when the `parallel` feature is on (the default) and
//! fall back to a plain sequential loop otherwise; see [`exec`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distmodel;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod expharness;
pub mod greedy;
pub mod netsim;
pub mod oracleopt;
pub mod procedures;

pub use error::{Error, Result};
