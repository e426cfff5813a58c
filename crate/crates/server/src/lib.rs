//! Base-station HTTP service and command-line front end for `tunnel-blimp`.
//!
//! [`api`] serves the operator view of a [`BaseStation`](tunnel_blimp::BaseStation):
//! run browsing, live state, a server-sent frame stream, command submission
//! and artifact reports. [`cli`] wraps scenario runs, metrics, batch tables
//! and replays behind one binary.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod cli;
