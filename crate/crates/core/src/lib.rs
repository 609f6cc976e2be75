//! School bus routing by shareability-network decomposition.
//!
//! Stages: [`metric`] → [`compression::select_stops`] →
//! [`compression::build_network`] → [`compression::prune_edges`] →
//! [`trips::enumerate_trips`] → [`cover::solve_cover`] →
//! [`cover::repair_to_partition`]. [`pipeline::solve`] runs them in order.

// `!(x > y)` is used on purpose so that NaN parameters are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clock;
pub mod compression;
pub mod cover;
pub mod emit;
pub mod error;
pub mod formats;
pub mod instance;
pub mod metric;
pub mod pipeline;
pub mod synthetic;
pub mod trips;
pub mod tsp;

pub use error::{Result, SbrpError};
pub use instance::Instance;
