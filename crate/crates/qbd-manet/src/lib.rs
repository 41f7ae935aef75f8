//! Dual-engine toolkit for a cell-partitioned two-hop relay MANET.
//!
//! The analytic side builds the per-slot event probabilities of the routing
//! protocol in closed form, assembles them into a quasi-birth-and-death (QBD)
//! chain for the network-queue, and solves it with matrix-geometric methods to
//! obtain per-node throughput capacity and the exact expected end-to-end
//! delay. The simulation side runs the same network slot by slot (mobility,
//! equivalent-class MAC scheduling, two-hop relay routing with full queue and
//! ID/ACK bookkeeping) so the two engines can be cross-validated.
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration and the CLI
//! live in the companion `qbd-manet-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod probability;
pub mod qbd;
pub mod sim;

pub use metrics::{summarize, RunMetrics};
pub use params::{build_params, NetworkParams, ParamError};
pub use probability::{compute_p_b, compute_table, f_growth, ProbabilityTable, TableError};
pub use qbd::{build_blocks, capacity, expected_delay, Capacity, QbdBlocks, QbdError, QbdSolution};
pub use sim::{run, Mobility, RawRun, SimConfig, SimWorld};
