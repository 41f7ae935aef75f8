//! Slot-level simulator of the cell-partitioned MANET.
//!
//! One run is strictly single-threaded and deterministic from its seed;
//! replications get independent RNG streams and may execute in parallel.

mod protocol;
mod world;

pub use protocol::{take_requested, NodeState, Packet};
pub use world::SimWorld;

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::params::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mobility {
    /// Every node jumps to a uniformly random cell each slot.
    Iid,
    /// Each slot a node moves uniformly within its 9-cell torus neighborhood.
    RandomWalk,
    /// Continuous position advanced by a per-slot displacement with both
    /// components uniform in `[1/m, 3/m)`, wrapped on the unit torus.
    RandomWaypoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub mobility: Mobility,
    pub slots: u64,
    pub warmup_slots: u64,
    pub seed: u64,
    /// Replication index; selects an independent RNG stream.
    pub replication: u64,
    /// Per-slot interference/conservation assertions (slower).
    pub debug_checks: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("warmup_slots = {warmup} must be smaller than slots = {slots}")]
    BadWindow { warmup: u64, slots: u64 },
}

/// One delivered packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryRecord {
    /// Source node of the flow.
    pub flow: u32,
    pub id: u64,
    pub gen_slot: u64,
    pub deliver_slot: u64,
}

/// Online statistics of the tagged source (node 0): its per-slot packet
/// departure indicator and the source-queue length it left behind.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaggedStats {
    pub slots: u64,
    pub departures: u64,
    /// Number of slots where both this slot and the previous one departed.
    pub consecutive_departures: u64,
    pub queue_len_sum: f64,
    /// Sum of queue length over departure slots, for the independence probe.
    pub queue_len_departure_sum: f64,
}

impl TaggedStats {
    pub fn departure_rate(&self) -> f64 {
        self.departures as f64 / self.slots as f64
    }

    /// Lag-1 autocorrelation of the departure indicator.
    pub fn lag1_autocorrelation(&self) -> f64 {
        let n = self.slots as f64;
        let mean = self.departures as f64 / n;
        let var = mean * (1.0 - mean);
        if var == 0.0 {
            return 0.0;
        }
        let cov = self.consecutive_departures as f64 / n - mean * mean;
        cov / var
    }
}

/// Everything a single replication produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRun {
    pub records: Vec<DeliveryRecord>,
    /// Per-flow counts over the whole run.
    pub generated: Vec<u64>,
    pub delivered: Vec<u64>,
    /// Deliveries that happened after warmup, for throughput estimation.
    pub delivered_post_warmup: u64,
    pub slots: u64,
    pub warmup_slots: u64,
    pub tagged: TaggedStats,
    pub interference_violations: u64,
    pub conservation_failures: u64,
}

/// Runs one replication. Identical inputs give a bit-identical result.
pub fn run(params: &NetworkParams, config: &SimConfig) -> Result<RawRun, SimError> {
    if config.warmup_slots >= config.slots {
        return Err(SimError::BadWindow { warmup: config.warmup_slots, slots: config.slots });
    }
    let mut world = SimWorld::new(params, config.mobility, config.seed, config.replication);
    let n = params.n as usize;
    let mut raw = RawRun {
        records: Vec::new(),
        generated: vec![0; n],
        delivered: vec![0; n],
        delivered_post_warmup: 0,
        slots: config.slots,
        warmup_slots: config.warmup_slots,
        tagged: TaggedStats::default(),
        interference_violations: 0,
        conservation_failures: 0,
    };
    for _ in 0..config.slots {
        world.step(config, &mut raw);
    }
    Ok(raw)
}
