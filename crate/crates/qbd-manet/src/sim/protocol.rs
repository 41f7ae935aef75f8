//! Per-node routing state: the three queue types and the ID/ACK bookkeeping.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// One unit packet. The destination is implied by the flow of `src`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub src: u32,
    /// Per-flow sequence number, starting at 1.
    pub id: u64,
    pub gen_slot: u64,
}

/// Queues and counters of one node.
///
/// `relay_queues` is indexed by flow destination; the slots for the node
/// itself and for its own destination stay permanently empty.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// Exogenous packets not yet distributed.
    pub source_queue: VecDeque<Packet>,
    /// Own packets already distributed but not yet acknowledged.
    pub broadcast_queue: VecDeque<Packet>,
    /// Carried copies for other flows, keyed by destination node id.
    pub relay_queues: Vec<VecDeque<Packet>>,
    /// Next ID this node assigns to a generated packet.
    pub next_id: u64,
    /// Highest in-order ID received by this node as a destination.
    pub ack: u64,
}

impl NodeState {
    pub fn new(n: usize) -> Self {
        let mut relay_queues = Vec::with_capacity(n);
        relay_queues.resize_with(n, VecDeque::new);
        Self {
            source_queue: VecDeque::new(),
            broadcast_queue: VecDeque::new(),
            relay_queues,
            next_id: 1,
            ack: 0,
        }
    }
}

/// Handshake outcome against one FIFO: if the packet with `id == ack + 1` is
/// present, removes it together with every stale packet (`id <= ack`) and
/// returns it. Leaves the queue untouched otherwise.
pub fn take_requested(queue: &mut VecDeque<Packet>, ack: u64) -> Option<Packet> {
    // IDs are strictly increasing front to back, so the candidate sits right
    // after the stale prefix.
    let mut idx = 0;
    while idx < queue.len() && queue[idx].id <= ack {
        idx += 1;
    }
    if idx < queue.len() && queue[idx].id == ack + 1 {
        let packet = queue[idx];
        queue.drain(0..=idx);
        Some(packet)
    } else {
        None
    }
}
