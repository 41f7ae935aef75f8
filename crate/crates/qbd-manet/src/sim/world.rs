//! World state and the per-slot update loop.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::protocol::{take_requested, NodeState, Packet};
use super::{DeliveryRecord, Mobility, RawRun, SimConfig};
use crate::params::NetworkParams;

/// Full simulator state for one replication.
pub struct SimWorld {
    params: NetworkParams,
    mobility: Mobility,
    slot: u64,
    /// Cell index per node, `(cx, cy)` in `[0, m)^2`.
    positions: Vec<(u16, u16)>,
    /// Continuous positions, maintained only under the waypoint model.
    cont_positions: Vec<(f64, f64)>,
    /// Flow map: `flows[i]` is the destination of node `i`'s flow.
    flows: Vec<u32>,
    /// Inverse flow map: `sources[i]` is the node whose flow targets `i`.
    sources: Vec<u32>,
    nodes: Vec<NodeState>,
    rng: ChaCha8Rng,
    /// Node lists per cell, rebuilt every slot.
    occupancy: Vec<Vec<u32>>,
    /// Scratch: receiver pairs `(transmitter, receiver)` of the current slot.
    receivers: Vec<(u32, u32)>,
    tagged_departure: bool,
    tagged_departure_prev: bool,
}

impl SimWorld {
    /// Permutation traffic as a cyclic shift: node `i` sends to `i + 1 mod n`.
    pub fn new(params: &NetworkParams, mobility: Mobility, seed: u64, replication: u64) -> Self {
        let n = params.n as usize;
        let m = params.m as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        let mut world = Self {
            params: *params,
            mobility,
            slot: 0,
            positions: vec![(0, 0); n],
            cont_positions: vec![(0.0, 0.0); n],
            flows: (0..n as u32).map(|i| (i + 1) % n as u32).collect(),
            sources: (0..n as u32).map(|i| (i + n as u32 - 1) % n as u32).collect(),
            nodes: (0..n).map(|_| NodeState::new(n)).collect(),
            rng,
            occupancy: vec![Vec::new(); m * m],
            receivers: Vec::new(),
            tagged_departure: false,
            tagged_departure_prev: false,
        };
        // initial placement is uniform under every model
        for i in 0..n {
            let x = world.rng.random_range(0.0..1.0);
            let y = world.rng.random_range(0.0..1.0);
            world.cont_positions[i] = (x, y);
            world.positions[i] = ((x * m as f64) as u16, (y * m as f64) as u16);
        }
        world
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Active equivalent class of the current slot (deterministic round-robin).
    pub fn active_ec(&self) -> u32 {
        (self.slot % self.params.num_ecs() as u64) as u32
    }

    pub fn position(&self, node: u32) -> (u16, u16) {
        self.positions[node as usize]
    }

    pub fn node(&self, node: u32) -> &NodeState {
        &self.nodes[node as usize]
    }

    pub fn destination_of(&self, node: u32) -> u32 {
        self.flows[node as usize]
    }

    /// Test/setup hook: place a node at an explicit cell.
    pub fn set_position(&mut self, node: u32, cell: (u16, u16)) {
        assert!((cell.0 as u32) < self.params.m && (cell.1 as u32) < self.params.m);
        self.positions[node as usize] = cell;
        let m = self.params.m as f64;
        self.cont_positions[node as usize] =
            ((cell.0 as f64 + 0.5) / m, (cell.1 as f64 + 0.5) / m);
    }

    pub fn step_mobility(&mut self) {
        let m = self.params.m;
        match self.mobility {
            Mobility::Iid => {
                for p in &mut self.positions {
                    *p = (
                        self.rng.random_range(0..m) as u16,
                        self.rng.random_range(0..m) as u16,
                    );
                }
            }
            Mobility::RandomWalk => {
                for p in &mut self.positions {
                    let pick = self.rng.random_range(0..9u32);
                    let dx = pick % 3;
                    let dy = pick / 3;
                    p.0 = ((p.0 as u32 + m + dx - 1) % m) as u16;
                    p.1 = ((p.1 as u32 + m + dy - 1) % m) as u16;
                }
            }
            Mobility::RandomWaypoint => {
                let mf = m as f64;
                for (cont, cell) in self.cont_positions.iter_mut().zip(&mut self.positions) {
                    let dx = self.rng.random_range(1.0 / mf..3.0 / mf);
                    let dy = self.rng.random_range(1.0 / mf..3.0 / mf);
                    cont.0 = (cont.0 + dx) % 1.0;
                    cont.1 = (cont.1 + dy) % 1.0;
                    *cell = ((cont.0 * mf) as u16, (cont.1 * mf) as u16);
                }
            }
        }
    }

    /// Recomputes the per-cell node lists; call after manual placement before
    /// invoking the scheduling or routing steps directly.
    pub fn rebuild_occupancy(&mut self) {
        for cell in &mut self.occupancy {
            cell.clear();
        }
        let m = self.params.m as usize;
        for (i, &(x, y)) in self.positions.iter().enumerate() {
            self.occupancy[y as usize * m + x as usize].push(i as u32);
        }
    }

    /// One transmitter per non-empty active cell, chosen uniformly.
    pub fn schedule_slot(&mut self) -> Vec<u32> {
        let m = self.params.m;
        let alpha = self.params.alpha;
        let ec = self.active_ec();
        let (ecx, ecy) = (ec % alpha, ec / alpha);
        let mut transmitters = Vec::new();
        let mut cy = ecy;
        while cy < m {
            let mut cx = ecx;
            while cx < m {
                let cell = &self.occupancy[(cy * m + cx) as usize];
                match cell.len() {
                    0 => {}
                    1 => transmitters.push(cell[0]),
                    k => transmitters.push(cell[self.rng.random_range(0..k)]),
                }
                cx += alpha;
            }
            cy += alpha;
        }
        transmitters
    }

    /// All nodes in the 9 coverage cells of `center`, excluding `center` itself.
    fn coverage_nodes(&self, center: u32, out: &mut Vec<u32>) {
        out.clear();
        let m = self.params.m;
        let (cx, cy) = self.positions[center as usize];
        for dy in 0..3u32 {
            let y = (cy as u32 + m + dy - 1) % m;
            for dx in 0..3u32 {
                let x = (cx as u32 + m + dx - 1) % m;
                for &node in &self.occupancy[(y * m + x) as usize] {
                    if node != center {
                        out.push(node);
                    }
                }
            }
        }
    }

    /// One routing decision of transmitter `tx`: packet-broadcast with
    /// probability `q`, packet-delivery otherwise.
    pub fn execute_2hr(&mut self, tx: u32, raw: &mut RawRun) {
        if self.rng.random_bool(self.params.q) {
            self.execute_broadcast(tx, raw);
        } else {
            let mut candidates = Vec::new();
            self.coverage_nodes(tx, &mut candidates);
            if candidates.is_empty() {
                return; // nobody to hand a packet to
            }
            let receiver = candidates[self.rng.random_range(0..candidates.len())];
            self.execute_delivery(tx, receiver, raw);
        }
    }

    /// Head-of-line packet of the source-queue is copied to every node in the
    /// coverage cells; the destination keeps it only if it is the one it is
    /// currently requesting.
    pub fn execute_broadcast(&mut self, tx: u32, raw: &mut RawRun) {
        let Some(packet) = self.nodes[tx as usize].source_queue.pop_front() else {
            return; // idle slot
        };
        let dest = self.flows[tx as usize];
        let mut listeners = Vec::new();
        self.coverage_nodes(tx, &mut listeners);
        for &node in &listeners {
            self.receivers.push((tx, node));
            if node == dest {
                if packet.id == self.nodes[node as usize].ack + 1 {
                    self.nodes[node as usize].ack += 1;
                    self.record_delivery(raw, packet);
                }
                // otherwise the destination discards the copy
            } else {
                self.nodes[node as usize].relay_queues[dest as usize].push_back(packet);
            }
        }
        self.nodes[tx as usize].broadcast_queue.push_back(packet);
        self.tagged_departure |= tx == 0;
    }

    /// Handshake with `receiver`: look up the queue serving `receiver`'s flow
    /// and hand over the packet it is requesting, if present.
    pub fn execute_delivery(&mut self, tx: u32, receiver: u32, raw: &mut RawRun) {
        self.receivers.push((tx, receiver));
        let flow_src = self.sources[receiver as usize];
        let ack = self.nodes[receiver as usize].ack;
        let queue = if flow_src == tx {
            &mut self.nodes[tx as usize].broadcast_queue
        } else {
            &mut self.nodes[tx as usize].relay_queues[receiver as usize]
        };
        if let Some(packet) = take_requested(queue, ack) {
            self.nodes[receiver as usize].ack += 1;
            self.record_delivery(raw, packet);
        }
    }

    fn record_delivery(&self, raw: &mut RawRun, packet: Packet) {
        raw.delivered[packet.src as usize] += 1;
        if self.slot >= raw.warmup_slots {
            raw.delivered_post_warmup += 1;
        }
        raw.records.push(DeliveryRecord {
            flow: packet.src,
            id: packet.id,
            gen_slot: packet.gen_slot,
            deliver_slot: self.slot,
        });
    }

    /// Appends one exogenous packet at `src`, stamped with the current slot.
    pub fn generate_packet(&mut self, src: u32, raw: &mut RawRun) {
        let node = &mut self.nodes[src as usize];
        let packet = Packet { src, id: node.next_id, gen_slot: self.slot };
        node.next_id += 1;
        node.source_queue.push_back(packet);
        raw.generated[src as usize] += 1;
    }

    /// Bernoulli arrivals at every source.
    pub fn step_traffic(&mut self, raw: &mut RawRun) {
        for i in 0..self.params.n {
            if self.rng.random_bool(self.params.lambda) {
                self.generate_packet(i, raw);
            }
        }
    }

    /// Advances the world by one full slot: mobility, MAC scheduling, routing,
    /// then traffic arrivals (a packet generated in slot `t` first competes for
    /// service in slot `t + 1`).
    pub fn step(&mut self, config: &SimConfig, raw: &mut RawRun) {
        self.step_mobility();
        self.rebuild_occupancy();
        self.receivers.clear();
        self.tagged_departure = false;
        let tagged_queue_len = self.nodes[0].source_queue.len();
        let transmitters = self.schedule_slot();
        for &tx in &transmitters {
            self.execute_2hr(tx, raw);
        }
        if config.debug_checks {
            raw.interference_violations += self.interference_violations(&transmitters);
            if self.slot % 4096 == 0 {
                raw.conservation_failures += self.conservation_failures();
            }
        }
        if self.slot >= config.warmup_slots {
            let t = &mut raw.tagged;
            t.slots += 1;
            if self.tagged_departure {
                t.departures += 1;
                if self.tagged_departure_prev {
                    t.consecutive_departures += 1;
                }
                t.queue_len_departure_sum += tagged_queue_len as f64;
            }
            t.queue_len_sum += tagged_queue_len as f64;
        }
        self.tagged_departure_prev = self.tagged_departure;
        self.step_traffic(raw);
        self.slot += 1;
    }

    /// Protocol-model check: every scheduled receiver must be at least
    /// `(1 + delta) * r` away from every other concurrent transmitter. Cell
    /// positions use the worst case over the two cells; the waypoint model is
    /// checked with exact continuous positions.
    fn interference_violations(&self, transmitters: &[u32]) -> u64 {
        let guard = (1.0 + self.params.delta) * self.params.r;
        let mut violations = 0;
        for &(tx, rx) in &self.receivers {
            for &other in transmitters {
                if other == tx {
                    continue;
                }
                let d = match self.mobility {
                    Mobility::RandomWaypoint => {
                        torus_dist(self.cont_positions[other as usize], self.cont_positions[rx as usize])
                    }
                    _ => self.min_cell_dist(other, rx),
                };
                if d < guard - 1e-12 {
                    violations += 1;
                }
            }
        }
        violations
    }

    /// Smallest possible Euclidean distance between two nodes known only by cell.
    fn min_cell_dist(&self, a: u32, b: u32) -> f64 {
        let m = self.params.m as f64;
        let (ax, ay) = self.positions[a as usize];
        let (bx, by) = self.positions[b as usize];
        let dx = torus_cells(ax, bx, self.params.m).saturating_sub(1) as f64;
        let dy = torus_cells(ay, by, self.params.m).saturating_sub(1) as f64;
        libm::sqrt(dx * dx + dy * dy) / m
    }

    /// Structural queue/counter invariants; returns the number of violated flows.
    fn conservation_failures(&self) -> u64 {
        let mut failures = 0;
        for i in 0..self.params.n as usize {
            let node = &self.nodes[i];
            let generated = node.next_id - 1;
            let in_source = node.source_queue.len() as u64;
            let delivered = self.nodes[self.flows[i] as usize].ack;
            let distributed = generated - in_source;
            let mut ok = delivered <= distributed && distributed <= generated;
            // source-queue holds exactly the contiguous undistributed suffix
            let mut expect = distributed + 1;
            for p in &node.source_queue {
                ok &= p.id == expect;
                expect += 1;
            }
            // every FIFO keeps strictly increasing IDs
            for q in node.relay_queues.iter().chain([&node.broadcast_queue]) {
                let mut prev = 0;
                for p in q {
                    ok &= p.id > prev;
                    prev = p.id;
                }
            }
            if !ok {
                failures += 1;
            }
        }
        failures
    }
}

fn torus_cells(a: u16, b: u16, m: u32) -> u32 {
    let d = (a as i32 - b as i32).unsigned_abs();
    d.min(m - d)
}

fn torus_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = libm::fabs(a.0 - b.0);
    let dx = dx.min(1.0 - dx);
    let dy = libm::fabs(a.1 - b.1);
    let dy = dy.min(1.0 - dy);
    libm::sqrt(dx * dx + dy * dy)
}
