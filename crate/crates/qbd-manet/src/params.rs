//! Validated network parameters shared by the analytic and simulation engines.

use thiserror::Error;

/// Validated parameter set for the cell-partitioned MANET.
///
/// `alpha` and `r` are derived during construction and never user-supplied:
/// `alpha = min(ceil((1 + delta) * sqrt(8) + 2), m)` and `r = sqrt(8) / m`,
/// the smallest radio range that covers a node's own cell plus its eight
/// neighbor cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Node count, `n >= 4`.
    pub n: u32,
    /// Cells per torus side, `m >= 3`.
    pub m: u32,
    /// Packet-broadcast probability, `0 < q < 1`.
    pub q: f64,
    /// Interference guard factor, `delta >= 0`.
    pub delta: f64,
    /// Per-source packet generation rate in packets/slot, `lambda > 0`.
    pub lambda: f64,
    /// Equivalent-class spacing in cells, derived.
    pub alpha: u32,
    /// Radio range on the unit torus, derived.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("n = {0} out of range: node count must be at least 4")]
    NodeCount(u32),
    #[error("m = {0} out of range: cells per side must be at least 3")]
    CellsPerSide(u32),
    #[error("q = {0} out of range: broadcast probability must lie strictly in (0, 1)")]
    BroadcastProb(f64),
    #[error("delta = {0} out of range: guard factor must be finite and >= 0")]
    GuardFactor(f64),
    #[error("lambda = {0} out of range: generation rate must be finite and > 0")]
    GenerationRate(f64),
}

/// Spacing needed so that a receiver next to its transmitter stays at least
/// `(1 + delta) * r` away from the closest concurrent transmitter.
pub fn derive_alpha(delta: f64, m: u32) -> u32 {
    let raw = libm::ceil((1.0 + delta) * libm::sqrt(8.0) + 2.0) as u32;
    raw.min(m)
}

/// Builds a validated parameter set with derived `alpha` and `r`.
pub fn build_params(n: u32, m: u32, q: f64, delta: f64, lambda: f64) -> Result<NetworkParams, ParamError> {
    if n < 4 {
        return Err(ParamError::NodeCount(n));
    }
    if m < 3 {
        return Err(ParamError::CellsPerSide(m));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(ParamError::BroadcastProb(q));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ParamError::GuardFactor(delta));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ParamError::GenerationRate(lambda));
    }
    let alpha = derive_alpha(delta, m);
    Ok(NetworkParams {
        n,
        m,
        q,
        delta,
        lambda,
        alpha,
        r: libm::sqrt(8.0) / m as f64,
    })
}

impl NetworkParams {
    /// Same parameters with a different generation rate (used when lambda is
    /// resolved late from a target system load).
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, ParamError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ParamError::GenerationRate(lambda));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// Number of cells on the torus.
    pub fn cells(&self) -> u32 {
        self.m * self.m
    }

    /// Number of equivalent classes under the MAC schedule.
    pub fn num_ecs(&self) -> u32 {
        self.alpha * self.alpha
    }
}
