//! Monte-Carlo oracles for the closed-form slot probabilities.
//!
//! Each oracle enacts one slot literally — uniform node placement, a uniformly
//! drawn active cell group, one uniform contention winner per non-empty active
//! cell, the routing coin — and estimates the event frequency. They share no
//! code with the closed forms in [`crate::probability`], so agreement is
//! meaningful evidence.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::NetworkParams;

/// A Monte-Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub std_err: f64,
    /// Trials the estimate is based on (conditional oracles report the
    /// number of trials where the conditioning event occurred).
    pub trials: u64,
}

impl OracleEstimate {
    fn from_binomial(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self {
            estimate: p,
            std_err: libm::sqrt(p * (1.0 - p) / trials as f64),
            trials,
        }
    }
}

fn torus_abs(a: u32, b: u32, m: u32) -> u32 {
    let d = a.abs_diff(b);
    d.min(m - d)
}

/// Whether cell `b` lies in the 3x3 torus neighborhood centred on cell `a`.
fn covered(a: (u32, u32), b: (u32, u32), m: u32) -> bool {
    torus_abs(a.0, b.0, m) <= 1 && torus_abs(a.1, b.1, m) <= 1
}

fn place(rng: &mut ChaCha8Rng, pos: &mut [(u32, u32)], m: u32) {
    for p in pos.iter_mut() {
        *p = (rng.random_range(0..m), rng.random_range(0..m));
    }
}

fn is_active(cell: (u32, u32), ec: (u32, u32), alpha: u32) -> bool {
    cell.0 % alpha == ec.0 && cell.1 % alpha == ec.1
}

/// Uniform contention winner among the occupants of `cell`; `None` if empty.
fn winner(rng: &mut ChaCha8Rng, pos: &[(u32, u32)], cell: (u32, u32)) -> Option<usize> {
    let mut count = 0u32;
    let mut pick = None;
    for (i, &p) in pos.iter().enumerate() {
        if p == cell {
            count += 1;
            // reservoir sampling keeps the draw uniform in one pass
            if rng.random_range(0..count) == 0 {
                pick = Some(i);
            }
        }
    }
    pick
}

/// Uniform receiver among nodes covered by `tx`, excluding `tx` itself.
fn pick_receiver(rng: &mut ChaCha8Rng, pos: &[(u32, u32)], tx: usize, m: u32) -> Option<usize> {
    let mut count = 0u32;
    let mut pick = None;
    for (i, &p) in pos.iter().enumerate() {
        if i != tx && covered(pos[tx], p, m) {
            count += 1;
            if rng.random_range(0..count) == 0 {
                pick = Some(i);
            }
        }
    }
    pick
}

/// Per-slot probability that the tagged source dispatches a packet:
/// its cell is active, it wins contention, and it draws the broadcast coin.
pub fn oracle_p_b(params: &NetworkParams, trials: u64, seed: u64) -> OracleEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, alpha) = (params.n as usize, params.m, params.alpha);
    let mut pos = vec![(0u32, 0u32); n];
    let mut hits = 0u64;
    for _ in 0..trials {
        place(&mut rng, &mut pos, m);
        let ec = (rng.random_range(0..alpha), rng.random_range(0..alpha));
        if is_active(pos[0], ec, alpha)
            && winner(&mut rng, &pos, pos[0]) == Some(0)
            && rng.random_bool(params.q)
        {
            hits += 1;
        }
    }
    OracleEstimate::from_binomial(hits, trials)
}

/// Conditional copy-count distribution right after a dispatch: given the
/// source (node 0) broadcasts, `j` is one plus the number of nodes other than
/// the destination (node 1) inside its coverage. Entry `j - 1` of the result
/// holds the estimate for `j` copies.
pub fn oracle_p_c(params: &NetworkParams, trials: u64, seed: u64) -> Vec<OracleEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, alpha) = (params.n as usize, params.m, params.alpha);
    let mut pos = vec![(0u32, 0u32); n];
    let mut counts = vec![0u64; n - 1];
    let mut conditional = 0u64;
    for _ in 0..trials {
        place(&mut rng, &mut pos, m);
        let ec = (rng.random_range(0..alpha), rng.random_range(0..alpha));
        if is_active(pos[0], ec, alpha)
            && winner(&mut rng, &pos, pos[0]) == Some(0)
            && rng.random_bool(params.q)
        {
            conditional += 1;
            let relays = (2..n).filter(|&i| covered(pos[0], pos[i], m)).count();
            counts[relays] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| OracleEstimate::from_binomial(c, conditional))
        .collect()
}

/// Per-slot probability that the requested packet reaches the destination
/// when `j` copies exist. Node 0 is the source, node 1 the destination, and
/// nodes `2..=j` hold the remaining copies; every carrier that wins contention
/// draws the delivery coin and a uniform covered receiver, and each hit on the
/// destination counts.
pub fn oracle_p_r(params: &NetworkParams, j: usize, trials: u64, seed: u64) -> OracleEstimate {
    assert!(j >= 1 && j <= params.n as usize - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, alpha) = (params.n as usize, params.m, params.alpha);
    let mut pos = vec![(0u32, 0u32); n];
    let carriers: Vec<usize> = core::iter::once(0).chain(2..=j).collect();
    let mut sum = 0u64;
    let mut sum_sq = 0u64;
    for _ in 0..trials {
        place(&mut rng, &mut pos, m);
        let ec = (rng.random_range(0..alpha), rng.random_range(0..alpha));
        let mut hits = 0u64;
        let mut done_cells: Vec<(u32, u32)> = Vec::with_capacity(carriers.len());
        for &c in &carriers {
            let cell = pos[c];
            if !is_active(cell, ec, alpha) || done_cells.contains(&cell) {
                continue;
            }
            // one winner per cell even if several carriers share it
            done_cells.push(cell);
            if let Some(w) = winner(&mut rng, &pos, cell) {
                if carriers.contains(&w)
                    && !rng.random_bool(params.q)
                    && pick_receiver(&mut rng, &pos, w, m) == Some(1)
                {
                    hits += 1;
                }
            }
        }
        sum += hits;
        sum_sq += hits * hits;
    }
    let t = trials as f64;
    let mean = sum as f64 / t;
    let var = (sum_sq as f64 / t - mean * mean).max(0.0);
    OracleEstimate { estimate: mean, std_err: libm::sqrt(var / t), trials }
}

/// Per-slot probabilities of leaving the empty network-queue: the source
/// dispatches a packet that heads a fresh busy period (probability
/// `lambda_prime` per dispatch) and the destination sits outside coverage,
/// leaving `j >= 1` copies behind. Entry `j` of the result is the estimate
/// for `j` copies; entry 0 aggregates every other outcome (including slots
/// with no dispatch at all).
pub fn oracle_p_0(
    params: &NetworkParams,
    lambda_prime: f64,
    trials: u64,
    seed: u64,
) -> Vec<OracleEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, alpha) = (params.n as usize, params.m, params.alpha);
    let mut pos = vec![(0u32, 0u32); n];
    let mut counts = vec![0u64; n];
    for _ in 0..trials {
        place(&mut rng, &mut pos, m);
        let ec = (rng.random_range(0..alpha), rng.random_range(0..alpha));
        if is_active(pos[0], ec, alpha)
            && winner(&mut rng, &pos, pos[0]) == Some(0)
            && rng.random_bool(params.q)
            && rng.random_bool(lambda_prime)
            && !covered(pos[0], pos[1], m)
        {
            let relays = (2..n).filter(|&i| covered(pos[0], pos[i], m)).count();
            counts[1 + relays] += 1;
        } else {
            counts[0] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| OracleEstimate::from_binomial(c, trials))
        .collect()
}

/// Per-relay probability that a dispatch by the source and a delivery by one
/// particular relay land in the same slot. The raw event is far too rare for
/// naive sampling, so the placement of source and relay is conditioned on
/// "both in distinct active cells" and reweighted by the exact probability
/// `k(k-1)/m^4` of that placement (`k` = active cells of the drawn group);
/// the arrival factor `lambda_prime` is applied analytically.
pub fn oracle_p_b_plus(
    params: &NetworkParams,
    lambda_prime: f64,
    trials: u64,
    seed: u64,
) -> OracleEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, alpha) = (params.n as usize, params.m, params.alpha);
    let m2 = (m * m) as f64;
    let m4 = m2 * m2;
    let mut pos = vec![(0u32, 0u32); n];
    let mut active: Vec<(u32, u32)> = Vec::with_capacity((m as usize / alpha as usize + 1).pow(2));
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..trials {
        let ec = (rng.random_range(0..alpha), rng.random_range(0..alpha));
        active.clear();
        let mut x = ec.0;
        while x < m {
            let mut y = ec.1;
            while y < m {
                active.push((x, y));
                y += alpha;
            }
            x += alpha;
        }
        let k = active.len();
        if k < 2 {
            // a single active cell cannot host two simultaneous transmitters
            continue;
        }
        place(&mut rng, &mut pos, m);
        let si = rng.random_range(0..k);
        let mut ri = rng.random_range(0..k - 1);
        if ri >= si {
            ri += 1;
        }
        pos[0] = active[si];
        pos[2] = active[ri];
        let hit = winner(&mut rng, &pos, pos[0]) == Some(0)
            && rng.random_bool(params.q)
            && winner(&mut rng, &pos, pos[2]) == Some(2)
            && !rng.random_bool(params.q)
            && pick_receiver(&mut rng, &pos, 2, m) == Some(1);
        if hit {
            let w = (k * (k - 1)) as f64 / m4;
            sum += w;
            sum_sq += w * w;
        }
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    OracleEstimate {
        estimate: lambda_prime * mean,
        std_err: lambda_prime * libm::sqrt(var / t),
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::build_params;
    use crate::probability::compute_p_b;

    #[test]
    fn p_b_oracle_matches_closed_form() {
        let params = build_params(8, 4, 0.4, 0.0, 1e-4).unwrap();
        let est = oracle_p_b(&params, 200_000, 7);
        let exact = compute_p_b(&params);
        assert!(
            (est.estimate - exact).abs() < 3.0 * est.std_err,
            "estimate {} vs exact {} (se {})",
            est.estimate,
            exact,
            est.std_err
        );
    }

    #[test]
    fn p_c_oracle_is_a_distribution() {
        let params = build_params(6, 4, 0.5, 0.0, 1e-4).unwrap();
        let ests = oracle_p_c(&params, 100_000, 11);
        let total: f64 = ests.iter().map(|e| e.estimate).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_reproduces() {
        let params = build_params(6, 4, 0.5, 0.0, 1e-4).unwrap();
        let a = oracle_p_r(&params, 3, 20_000, 42);
        let b = oracle_p_r(&params, 3, 20_000, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn single_active_cell_kills_simultaneous_departures() {
        // alpha == m: one active cell per slot, the joint event is impossible
        let params = build_params(8, 4, 0.4, 0.0, 1e-4).unwrap();
        assert_eq!(params.alpha, params.m);
        let est = oracle_p_b_plus(&params, 0.5, 50_000, 3);
        assert_eq!(est.estimate, 0.0);
    }
}
