//! Closed-form per-slot event probabilities of the two-hop relay protocol.
//!
//! Everything here is a function of the validated [`NetworkParams`] only.
//! Quantities that mix large binomial coefficients with tiny powers are
//! assembled in the log domain and exponentiated once, so the table stays
//! finite and inside `[0, 1]` up to `n = 1000`, `m = 64`.

use alloc::vec::Vec;
use libm::{exp, expm1, log, log1p};
use thiserror::Error;

use crate::params::NetworkParams;

/// All per-slot probabilities needed to assemble the QBD transition blocks,
/// indexed by the copy count `j` of the requested packet.
///
/// Vectors hold `j = 1..=n-1` at index `j - 1`. `p_0_empty` is the
/// complementary mass of `p_0` (network-queue stays empty).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    /// Probability that the source transmits and selects packet-broadcast.
    pub p_b: f64,
    /// Conditional per-broadcast distribution probability, `lambda / p_b`.
    pub lambda_prime: f64,
    /// Copy-count distribution right after a packet is distributed.
    pub p_c: Vec<f64>,
    /// Probability the destination receives its requested packet given `j` copies.
    pub p_r: Vec<f64>,
    /// From the empty state: `j` copies of a fresh packet exist after a
    /// successful broadcast with the destination out of coverage.
    pub p_0: Vec<f64>,
    /// From the empty state: the network-queue stays empty.
    pub p_0_empty: f64,
    /// Broadcast succeeds and the destination also receives its request.
    pub p_b_plus: f64,
    /// Same, summed over the `j - 1` candidate relays: `(j - 1) * p_b_plus`.
    pub p_b_plus_j: Vec<f64>,
    /// Broadcast succeeds, destination does not receive.
    pub p_b_minus: Vec<f64>,
    /// No broadcast, destination receives.
    pub p_f_plus: Vec<f64>,
    /// No broadcast, destination does not receive.
    pub p_f_minus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("source-queue service rate exceeded: lambda = {lambda} >= p_b = {p_b}")]
    Unstable { lambda: f64, p_b: f64 },
    #[error("probability {name}({j}) = {value} escaped [0, 1]")]
    OutOfRange { name: &'static str, j: usize, value: f64 },
}

/// `f(x) = (9^x - 8^x) / x`.
///
/// Exact integer arithmetic up to `x = 30` (fits in `u128`), log-domain
/// evaluation beyond that where `9^x` would overflow or cancel badly.
pub fn f_growth(x: u32) -> f64 {
    assert!(x >= 1, "f_growth requires x >= 1");
    if x <= 30 {
        let num = 9u128.pow(x) - 8u128.pow(x);
        num as f64 / x as f64
    } else {
        exp(ln_f_growth(x))
    }
}

/// `ln f(x)` computed without forming `9^x`.
fn ln_f_growth(x: u32) -> f64 {
    let x = x as f64;
    x * log(9.0) + log1p(-exp(x * log(8.0 / 9.0))) - log(x)
}

/// Running table of `ln k!` for `k = 0..=n`.
fn ln_factorials(n: u32) -> Vec<f64> {
    let mut t = Vec::with_capacity(n as usize + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += log(k as f64);
        t.push(acc);
    }
    t
}

fn ln_binomial(lf: &[f64], n: u32, k: u32) -> f64 {
    lf[n as usize] - lf[k as usize] - lf[(n - k) as usize]
}

/// `1 - ((m^2 - 1) / m^2)^e` evaluated without cancellation.
fn one_minus_ratio_pow(m: u32, e: u32) -> f64 {
    let m2 = (m * m) as f64;
    -expm1(e as f64 * log1p(-1.0 / m2))
}

/// Probability that the source wins contention in an active cell and selects
/// packet-broadcast.
pub fn compute_p_b(params: &NetworkParams) -> f64 {
    let n = params.n as f64;
    let m2 = (params.m * params.m) as f64;
    let a2 = (params.alpha * params.alpha) as f64;
    params.q * m2 / (a2 * n) * one_minus_ratio_pow(params.m, params.n)
}

/// Copy-count distribution `p_c(j)` for `j = 1..=n-1`.
///
/// `m = 3` degenerates to a point mass at `j = n - 1`: coverage is the whole
/// torus, so every broadcast reaches all other nodes.
pub fn compute_p_c(params: &NetworkParams) -> Vec<f64> {
    let (n, m) = (params.n, params.m);
    let m2m9 = (m * m) as f64 - 9.0;
    let lf = ln_factorials(n);
    // ln(m^{2n} - (m^2-1)^n)
    let ln_den = 2.0 * n as f64 * log(m as f64) + log(one_minus_ratio_pow(m, n));
    let mut out = Vec::with_capacity(n as usize - 1);
    for j in 1..n {
        if m2m9 == 0.0 && j < n - 1 {
            out.push(0.0);
            continue;
        }
        let ln_fj1 = ln_f_growth(j + 1);
        let ln_term = if m2m9 == 0.0 {
            ln_fj1
        } else {
            log_sum_exp(log(m2m9) + ln_f_growth(j), ln_fj1)
        };
        let ln_pow = if j == n - 1 { 0.0 } else { (n - 1 - j) as f64 * log(m2m9) };
        let v = exp(log(n as f64) + ln_binomial(&lf, n - 2, j - 1) + ln_pow + ln_term - ln_den);
        out.push(v);
    }
    out
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + log1p(exp(lo - hi))
}

/// Delivery probability `p_r(j)` for `j = 1..=n-1`.
pub fn compute_p_r(params: &NetworkParams) -> Vec<f64> {
    let n = params.n as f64;
    let m2 = (params.m * params.m) as f64;
    let a2 = (params.alpha * params.alpha) as f64;
    let c = (m2 - 9.0) / m2;
    let bracket =
        one_minus_ratio_pow(params.m, params.n) - n / m2 * pow_nonneg(c, params.n - 1);
    let base = (1.0 - params.q) * m2 / (a2 * n * (n - 1.0)) * bracket;
    (1..params.n).map(|j| j as f64 * base).collect()
}

/// `b^e` for `b >= 0` without relying on std `powi`.
fn pow_nonneg(b: f64, e: u32) -> f64 {
    if b == 0.0 {
        return if e == 0 { 1.0 } else { 0.0 };
    }
    exp(e as f64 * log(b))
}

/// Empty-state transition masses `(p_0(0), p_0(1..=n-1))`.
///
/// Requires the per-broadcast distribution probability `lambda' = lambda / p_b`.
pub fn compute_p_0(params: &NetworkParams, lambda: f64, p_b: f64) -> (f64, Vec<f64>) {
    let (n, m) = (params.n, params.m);
    let m2m9 = (m * m) as f64 - 9.0;
    let a2 = (params.alpha * params.alpha) as f64;
    let lf = ln_factorials(n);
    let mut out = Vec::with_capacity(n as usize - 1);
    if m2m9 == 0.0 {
        // Destination is always inside coverage: the fresh packet is either
        // received on the spot or the broadcast did not happen.
        out.resize(n as usize - 1, 0.0);
        return (1.0, out);
    }
    let ln_pref = log(lambda) + log(params.q) - log(a2) - (2 * n - 2) as f64 * log(m as f64) - log(p_b);
    for j in 1..n {
        let v = exp(
            ln_pref + ln_binomial(&lf, n - 2, j - 1) + (n - j) as f64 * log(m2m9) + ln_f_growth(j),
        );
        out.push(v);
    }
    let p00 = 1.0
        - lambda * params.q * m2m9 / (a2 * (n - 1) as f64 * p_b)
            * one_minus_ratio_pow(m, n - 1);
    (p00, out)
}

/// Per-relay probability that a simultaneous broadcast by the source and a
/// delivery by one specific copy-holding relay both succeed in one slot.
///
/// Zero whenever `alpha = m` (a single active cell per slot, so the source and
/// a relay can never transmit together).
pub fn compute_p_b_plus(params: &NetworkParams, lambda: f64, p_b: f64) -> f64 {
    let n = params.n as f64;
    let m2 = (params.m * params.m) as f64;
    let a2 = (params.alpha * params.alpha) as f64;
    if m2 == a2 {
        return 0.0;
    }
    let a = (m2 - 1.0) / m2;
    let b = (m2 - 2.0) / m2;
    let c = (m2 - 9.0) / m2;
    let d = (m2 - 10.0) / m2;
    let nn = params.n;
    let bracket = 1.0 - 2.0 * pow_nonneg(a, nn) + pow_nonneg(b, nn)
        - n / m2 * pow_nonneg(c, nn - 1)
        + n / m2 * pow_signed(d, nn - 1);
    lambda * (params.q - params.q * params.q) * (m2 * m2 - m2 * a2)
        / (a2 * a2 * n * (n - 1.0) * (n - 2.0) * p_b)
        * bracket
}

/// `b^e` allowing negative bases (`m = 3` makes `(m^2 - 10)/m^2` negative).
fn pow_signed(b: f64, e: u32) -> f64 {
    let mag = pow_nonneg(libm::fabs(b), e);
    if b < 0.0 && e % 2 == 1 {
        -mag
    } else {
        mag
    }
}

fn check_unit(name: &'static str, j: usize, v: f64) -> Result<f64, TableError> {
    if v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(TableError::OutOfRange { name, j, value: v })
    }
}

/// Builds the full probability table for `params` at rate `params.lambda`.
///
/// Fails when `lambda >= p_b`, i.e. the source-queue is already unstable and
/// the network-queue arrival construction (`lambda' <= 1`) breaks down.
pub fn compute_table(params: &NetworkParams) -> Result<ProbabilityTable, TableError> {
    let lambda = params.lambda;
    let p_b = compute_p_b(params);
    if lambda >= p_b {
        return Err(TableError::Unstable { lambda, p_b });
    }
    let p_c = compute_p_c(params);
    let p_r = compute_p_r(params);
    let (p_0_empty, p_0) = compute_p_0(params, lambda, p_b);
    let p_b_plus = compute_p_b_plus(params, lambda, p_b);

    let count = params.n as usize - 1;
    let mut p_b_plus_j = Vec::with_capacity(count);
    let mut p_b_minus = Vec::with_capacity(count);
    let mut p_f_plus = Vec::with_capacity(count);
    let mut p_f_minus = Vec::with_capacity(count);
    for idx in 0..count {
        let j = idx + 1;
        let bp = check_unit("p_b_plus", j, (j as f64 - 1.0) * p_b_plus)?;
        let bm = check_unit("p_b_minus", j, lambda - bp)?;
        // Complement constructions: tolerate tiny negative round-off only.
        let fp = check_unit("p_f_plus", j, p_r[idx] - bp)?;
        let fm = check_unit("p_f_minus", j, 1.0 - bp - bm - fp)?;
        p_b_plus_j.push(bp);
        p_b_minus.push(bm);
        p_f_plus.push(fp);
        p_f_minus.push(fm);
    }
    for (idx, &v) in p_c.iter().enumerate() {
        check_unit("p_c", idx + 1, v)?;
    }
    for (idx, &v) in p_r.iter().enumerate() {
        check_unit("p_r", idx + 1, v)?;
    }
    for (idx, &v) in p_0.iter().enumerate() {
        check_unit("p_0", idx + 1, v)?;
    }
    check_unit("p_0", 0, p_0_empty)?;

    Ok(ProbabilityTable {
        p_b,
        lambda_prime: lambda / p_b,
        p_c,
        p_r,
        p_0,
        p_0_empty,
        p_b_plus,
        p_b_plus_j,
        p_b_minus,
        p_f_plus,
        p_f_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::build_params;

    #[test]
    fn f_growth_small_values() {
        assert_eq!(f_growth(1), 1.0);
        assert_eq!(f_growth(2), 8.5);
        assert!((f_growth(3) - (729.0 - 512.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f_growth_log_domain_continuity() {
        // integer route vs log route agree where both are exact enough
        for x in 16..=30u32 {
            let exact = (9u128.pow(x) - 8u128.pow(x)) as f64 / x as f64;
            let logd = exp(ln_f_growth(x));
            assert!((exact - logd).abs() / exact < 1e-12, "x={x}");
        }
        // past ~x = 330 the value itself overflows f64; the log stays usable
        assert!(f_growth(400).is_infinite());
        assert!(ln_f_growth(400).is_finite());
        assert!((ln_f_growth(400) - (400.0 * log(9.0) - log(400.0))).abs() < 1e-9);
    }

    #[test]
    fn p_b_reference_value() {
        // independent 50-digit evaluation of the closed form:
        // n=150, m=16, q=0.4, alpha=8
        let p = build_params(150, 16, 0.4, 1.0, 1e-4).unwrap();
        let expected = 4.7365806635404255e-3;
        assert!(((compute_p_b(&p) - expected) / expected).abs() < 1e-13);
    }

    #[test]
    fn p_b_linear_in_q() {
        let p1 = build_params(100, 8, 0.2, 1.0, 1e-4).unwrap();
        let p2 = build_params(100, 8, 0.6, 1.0, 1e-4).unwrap();
        assert!((3.0 * compute_p_b(&p1) - compute_p_b(&p2)).abs() < 1e-15);
    }

    #[test]
    fn copy_count_normalizes() {
        for (n, m) in [(8u32, 4u32), (50, 8), (150, 16), (1000, 64)] {
            let p = build_params(n, m, 0.4, 1.0, 1e-6).unwrap();
            let sum: f64 = compute_p_c(&p).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "n={n} m={m} sum={sum}");
        }
    }

    #[test]
    fn full_coverage_degenerates_to_point_mass() {
        let p = build_params(8, 3, 0.4, 1.0, 1e-4).unwrap();
        let pc = compute_p_c(&p);
        for &v in &pc[..pc.len() - 1] {
            assert_eq!(v, 0.0);
        }
        assert!((pc[pc.len() - 1] - 1.0).abs() < 1e-12);
        // and the empty state can never hold a distributed packet
        let pb = compute_p_b(&p);
        let (p00, p0) = compute_p_0(&p, 1e-4, pb);
        assert_eq!(p00, 1.0);
        assert!(p0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn table_identities_on_one_case() {
        let p = build_params(8, 4, 0.5, 1.0, 1e-4).unwrap();
        let t = compute_table(&p).unwrap();
        let sum_pc: f64 = t.p_c.iter().sum();
        assert!((sum_pc - 1.0).abs() < 1e-10);
        let sum_p0: f64 = t.p_0_empty + t.p_0.iter().sum::<f64>();
        assert!((sum_p0 - 1.0).abs() < 1e-10);
        assert_eq!(t.p_b_plus_j[0], 0.0);
        for idx in 0..t.p_c.len() {
            let four = t.p_b_plus_j[idx] + t.p_b_minus[idx] + t.p_f_plus[idx] + t.p_f_minus[idx];
            assert!((four - 1.0).abs() < 1e-10);
            assert!((t.p_b_plus_j[idx] + t.p_b_minus[idx] - p.lambda).abs() < 1e-14);
            assert!(t.p_f_plus[idx] >= 0.0);
        }
    }

    #[test]
    fn single_active_cell_kills_simultaneous_delivery() {
        // alpha = m = 8: the source and a relay can never transmit together
        let p = build_params(10, 8, 0.5, 1.0, 1e-4).unwrap();
        let pb = compute_p_b(&p);
        assert_eq!(compute_p_b_plus(&p, 1e-4, pb), 0.0);
    }

    #[test]
    fn unstable_lambda_rejected() {
        let p = build_params(8, 4, 0.5, 1.0, 0.9).unwrap();
        assert!(matches!(compute_table(&p), Err(TableError::Unstable { .. })));
    }

    #[test]
    fn finite_and_bounded_for_large_networks() {
        let p = build_params(1000, 64, 0.9, 1.0, 1e-8).unwrap();
        let t = compute_table(&p).unwrap();
        for v in t.p_c.iter().chain(&t.p_r).chain(&t.p_0).chain(&t.p_f_minus) {
            assert!(v.is_finite() && (0.0..=1.0).contains(v));
        }
    }
}
