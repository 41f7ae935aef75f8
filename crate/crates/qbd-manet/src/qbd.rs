//! Matrix-geometric solver for the network-queue QBD chain.
//!
//! The chain lives on `(level, phase)` where the level counts packets
//! distributed but not yet received and the phase is the copy count of the
//! currently requested packet. The repeating blocks have rank-one structure
//! (`A2 = B2 * v0`), which makes `G = 1 * v0` and gives a direct closed-form
//! solve for the rate matrix `R`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{Lu, Mat};
use crate::params::NetworkParams;
use crate::probability::{self, ProbabilityTable, TableError};

/// Transition blocks of the block-tridiagonal chain.
///
/// Boundary: `B1` (1x1, stay empty), `B0` (1 x (n-1), leave empty), `B2`
/// ((n-1) x 1, drain to empty). Repeating: `A0` (level up), `A1` (stay),
/// `A2 = B2 * v0` (level down with phase resampled from the copy-count
/// distribution `v0`).
#[derive(Debug, Clone)]
pub struct QbdBlocks {
    pub v0: Vec<f64>,
    pub a0: Mat,
    pub a1: Mat,
    pub a2: Mat,
    pub b0: Vec<f64>,
    pub b1: f64,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    /// Per-node throughput capacity, `min(mu_s, mu_d)`.
    pub mu: f64,
    /// Source-queue service rate (`p_b`).
    pub mu_s: f64,
    /// Network-queue service rate.
    pub mu_d: f64,
}

/// Everything produced by a delay solve, residuals included.
#[derive(Debug, Clone)]
pub struct QbdSolution {
    pub r: Mat,
    pub y0: f64,
    pub y1: Vec<f64>,
    pub phi: f64,
    pub l1_bar: f64,
    pub l2_bar: f64,
    pub expected_delay_slots: f64,
    pub sp_r: f64,
    /// `||R - (A0 + R A1 + R^2 A2)||_inf`.
    pub rate_residual: f64,
    /// `||[y0,y1] M - [y0,y1]||_1` for the boundary matrix `M`.
    pub boundary_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbdError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("unstable: lambda = {lambda} exceeds capacity mu = {mu}")]
    Unstable { lambda: f64, mu: f64 },
    #[error("transition blocks violate row stochasticity (residual {0:e})")]
    NotStochastic(f64),
    #[error("singular linear system in {0} solve (pivot ratio {1:e})")]
    Singular(&'static str, f64),
}

/// Assembles the six transition blocks and checks row stochasticity of the
/// full chain to 1e-8.
pub fn build_blocks(table: &ProbabilityTable) -> Result<QbdBlocks, QbdError> {
    let v0 = table.p_c.clone();
    let a0 = Mat::from_diag(&table.p_b_minus);
    let a1 = Mat::from_diag(&table.p_f_minus).add(&Mat::outer(&table.p_b_plus_j, &v0));
    let b2 = table.p_f_plus.clone();
    let a2 = Mat::outer(&b2, &v0);
    let blocks = QbdBlocks { v0, a0, a1, a2, b0: table.p_0.clone(), b1: table.p_0_empty, b2 };

    let mut worst = libm::fabs(blocks.b1 + blocks.b0.iter().sum::<f64>() - 1.0);
    let dim = blocks.v0.len();
    for i in 0..dim {
        let a1_row: f64 = (0..dim).map(|j| blocks.a1[(i, j)]).sum();
        let a0_row = blocks.a0[(i, i)];
        let a2_row: f64 = (0..dim).map(|j| blocks.a2[(i, j)]).sum();
        // boundary row of [B2 | A1 | A0] and repeating row of [A2 | A1 | A0]
        worst = worst.max(libm::fabs(blocks.b2[i] + a1_row + a0_row - 1.0));
        worst = worst.max(libm::fabs(a2_row + a1_row + a0_row - 1.0));
    }
    if worst > 1e-8 {
        return Err(QbdError::NotStochastic(worst));
    }
    Ok(blocks)
}

/// Per-node throughput capacity. Does not need a traffic rate.
pub fn capacity(params: &NetworkParams) -> Capacity {
    let mu_s = probability::compute_p_b(params);
    let p_c = probability::compute_p_c(params);
    let p_r = probability::compute_p_r(params);
    let sum: f64 = p_c.iter().zip(&p_r).map(|(&c, &r)| c / r).sum();
    let mu_d = 1.0 / sum;
    Capacity { mu: mu_s.min(mu_d), mu_s, mu_d }
}

/// Rate matrix via the rank-one closed form
/// `R = A0 (I - A1 - A0 1 v0)^{-1}`, plus its fixed-point residual.
pub fn solve_rate_matrix(blocks: &QbdBlocks) -> Result<(Mat, f64), QbdError> {
    let dim = blocks.v0.len();
    let ones = vec![1.0; dim];
    let inner = Mat::identity(dim)
        .sub(&blocks.a1)
        .sub(&Mat::outer(&blocks.a0.mat_vec_mul(&ones), &blocks.v0));
    // R = A0 * inner^{-1}  <=>  inner^T R^T = A0^T
    let lu = Lu::factor(&inner.transpose())
        .map_err(|_| QbdError::Singular("rate matrix", 0.0))?;
    let r = lu.solve_mat(&blocks.a0.transpose()).transpose();
    let fixed = blocks
        .a0
        .add(&r.matmul(&blocks.a1))
        .add(&r.matmul(&r).matmul(&blocks.a2));
    let residual = r.sub(&fixed).inf_norm();
    Ok((r, residual))
}

/// Plain fixed-point iteration `R <- A0 + R A1 + R^2 A2`, kept as an
/// independent route for testing the direct solve.
pub fn iterate_rate_matrix(blocks: &QbdBlocks, tol: f64, max_iters: usize) -> Mat {
    let dim = blocks.v0.len();
    let mut r = Mat::zeros(dim, dim);
    for _ in 0..max_iters {
        let next = blocks
            .a0
            .add(&r.matmul(&blocks.a1))
            .add(&r.matmul(&r).matmul(&blocks.a2));
        let delta = next.sub(&r).max_abs();
        r = next;
        if delta < tol {
            break;
        }
    }
    r
}

/// Unnormalized boundary pair `[y0, y1]` (left fixed point of the boundary
/// matrix, scaled so `y0 = 1`) and the normalizer `phi`.
pub fn solve_boundary(blocks: &QbdBlocks, r: &Mat) -> Result<(f64, Vec<f64>, f64, f64), QbdError> {
    let dim = blocks.v0.len();
    let m = boundary_matrix(blocks, r);
    // left null vector of (M - I): solve (M - I)^T y = 0 with the first
    // equation replaced by the normalization y0 = 1
    let mut k = m.transpose();
    for i in 0..dim + 1 {
        k[(i, i)] -= 1.0;
    }
    for j in 0..dim + 1 {
        k[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
    }
    let mut rhs = vec![0.0; dim + 1];
    rhs[0] = 1.0;
    let lu = Lu::factor(&k).map_err(|_| QbdError::Singular("boundary", 0.0))?;
    if lu.pivot_ratio < 1e-14 {
        return Err(QbdError::Singular("boundary", lu.pivot_ratio));
    }
    let y = lu.solve_vec(&rhs);
    let (y0, y1) = (y[0], y[1..].to_vec());

    let mut full = vec![y0];
    full.extend_from_slice(&y1);
    let image = m.transpose().mat_vec_mul(&full);
    let residual: f64 = image.iter().zip(&full).map(|(a, b)| libm::fabs(a - b)).sum();

    let ones = vec![1.0; dim];
    let i_minus_r = Mat::identity(dim).sub(r);
    let lu_ir = Lu::factor(&i_minus_r).map_err(|_| QbdError::Singular("I - R", 0.0))?;
    let inv1 = lu_ir.solve_vec(&ones);
    let phi = y0 + dot(&y1, &inv1);
    Ok((y0, y1, phi, residual))
}

fn boundary_matrix(blocks: &QbdBlocks, r: &Mat) -> Mat {
    let dim = blocks.v0.len();
    let inner = blocks.a1.add(&r.matmul(&blocks.a2));
    let mut m = Mat::zeros(dim + 1, dim + 1);
    m[(0, 0)] = blocks.b1;
    for j in 0..dim {
        m[(0, j + 1)] = blocks.b0[j];
        m[(j + 1, 0)] = blocks.b2[j];
        for i in 0..dim {
            m[(i + 1, j + 1)] = inner[(i, j)];
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full delay solve at `params.lambda`. Fails when `lambda >= mu`.
pub fn expected_delay(params: &NetworkParams) -> Result<QbdSolution, QbdError> {
    let cap = capacity(params);
    let lambda = params.lambda;
    if lambda >= cap.mu {
        return Err(QbdError::Unstable { lambda, mu: cap.mu });
    }
    let table = probability::compute_table(params)?;
    let blocks = build_blocks(&table)?;
    let (r, rate_residual) = solve_rate_matrix(&blocks)?;
    let (y0, y1, phi, boundary_residual) = solve_boundary(&blocks, &r)?;

    let dim = blocks.v0.len();
    let ones = vec![1.0; dim];
    let i_minus_r = Mat::identity(dim).sub(&r);
    let lu_ir = Lu::factor(&i_minus_r).map_err(|_| QbdError::Singular("I - R", 0.0))?;
    // (I - R)^{-2} 1 via two solves, never an explicit inverse
    let w = lu_ir.solve_vec(&lu_ir.solve_vec(&ones));
    let l2_bar = dot(&y1, &w) / phi;
    let l1_bar = (lambda - lambda * lambda) / (table.p_b - lambda);
    let expected_delay_slots = (l1_bar + l2_bar) / lambda;
    let sp_r = r.spectral_radius_nonneg(500);

    Ok(QbdSolution {
        r,
        y0,
        y1,
        phi,
        l1_bar,
        l2_bar,
        expected_delay_slots,
        sp_r,
        rate_residual,
        boundary_residual,
    })
}

/// Normalized stationary mass of levels `0..=max_level` from the
/// matrix-geometric form: `pi_0 = y0 / phi`, `pi_l = y1 R^{l-1} / phi`.
pub fn stationary_levels(sol: &QbdSolution, max_level: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(max_level + 1);
    out.push(vec![sol.y0 / sol.phi]);
    let mut x = sol.y1.clone();
    for _ in 1..=max_level {
        out.push(x.iter().map(|v| v / sol.phi).collect());
        x = sol.r.row_vec_mul(&x);
    }
    out
}
