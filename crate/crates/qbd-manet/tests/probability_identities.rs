//! Exact identities the closed-form probability table must satisfy, checked
//! over a grid of network sizes, cell counts and broadcast probabilities.

use qbd_manet::params::build_params;
use qbd_manet::probability::{compute_p_r, compute_table};
use qbd_manet::qbd::{build_blocks, capacity};

const TOL: f64 = 1e-10;

fn grid() -> impl Iterator<Item = (u32, u32, f64)> {
    [8u32, 50, 150].into_iter().flat_map(|n| {
        [4u32, 8, 16]
            .into_iter()
            .flat_map(move |m| [0.1f64, 0.4, 0.9].into_iter().map(move |q| (n, m, q)))
    })
}

#[test]
fn table_identities_hold_across_grid() {
    for (n, m, q) in grid() {
        let base = build_params(n, m, q, 1.0, 1e-9).unwrap();
        let mu = capacity(&base).mu;
        let lambda = 0.5 * mu;
        let p = base.with_lambda(lambda).unwrap();
        let t = compute_table(&p).unwrap();
        let ctx = format!("n={n} m={m} q={q}");

        // copy-count distribution after a dispatch
        let sum_c: f64 = t.p_c.iter().sum();
        assert!((sum_c - 1.0).abs() < TOL, "{ctx}: sum p_c = {sum_c}");
        // dispatch outcome distribution out of the empty network-queue
        let sum_0: f64 = t.p_0_empty + t.p_0.iter().sum::<f64>();
        assert!((sum_0 - 1.0).abs() < TOL, "{ctx}: sum p_0 = {sum_0}");
        assert!((t.lambda_prime - lambda / t.p_b).abs() < TOL, "{ctx}");

        for j in 1..n as usize {
            let i = j - 1;
            // dispatch happens at rate lambda regardless of the copy count
            let up = t.p_b_plus_j[i] + t.p_b_minus[i];
            assert!((up - lambda).abs() < TOL, "{ctx} j={j}: p_b+ + p_b- = {up}");
            // delivery happens at rate p_r(j), split by the concurrent dispatch
            let deliver = t.p_b_plus_j[i] + t.p_f_plus[i];
            assert!((deliver - t.p_r[i]).abs() < TOL, "{ctx} j={j}");
            // the four joint outcomes of (dispatch?, delivery?) partition the slot
            let four = t.p_b_plus_j[i] + t.p_b_minus[i] + t.p_f_plus[i] + t.p_f_minus[i];
            assert!((four - 1.0).abs() < TOL, "{ctx} j={j}: four-way sum = {four}");
            // per-relay scaling of the joint event
            assert!((t.p_b_plus_j[i] - (j as f64 - 1.0) * t.p_b_plus).abs() < TOL, "{ctx} j={j}");
            for (name, v) in [
                ("p_c", t.p_c[i]),
                ("p_r", t.p_r[i]),
                ("p_0", t.p_0[i]),
                ("p_b_plus_j", t.p_b_plus_j[i]),
                ("p_b_minus", t.p_b_minus[i]),
                ("p_f_plus", t.p_f_plus[i]),
                ("p_f_minus", t.p_f_minus[i]),
            ] {
                assert!((0.0..=1.0).contains(&v), "{ctx} j={j}: {name} = {v}");
            }
        }
    }
}

#[test]
fn blocks_assemble_across_grid() {
    for (n, m, q) in grid() {
        let base = build_params(n, m, q, 1.0, 1e-9).unwrap();
        let mu = capacity(&base).mu;
        let p = base.with_lambda(0.5 * mu).unwrap();
        let t = compute_table(&p).unwrap();
        build_blocks(&t).unwrap_or_else(|e| panic!("n={n} m={m} q={q}: {e}"));
    }
}

#[test]
fn delivery_rate_declines_per_copy_but_grows_in_total() {
    // more copies help overall, while each individual copy contributes less
    let p = build_params(50, 8, 0.4, 1.0, 1e-6).unwrap();
    let p_r = compute_p_r(&p);
    for j in 1..p_r.len() {
        assert!(p_r[j] > p_r[j - 1], "j={j}");
        let per_copy_prev = p_r[j - 1] / j as f64;
        let per_copy = p_r[j] / (j + 1) as f64;
        assert!(per_copy <= per_copy_prev + 1e-15, "j={j}");
    }
}
