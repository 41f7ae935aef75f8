//! Statistical behavior of the simulator: determinism, mobility marginals,
//! and a smoke-level agreement check against the analytic engine. Seeds are
//! pinned, so every assertion is reproducible.

use qbd_manet::metrics::summarize;
use qbd_manet::params::{build_params, NetworkParams};
use qbd_manet::qbd::{capacity, expected_delay};
use qbd_manet::sim::{run, Mobility, SimConfig, SimWorld};

fn config(mobility: Mobility, slots: u64, warmup: u64, replication: u64) -> SimConfig {
    SimConfig { mobility, slots, warmup_slots: warmup, seed: 2024, replication, debug_checks: false }
}

#[test]
fn same_seed_same_run_different_stream_different_run() {
    let p = build_params(8, 4, 0.5, 1.0, 2e-3).unwrap();
    let a = run(&p, &config(Mobility::RandomWalk, 20_000, 0, 0)).unwrap();
    let b = run(&p, &config(Mobility::RandomWalk, 20_000, 0, 0)).unwrap();
    assert_eq!(a, b);
    let c = run(&p, &config(Mobility::RandomWalk, 20_000, 0, 1)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn negligible_arrival_rate_generates_nothing() {
    let p = build_params(8, 4, 0.5, 1.0, 1e-15).unwrap();
    let raw = run(&p, &config(Mobility::Iid, 20_000, 0, 0)).unwrap();
    assert_eq!(raw.generated.iter().sum::<u64>(), 0);
    assert!(raw.records.is_empty());
}

fn occupancy_counts(params: &NetworkParams, mobility: Mobility, steps: u64) -> Vec<u64> {
    let mut w = SimWorld::new(params, mobility, 7, 0);
    let m = params.m as usize;
    let mut counts = vec![0u64; m * m];
    // burn-in so the walk forgets the initial cell
    for _ in 0..200 {
        w.step_mobility();
    }
    for _ in 0..steps {
        w.step_mobility();
        let (x, y) = w.position(0);
        counts[y as usize * m + x as usize] += 1;
    }
    counts
}

#[test]
fn mobility_marginals_are_uniform() {
    let p = build_params(4, 4, 0.5, 1.0, 1e-6).unwrap();
    let steps = 160_000u64;
    let expected = steps as f64 / 16.0;
    for mobility in [Mobility::Iid, Mobility::RandomWalk, Mobility::RandomWaypoint] {
        let counts = occupancy_counts(&p, mobility, steps);
        for (cell, &c) in counts.iter().enumerate() {
            let rel = (c as f64 - expected).abs() / expected;
            assert!(rel < 0.10, "{mobility:?} cell {cell}: count {c} vs {expected}");
        }
    }
}

#[test]
fn waypoint_cells_stay_in_range() {
    let p = build_params(4, 5, 0.5, 1.0, 1e-6).unwrap();
    let mut w = SimWorld::new(&p, Mobility::RandomWaypoint, 3, 0);
    for _ in 0..10_000 {
        w.step_mobility();
        for node in 0..4 {
            let (x, y) = w.position(node);
            assert!((x as u32) < p.m && (y as u32) < p.m);
        }
    }
}

#[test]
fn source_departure_rate_matches_arrival_rate() {
    // rate conservation: in steady state the tagged source dispatches at its
    // arrival rate
    let base = build_params(8, 4, 0.5, 1.0, 1e-6).unwrap();
    let mu = capacity(&base).mu;
    let p = base.with_lambda(0.6 * mu).unwrap();
    let raw = run(&p, &config(Mobility::Iid, 400_000, 40_000, 0)).unwrap();
    let rate = raw.tagged.departure_rate();
    let rel = (rate - p.lambda).abs() / p.lambda;
    assert!(rel < 0.05, "departure rate {rate} vs lambda {}", p.lambda);
}

#[test]
fn simulated_delay_tracks_analytic_delay() {
    let base = build_params(8, 4, 0.5, 1.0, 1e-6).unwrap();
    let mu = capacity(&base).mu;
    let p = base.with_lambda(0.6 * mu).unwrap();
    let theory = expected_delay(&p).unwrap().expected_delay_slots;
    let runs: Vec<_> = (0..3)
        .map(|rep| run(&p, &config(Mobility::Iid, 600_000, 100_000, rep)).unwrap())
        .collect();
    let metrics = summarize(&runs, p.n);
    let rel = (metrics.mean_delay - theory).abs() / theory;
    assert!(
        rel < 0.20,
        "sim {} +- {:?} vs theory {theory}",
        metrics.mean_delay,
        metrics.ci95_halfwidth
    );
}
