//! Randomized invariants over the parameter space and the queue handshake.

use proptest::prelude::*;
use std::collections::VecDeque;

use qbd_manet::metrics::summarize;
use qbd_manet::params::build_params;
use qbd_manet::probability::compute_table;
use qbd_manet::qbd::capacity;
use qbd_manet::sim::{DeliveryRecord, Packet, RawRun, TaggedStats};

proptest! {
    #[test]
    fn derived_guard_parameters_stay_in_range(
        n in 4u32..200,
        m in 3u32..32,
        q in 0.01f64..0.99,
        delta in 0.0f64..3.0,
    ) {
        let p = build_params(n, m, q, delta, 1e-6).unwrap();
        prop_assert!(p.alpha >= 3.min(m));
        prop_assert!(p.alpha <= m);
        prop_assert!((p.r * m as f64 - 8f64.sqrt()).abs() < 1e-12);
        // a larger guard factor never shrinks the reuse spacing
        let p2 = build_params(n, m, q, delta + 0.5, 1e-6).unwrap();
        prop_assert!(p2.alpha >= p.alpha);
    }

    #[test]
    fn probability_table_is_well_formed_everywhere(
        n in 4u32..60,
        m in 3u32..16,
        q in 0.05f64..0.95,
        rho in 0.05f64..0.9,
    ) {
        let base = build_params(n, m, q, 1.0, 1e-9).unwrap();
        let mu = capacity(&base).mu;
        prop_assert!(mu > 0.0 && mu < 1.0);
        let p = base.with_lambda(rho * mu).unwrap();
        let t = compute_table(&p).unwrap();
        prop_assert!((t.p_c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((t.p_0_empty + t.p_0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..(n as usize - 1) {
            let four = t.p_b_plus_j[i] + t.p_b_minus[i] + t.p_f_plus[i] + t.p_f_minus[i];
            prop_assert!((four - 1.0).abs() < 1e-9);
            prop_assert!(t.p_r[i] > 0.0 && t.p_r[i] < 1.0);
        }
    }

    #[test]
    fn handshake_matches_naive_reference(
        ids in proptest::collection::btree_set(1u64..40, 0..12),
        ack in 0u64..40,
    ) {
        // FIFO invariant of the real queues: strictly increasing IDs
        let mut queue: VecDeque<Packet> =
            ids.iter().map(|&id| Packet { src: 0, id, gen_slot: 0 }).collect();
        let mut reference: Vec<u64> = ids.iter().copied().collect();

        let got = qbd_manet::sim::take_requested(&mut queue, ack);
        let hit = reference.contains(&(ack + 1));
        if hit {
            reference.retain(|&id| id > ack + 1);
        }
        prop_assert_eq!(got.map(|p| p.id), hit.then_some(ack + 1));
        let left: Vec<u64> = queue.iter().map(|p| p.id).collect();
        if hit {
            prop_assert_eq!(left, reference);
        } else {
            let untouched: Vec<u64> = ids.iter().copied().collect();
            prop_assert_eq!(left, untouched);
        }
    }

    #[test]
    fn summary_is_permutation_invariant(
        delays in proptest::collection::vec(1u64..5_000, 2..12),
        rotate in 0usize..12,
    ) {
        let runs: Vec<RawRun> = delays
            .iter()
            .map(|&d| RawRun {
                records: vec![DeliveryRecord { flow: 0, id: 1, gen_slot: 0, deliver_slot: d }],
                generated: vec![1],
                delivered: vec![1],
                delivered_post_warmup: 1,
                slots: 10_000,
                warmup_slots: 0,
                tagged: TaggedStats::default(),
                interference_violations: 0,
                conservation_failures: 0,
            })
            .collect();
        let mut rotated = runs.clone();
        rotated.rotate_left(rotate % runs.len());
        let a = summarize(&runs, 1);
        let b = summarize(&rotated, 1);
        prop_assert_eq!(a.mean_delay, b.mean_delay);
        prop_assert!((a.ci95_halfwidth.unwrap() - b.ci95_halfwidth.unwrap()).abs() < 1e-9);
    }
}
