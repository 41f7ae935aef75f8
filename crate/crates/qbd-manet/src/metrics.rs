//! Aggregation of replication results into reported quantities.
//!
//! Confidence intervals are across-replication t-intervals: replications are
//! independent by construction, each contributes one mean, and the warmup
//! window inside each run removes the transient.

use alloc::vec::Vec;

use crate::sim::RawRun;

/// Two-sided 95% Student-t critical values for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706204736432095,
    4.302652729696142,
    3.182446305284263,
    2.7764451051977987,
    2.570581835636314,
    2.4469118511449692,
    2.3646242515927844,
    2.306004135204166,
    2.2621571628540993,
    2.2281388519649385,
    2.200985160082949,
    2.1788128296634177,
    2.1603686564610127,
    2.1447866879169273,
    2.131449545559323,
    2.1199052992210112,
    2.1098155778331806,
    2.10092204024096,
    2.093024054408263,
    2.0859634472658364,
    2.079613844727662,
    2.0738730679040147,
    2.0686576104190406,
    2.0638985616280205,
    2.059538552753294,
    2.055529438642871,
    2.0518305164802833,
    2.048407141795244,
    2.045229642132703,
    2.0422724563012373,
];

/// 97.5% Student-t quantile; tabulated up to 30 degrees of freedom, then a
/// Cornish-Fisher expansion around the normal quantile (error < 1e-3).
pub fn t_critical_975(df: usize) -> f64 {
    assert!(df >= 1);
    if df <= 30 {
        T975[df - 1]
    } else {
        let z = 1.959963984540054_f64;
        let d = df as f64;
        let z3 = z * z * z;
        let z5 = z3 * z * z;
        z + (z3 + z) / (4.0 * d) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * d * d)
    }
}

/// Aggregated measurements over a set of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub replications: usize,
    /// Mean end-to-end delay per replication (slots), post-warmup packets only.
    pub rep_mean_delays: Vec<f64>,
    /// Mean of the per-replication means.
    pub mean_delay: f64,
    /// 95% CI halfwidth across replications; `None` with fewer than 2.
    pub ci95_halfwidth: Option<f64>,
    /// Deliveries per slot per node, averaged over flows and replications.
    pub per_node_throughput: f64,
    pub delay_sample_count: u64,
    pub delivered_count: u64,
    pub generated_count: u64,
    pub slots_observed: u64,
}

/// Collapses per-replication raw runs into the reported metrics.
pub fn summarize(runs: &[RawRun], n_nodes: u32) -> RunMetrics {
    assert!(!runs.is_empty());
    let mut rep_mean_delays = Vec::with_capacity(runs.len());
    let mut rep_throughputs = Vec::with_capacity(runs.len());
    let mut delay_sample_count = 0;
    let mut delivered_count = 0;
    let mut generated_count = 0;
    let mut slots_observed = 0;
    for run in runs {
        let mut sum = 0.0;
        let mut count = 0u64;
        for rec in &run.records {
            if rec.gen_slot >= run.warmup_slots {
                sum += (rec.deliver_slot - rec.gen_slot) as f64;
                count += 1;
            }
        }
        rep_mean_delays.push(if count > 0 { sum / count as f64 } else { f64::NAN });
        delay_sample_count += count;
        let window = run.slots - run.warmup_slots;
        rep_throughputs
            .push(run.delivered_post_warmup as f64 / (window as f64 * n_nodes as f64));
        delivered_count += run.delivered.iter().sum::<u64>();
        generated_count += run.generated.iter().sum::<u64>();
        slots_observed += window;
    }
    let k = runs.len();
    let mean_delay = rep_mean_delays.iter().sum::<f64>() / k as f64;
    let ci95_halfwidth = if k >= 2 {
        let var = rep_mean_delays
            .iter()
            .map(|d| (d - mean_delay) * (d - mean_delay))
            .sum::<f64>()
            / (k - 1) as f64;
        Some(t_critical_975(k - 1) * libm::sqrt(var / k as f64))
    } else {
        None
    };
    let per_node_throughput = rep_throughputs.iter().sum::<f64>() / k as f64;
    RunMetrics {
        replications: k,
        rep_mean_delays,
        mean_delay,
        ci95_halfwidth,
        per_node_throughput,
        delay_sample_count,
        delivered_count,
        generated_count,
        slots_observed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{DeliveryRecord, RawRun, TaggedStats};
    use alloc::vec;

    fn synthetic_run(delays: &[u64], warmup: u64, slots: u64) -> RawRun {
        let records = delays
            .iter()
            .enumerate()
            .map(|(i, &d)| DeliveryRecord {
                flow: 0,
                id: i as u64 + 1,
                gen_slot: warmup,
                deliver_slot: warmup + d,
            })
            .collect();
        RawRun {
            records,
            generated: vec![delays.len() as u64],
            delivered: vec![delays.len() as u64],
            delivered_post_warmup: delays.len() as u64,
            slots,
            warmup_slots: warmup,
            tagged: TaggedStats::default(),
            interference_violations: 0,
            conservation_failures: 0,
        }
    }

    #[test]
    fn identical_replications_have_zero_halfwidth() {
        let runs = vec![synthetic_run(&[10, 20], 0, 100); 5];
        let m = summarize(&runs, 1);
        assert_eq!(m.mean_delay, 15.0);
        assert_eq!(m.ci95_halfwidth, Some(0.0));
    }

    #[test]
    fn textbook_t_interval_k10() {
        // ten synthetic means 1..=10: sample mean 5.5, sample sd sqrt(55/6)
        let runs: Vec<RawRun> = (1..=10u64).map(|d| synthetic_run(&[d], 0, 100)).collect();
        let m = summarize(&runs, 1);
        assert!((m.mean_delay - 5.5).abs() < 1e-12);
        let s = libm::sqrt(55.0 / 6.0);
        let expected = 2.2621571628540993 * s / libm::sqrt(10.0);
        assert!((m.ci95_halfwidth.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn single_replication_has_no_interval() {
        let m = summarize(&[synthetic_run(&[5], 0, 100)], 1);
        assert_eq!(m.ci95_halfwidth, None);
    }

    #[test]
    fn permutation_invariant() {
        let a = vec![
            synthetic_run(&[10], 0, 100),
            synthetic_run(&[30], 0, 100),
            synthetic_run(&[20], 0, 100),
        ];
        let mut b = a.clone();
        b.reverse();
        let ma = summarize(&a, 1);
        let mb = summarize(&b, 1);
        assert_eq!(ma.mean_delay, mb.mean_delay);
        assert_eq!(ma.ci95_halfwidth, mb.ci95_halfwidth);
    }

    #[test]
    fn warmup_packets_excluded() {
        let mut run = synthetic_run(&[10], 100, 1000);
        run.records.push(DeliveryRecord { flow: 0, id: 99, gen_slot: 5, deliver_slot: 50 });
        let m = summarize(&[run], 1);
        assert_eq!(m.delay_sample_count, 1);
        assert_eq!(m.mean_delay, 10.0);
    }

    #[test]
    fn t_table_asymptotics() {
        assert!((t_critical_975(1) - 12.706204736432095).abs() < 1e-12);
        // large-df expansion approaches the tabulated region smoothly
        assert!((t_critical_975(31) - 2.0395).abs() < 1e-3);
        assert!((t_critical_975(10_000) - 1.9602).abs() < 1e-3);
    }
}
