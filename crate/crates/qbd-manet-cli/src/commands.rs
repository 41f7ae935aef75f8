//! The five subcommands.

use rayon::prelude::*;
use serde::Serialize;

use qbd_manet::metrics::{summarize, RunMetrics};
use qbd_manet::oracle;
use qbd_manet::params::build_params;
use qbd_manet::probability::compute_table;
use qbd_manet::qbd::{capacity, expected_delay};
use qbd_manet::sim::{run, Mobility, RawRun, SimConfig};
use qbd_manet::NetworkParams;

use crate::cli::Campaign;
use crate::config::{mobility_name, Scenario};
use crate::output::{csv_finish, csv_row, csv_writer, ensure_dir, write_json};
use crate::CliError;

#[derive(Debug, Serialize)]
struct ParamsReport {
    n: u32,
    m: u32,
    q: f64,
    delta: f64,
    lambda: f64,
    rho: f64,
    alpha: u32,
}

impl ParamsReport {
    fn new(p: &NetworkParams, rho: f64) -> Self {
        Self { n: p.n, m: p.m, q: p.q, delta: p.delta, lambda: p.lambda, rho, alpha: p.alpha }
    }
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    params: ParamsReport,
    mu: f64,
    mu_s: f64,
    mu_d: f64,
    l1_bar: f64,
    l2_bar: f64,
    expected_delay_slots: f64,
    sp_r: f64,
    rate_residual: f64,
    boundary_residual: f64,
}

pub fn analyze(sc: &Scenario) -> Result<(), CliError> {
    let cap = capacity(&sc.params);
    let sol = expected_delay(&sc.params).map_err(|e| CliError::config(e.to_string()))?;
    let report = AnalyzeReport {
        params: ParamsReport::new(&sc.params, sc.rho),
        mu: cap.mu,
        mu_s: cap.mu_s,
        mu_d: cap.mu_d,
        l1_bar: sol.l1_bar,
        l2_bar: sol.l2_bar,
        expected_delay_slots: sol.expected_delay_slots,
        sp_r: sol.sp_r,
        rate_residual: sol.rate_residual,
        boundary_residual: sol.boundary_residual,
    };
    ensure_dir(&sc.output_dir)?;
    write_json(&sc.output_dir.join("analyze.json"), &report)
}

fn run_replications(
    sc: &Scenario,
    mobility: Mobility,
    lambda: f64,
) -> Result<Vec<RawRun>, CliError> {
    let params = sc.params.with_lambda(lambda).map_err(|e| CliError::config(e.to_string()))?;
    (0..sc.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let config = SimConfig {
                mobility,
                slots: sc.slots,
                warmup_slots: sc.warmup_slots,
                seed: sc.seed,
                replication: rep,
                debug_checks: false,
            };
            run(&params, &config).map_err(|e| CliError::config(e.to_string()))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    params: ParamsReport,
    mobility: &'static str,
    slots: u64,
    warmup_slots: u64,
    replications: u32,
    seed: u64,
    /// Absent when the observation window produced no deliveries.
    mean_delay: Option<f64>,
    ci95_halfwidth: Option<f64>,
    per_node_throughput: f64,
    delay_samples: u64,
    delivered: u64,
    generated: u64,
}

pub fn simulate(sc: &Scenario) -> Result<(), CliError> {
    ensure_dir(&sc.output_dir)?;
    let runs = run_replications(sc, sc.mobility, sc.params.lambda)?;
    for (rep, raw) in runs.iter().enumerate() {
        let mut w = csv_writer(&sc.output_dir.join(format!("replication_{rep}.csv")))?;
        csv_row(&mut w, &["flow", "id", "gen_slot", "deliver_slot"].map(String::from))?;
        for r in &raw.records {
            csv_row(
                &mut w,
                &[
                    r.flow.to_string(),
                    r.id.to_string(),
                    r.gen_slot.to_string(),
                    r.deliver_slot.to_string(),
                ],
            )?;
        }
        csv_finish(w)?;
    }
    let metrics = summarize(&runs, sc.params.n);
    let report = SimulateReport {
        params: ParamsReport::new(&sc.params, sc.rho),
        mobility: mobility_name(sc.mobility),
        slots: sc.slots,
        warmup_slots: sc.warmup_slots,
        replications: sc.replications,
        seed: sc.seed,
        mean_delay: (metrics.delay_sample_count > 0).then_some(metrics.mean_delay),
        ci95_halfwidth: metrics.ci95_halfwidth,
        per_node_throughput: metrics.per_node_throughput,
        delay_samples: metrics.delay_sample_count,
        delivered: metrics.delivered_count,
        generated: metrics.generated_count,
    };
    write_json(&sc.output_dir.join("simulate.json"), &report)
}

/// A scenario passes when the analytic delay falls inside the simulation's
/// 95% confidence interval, or within 5% relative error.
fn agreement(theory: f64, metrics: &RunMetrics) -> (f64, bool) {
    let rel_err = (metrics.mean_delay - theory).abs() / theory;
    let within_ci = metrics
        .ci95_halfwidth
        .is_some_and(|hw| (metrics.mean_delay - theory).abs() <= hw);
    (rel_err, within_ci || rel_err <= 0.05)
}

pub fn validate(sc: &Scenario) -> Result<(), CliError> {
    let sol = expected_delay(&sc.params).map_err(|e| CliError::config(e.to_string()))?;
    let theory = sol.expected_delay_slots;
    let runs = run_replications(sc, sc.mobility, sc.params.lambda)?;
    let metrics = summarize(&runs, sc.params.n);
    if metrics.delay_sample_count == 0 {
        return Err(CliError::Validation("no deliveries in the observation window".into()));
    }
    let (rel_err, pass) = agreement(theory, &metrics);

    ensure_dir(&sc.output_dir)?;
    let mut w = csv_writer(&sc.output_dir.join("validate.csv"))?;
    csv_row(
        &mut w,
        &["scenario", "theory_delay", "sim_delay", "ci95", "rel_err", "pass"].map(String::from),
    )?;
    let ci = metrics.ci95_halfwidth.map_or(String::new(), |h| h.to_string());
    csv_row(
        &mut w,
        &[
            sc.id(),
            theory.to_string(),
            metrics.mean_delay.to_string(),
            ci.clone(),
            rel_err.to_string(),
            pass.to_string(),
        ],
    )?;
    csv_finish(w)?;
    println!(
        "{}: theory {:.3} sim {:.3} +- {} rel_err {:.4} -> {}",
        sc.id(),
        theory,
        metrics.mean_delay,
        ci,
        rel_err,
        if pass { "pass" } else { "FAIL" }
    );

    // the analytic model assumes i.i.d. placement each slot; only that
    // mobility gates the exit status, other models are informational
    if !pass && sc.mobility == Mobility::Iid {
        return Err(CliError::Validation(format!(
            "simulated delay {:.3} disagrees with analytic delay {:.3} (rel_err {:.4})",
            metrics.mean_delay, theory, rel_err
        )));
    }
    Ok(())
}

fn q_grid() -> Vec<f64> {
    (0..20).map(|i| 0.05 + i as f64 * (0.90 / 19.0)).collect()
}

/// Rebinds the generation rate for a derived parameter point: explicit
/// lambdas stay fixed, load fractions track the new capacity.
fn bind_lambda(sc: &Scenario, mu: f64) -> f64 {
    if sc.lambda_explicit {
        sc.params.lambda
    } else {
        sc.rho * mu
    }
}

pub fn sweep(sc: &Scenario, campaign: Campaign) -> Result<(), CliError> {
    ensure_dir(&sc.output_dir)?;
    let path = sc.output_dir.join(format!("{}.csv", campaign.file_stem()));
    let mut w = csv_writer(&path)?;
    match campaign {
        Campaign::CapacityVsQ => {
            csv_row(&mut w, &["q", "mu", "mu_s", "mu_d"].map(String::from))?;
            for q in q_grid() {
                let p = build_params(sc.params.n, sc.params.m, q, sc.params.delta, 0.5)
                    .map_err(|e| CliError::config(e.to_string()))?;
                let cap = capacity(&p);
                csv_row(
                    &mut w,
                    &[q.to_string(), cap.mu.to_string(), cap.mu_s.to_string(), cap.mu_d.to_string()],
                )?;
            }
        }
        Campaign::DelayVsQ => {
            csv_row(&mut w, &["q", "lambda", "mu", "expected_delay_slots", "stable"].map(String::from))?;
            for q in q_grid() {
                let base = build_params(sc.params.n, sc.params.m, q, sc.params.delta, 0.5)
                    .map_err(|e| CliError::config(e.to_string()))?;
                let mu = capacity(&base).mu;
                let lambda = bind_lambda(sc, mu);
                let p = base.with_lambda(lambda).map_err(|e| CliError::config(e.to_string()))?;
                let delay = expected_delay(&p).ok().map(|s| s.expected_delay_slots);
                csv_row(
                    &mut w,
                    &[
                        q.to_string(),
                        lambda.to_string(),
                        mu.to_string(),
                        delay.map_or(String::new(), |d| d.to_string()),
                        delay.is_some().to_string(),
                    ],
                )?;
            }
        }
        Campaign::DelayVsN => {
            csv_row(&mut w, &["n", "lambda", "mu", "expected_delay_slots", "stable"].map(String::from))?;
            for n in (10..=100).step_by(10) {
                let base = build_params(n, sc.params.m, sc.params.q, sc.params.delta, 0.5)
                    .map_err(|e| CliError::config(e.to_string()))?;
                let mu = capacity(&base).mu;
                let lambda = bind_lambda(sc, mu);
                let p = base.with_lambda(lambda).map_err(|e| CliError::config(e.to_string()))?;
                let delay = expected_delay(&p).ok().map(|s| s.expected_delay_slots);
                csv_row(
                    &mut w,
                    &[
                        n.to_string(),
                        lambda.to_string(),
                        mu.to_string(),
                        delay.map_or(String::new(), |d| d.to_string()),
                        delay.is_some().to_string(),
                    ],
                )?;
            }
        }
        Campaign::DelayVsLoad => {
            csv_row(
                &mut w,
                &["rho", "lambda", "theory_delay", "sim_delay", "ci95", "rel_err"].map(String::from),
            )?;
            for i in 1..=9u32 {
                let rho = i as f64 / 10.0;
                let lambda = rho * sc.mu;
                let p = sc.params.with_lambda(lambda).map_err(|e| CliError::config(e.to_string()))?;
                let theory = expected_delay(&p)
                    .map_err(|e| CliError::config(e.to_string()))?
                    .expected_delay_slots;
                let runs = run_replications(sc, sc.mobility, lambda)?;
                let metrics = summarize(&runs, sc.params.n);
                let rel_err = (metrics.mean_delay - theory).abs() / theory;
                csv_row(
                    &mut w,
                    &[
                        rho.to_string(),
                        lambda.to_string(),
                        theory.to_string(),
                        metrics.mean_delay.to_string(),
                        metrics.ci95_halfwidth.map_or(String::new(), |h| h.to_string()),
                        rel_err.to_string(),
                    ],
                )?;
            }
        }
        Campaign::ThroughputPlateau => {
            csv_row(
                &mut w,
                &["load_fraction", "lambda", "mu", "per_node_throughput"].map(String::from),
            )?;
            for frac in [0.2, 0.4, 0.6, 0.8, 0.9, 1.2, 1.5, 2.0] {
                let lambda = frac * sc.mu;
                let runs = run_replications(sc, sc.mobility, lambda)?;
                let metrics = summarize(&runs, sc.params.n);
                csv_row(
                    &mut w,
                    &[
                        frac.to_string(),
                        lambda.to_string(),
                        sc.mu.to_string(),
                        metrics.per_node_throughput.to_string(),
                    ],
                )?;
            }
        }
    }
    csv_finish(w)?;
    println!("wrote {}", path.display());
    Ok(())
}

struct OracleRow {
    name: String,
    estimate: f64,
    exact: f64,
    std_err: f64,
    trials: u64,
}

impl OracleRow {
    /// Three standard errors. The empirical standard error collapses to zero
    /// on zero-hit rows, so the binomial error implied by the exact value
    /// (plus a one-count floor) backs it up.
    fn pass(&self) -> bool {
        let t = self.trials.max(1) as f64;
        let binom = (self.exact * (1.0 - self.exact) / t).sqrt();
        (self.estimate - self.exact).abs() <= 3.0 * self.std_err.max(binom) + 3.0 / t
    }
}

pub fn oracle(sc: &Scenario, trials: u64) -> Result<(), CliError> {
    let p = &sc.params;
    let table = compute_table(p).map_err(|e| CliError::config(e.to_string()))?;
    let n = p.n as usize;
    let mut rows = Vec::new();

    let est = oracle::oracle_p_b(p, trials, sc.seed);
    rows.push(OracleRow {
        name: "p_b".into(),
        estimate: est.estimate,
        exact: table.p_b,
        std_err: est.std_err,
        trials: est.trials,
    });
    for (i, est) in oracle::oracle_p_c(p, trials, sc.seed ^ 1).iter().enumerate() {
        rows.push(OracleRow {
            name: format!("p_c({})", i + 1),
            estimate: est.estimate,
            exact: table.p_c[i],
            std_err: est.std_err,
            trials: est.trials,
        });
    }
    let mut p_r_js = vec![1, 2, n - 1];
    p_r_js.dedup();
    for j in p_r_js {
        let est = oracle::oracle_p_r(p, j, trials, sc.seed ^ (2 + j as u64));
        rows.push(OracleRow {
            name: format!("p_r({j})"),
            estimate: est.estimate,
            exact: table.p_r[j - 1],
            std_err: est.std_err,
            trials: est.trials,
        });
    }
    for (j, est) in oracle::oracle_p_0(p, table.lambda_prime, trials, sc.seed ^ 101)
        .iter()
        .enumerate()
    {
        let exact = if j == 0 { table.p_0_empty } else { table.p_0[j - 1] };
        rows.push(OracleRow {
            name: format!("p_0({j})"),
            estimate: est.estimate,
            exact,
            std_err: est.std_err,
            trials: est.trials,
        });
    }
    let est = oracle::oracle_p_b_plus(p, table.lambda_prime, trials, sc.seed ^ 202);
    rows.push(OracleRow {
        name: "p_b_plus".into(),
        estimate: est.estimate,
        exact: table.p_b_plus,
        std_err: est.std_err,
        trials: est.trials,
    });

    ensure_dir(&sc.output_dir)?;
    let mut w = csv_writer(&sc.output_dir.join("oracle.csv"))?;
    csv_row(
        &mut w,
        &["name", "estimate", "exact", "std_err", "trials", "pass"].map(String::from),
    )?;
    let mut failures = 0;
    for row in &rows {
        let ok = row.pass();
        failures += u32::from(!ok);
        csv_row(
            &mut w,
            &[
                row.name.clone(),
                row.estimate.to_string(),
                row.exact.to_string(),
                row.std_err.to_string(),
                row.trials.to_string(),
                ok.to_string(),
            ],
        )?;
        println!(
            "{:<12} estimate {:.6e} exact {:.6e} se {:.2e} -> {}",
            row.name,
            row.estimate,
            row.exact,
            row.std_err,
            if ok { "pass" } else { "FAIL" }
        );
    }
    csv_finish(w)?;

    // debug dump of the full closed-form table
    let mut w = csv_writer(&sc.output_dir.join("probability_table.csv"))?;
    csv_row(
        &mut w,
        &["j", "p_c", "p_r", "p_0", "p_b_plus", "p_b_minus", "p_f_plus", "p_f_minus"]
            .map(String::from),
    )?;
    for j in 1..n {
        let i = j - 1;
        csv_row(
            &mut w,
            &[
                j.to_string(),
                table.p_c[i].to_string(),
                table.p_r[i].to_string(),
                table.p_0[i].to_string(),
                table.p_b_plus_j[i].to_string(),
                table.p_b_minus[i].to_string(),
                table.p_f_plus[i].to_string(),
                table.p_f_minus[i].to_string(),
            ],
        )?;
    }
    csv_finish(w)?;

    if failures > 0 {
        return Err(CliError::Validation(format!(
            "{failures} oracle estimate(s) disagree with the closed forms"
        )));
    }
    Ok(())
}
