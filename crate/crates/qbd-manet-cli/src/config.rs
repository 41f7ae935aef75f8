//! Scenario files: TOML on disk, validated into a ready-to-run `Scenario`.

use std::env;
use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use qbd_manet::params::build_params;
use qbd_manet::qbd::capacity;
use qbd_manet::sim::Mobility;
use qbd_manet::NetworkParams;

use crate::cli::CommonArgs;
use crate::CliError;

/// Default output directory when neither the flag nor the scenario sets one.
pub const OUTPUT_DIR_ENV: &str = "QBD_MANET_OUTPUT_DIR";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: u32,
    m: u32,
    q: f64,
    delta: f64,
    /// Absolute generation rate in packets/slot; exclusive with `rho`.
    lambda: Option<f64>,
    /// System load as a fraction of the per-node capacity; exclusive with
    /// `lambda`. Values above 1 are allowed for saturation experiments.
    rho: Option<f64>,
    mobility: Option<String>,
    slots: Option<u64>,
    warmup_slots: Option<u64>,
    replications: Option<u32>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

/// A fully resolved scenario: parameters validated, `lambda` bound, defaults
/// and overrides applied.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: NetworkParams,
    /// Per-node throughput capacity of the parameter set.
    pub mu: f64,
    /// Offered load as a fraction of capacity.
    pub rho: f64,
    /// Whether the scenario pinned `lambda` directly (sweeps then keep it
    /// fixed instead of rescaling with capacity).
    pub lambda_explicit: bool,
    pub mobility: Mobility,
    pub slots: u64,
    pub warmup_slots: u64,
    pub replications: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
}

pub fn mobility_name(m: Mobility) -> &'static str {
    match m {
        Mobility::Iid => "iid",
        Mobility::RandomWalk => "random_walk",
        Mobility::RandomWaypoint => "random_waypoint",
    }
}

fn parse_mobility(name: &str) -> Result<Mobility, CliError> {
    match name {
        "iid" => Ok(Mobility::Iid),
        "random_walk" => Ok(Mobility::RandomWalk),
        "random_waypoint" => Ok(Mobility::RandomWaypoint),
        other => Err(CliError::config(format!(
            "mobility = {other:?} is not one of iid, random_walk, random_waypoint"
        ))),
    }
}

pub fn load_scenario(args: &CommonArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(&format!("cannot read {}", args.config.display()), e))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;

    // bind lambda: either given directly or deferred as a capacity fraction
    let (lambda_opt, rho_opt) = (raw.lambda, raw.rho);
    let placeholder = build_params(raw.n, raw.m, raw.q, raw.delta, 0.5)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let mu = capacity(&placeholder).mu;
    let (lambda, rho, lambda_explicit) = match (lambda_opt, rho_opt) {
        (Some(l), None) => (l, l / mu, true),
        (None, Some(r)) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::config(format!("rho = {r} must be finite and > 0")));
            }
            (r * mu, r, false)
        }
        (Some(_), Some(_)) => {
            return Err(CliError::config("set either lambda or rho, not both"));
        }
        (None, None) => {
            return Err(CliError::config("one of lambda or rho is required"));
        }
    };
    let params = placeholder
        .with_lambda(lambda)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;

    let slots = raw.slots.unwrap_or(1_000_000);
    let warmup_slots = raw.warmup_slots.unwrap_or(slots / 10);
    if warmup_slots >= slots {
        return Err(CliError::config(format!(
            "warmup_slots = {warmup_slots} must be smaller than slots = {slots}"
        )));
    }
    let replications = raw.replications.unwrap_or(10);
    if replications == 0 {
        return Err(CliError::config("replications must be at least 1"));
    }

    let mobility = match raw.mobility.as_deref() {
        Some(name) => parse_mobility(name)?,
        None => Mobility::Iid,
    };
    let seed = args.seed.or(raw.seed).unwrap_or(0);
    let output_dir = args
        .output_dir
        .clone()
        .or(raw.output_dir)
        .or_else(|| env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qbd-manet-out"));

    Ok(Scenario {
        params,
        mu,
        rho,
        lambda_explicit,
        mobility,
        slots,
        warmup_slots,
        replications,
        seed,
        output_dir,
    })
}

impl Scenario {
    /// Short identifier used in report rows.
    pub fn id(&self) -> String {
        format!(
            "n{}_m{}_q{:.2}_rho{:.3}_{}",
            self.params.n,
            self.params.m,
            self.params.q,
            self.rho,
            mobility_name(self.mobility)
        )
    }
}
