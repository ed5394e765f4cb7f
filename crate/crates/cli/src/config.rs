//! Experiment configuration: a TOML file with strict validation, defaults,
//! and derived quantities echoed into every output header.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use cac_core::model::{
    mobility_rho, OccupancyConvention, PricingScheme, QosClassSpec, TrafficModel,
};
use cac_core::nag::NagConfig;
use cac_core::solver::{Criterion, DepartureRates, ModelOptions, RewardTiming, SolverConfig};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// Raw file schema (unknown keys rejected everywhere)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    model: RawModel,
    classes: Vec<RawClass>,
    traffic: RawTraffic,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    nag: RawNag,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    total_channels: u32,
    pricing: Option<String>,
    convention: Option<String>,
    departure_rates: Option<String>,
    reward_timing: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    bandwidth: u32,
    r_db: Option<f64>,
    reward_carry: Option<f64>,
    reward_block: Option<f64>,
    reward_drop: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraffic {
    class_mix: Vec<f64>,
    arrival_rate: Option<f64>,
    arrival_rates: Option<Vec<f64>>,
    offered_load: Option<f64>,
    offered_loads: Option<Vec<f64>>,
    mean_holding_time: Option<f64>,
    speed: Option<f64>,
    cell_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    criterion: Option<String>,
    discount: Option<f64>,
    epsilon: Option<f64>,
    max_sweeps: Option<usize>,
    fixed_point_tolerance: Option<f64>,
    fixed_point_damping: Option<f64>,
    max_fixed_point_iters: Option<usize>,
    method: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNag {
    alpha: Option<f64>,
    t_est: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    rings: Option<u32>,
    horizon: Option<f64>,
    warmup: Option<f64>,
    replications: Option<u32>,
    base_seed: Option<u64>,
    allow_self_reinjection: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

/// How the outer fixed point is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    FixedPoint,
    BinarySearch,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMethod::FixedPoint => write!(f, "fixed-point"),
            SolveMethod::BinarySearch => write!(f, "binary-search"),
        }
    }
}

/// One point on the offered-load axis, with its derived arrival rate.
/// Offered load is `lambda * (1/mu) * sum_i mix_i * b_i` — BU-erlangs per
/// cell, so 100 means the mean offered bandwidth equals a 100 BU cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub load: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub rings: u32,
    pub horizon: f64,
    pub warmup: f64,
    pub replications: u32,
    pub base_seed: u64,
    pub allow_self_reinjection: bool,
}

/// A fully validated experiment description with all defaults applied.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub classes: Vec<QosClassSpec>,
    pub total_channels: u32,
    pub options: ModelOptions,
    pub class_mix: Vec<f64>,
    pub holding_rate: f64,
    pub mean_holding_time: f64,
    pub speed_kmh: f64,
    pub cell_radius_km: f64,
    pub rho: f64,
    pub load_points: Vec<LoadPoint>,
    pub solver: SolverConfig,
    pub solve_method: SolveMethod,
    pub nag: NagConfig,
    pub sim: SimSettings,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Mean bandwidth of one call in BU: `sum_i mix_i * b_i`.
    pub fn bu_per_call(&self) -> f64 {
        self.class_mix
            .iter()
            .zip(&self.classes)
            .map(|(&m, c)| m * f64::from(c.bandwidth))
            .sum()
    }

    /// Traffic model for one load point (coupling vector zeroed; the solver
    /// owns it).
    pub fn traffic_for(&self, lambda: f64) -> TrafficModel {
        TrafficModel {
            total_channels: self.total_channels,
            arrival_rate: lambda,
            class_mix: self.class_mix.clone(),
            holding_rates: vec![self.holding_rate; self.classes.len()],
            handoff_rate_per_call: self.rho * self.holding_rate,
            expected_neighbor_calls: vec![0.0; self.classes.len()],
        }
    }

    /// Restricts the load axis to the requested points (must be configured).
    pub fn select_loads(&mut self, loads: &[f64]) -> Result<(), CliError> {
        let mut points = Vec::with_capacity(loads.len());
        for &want in loads {
            let found = self
                .load_points
                .iter()
                .find(|p| (p.load - want).abs() < 1e-9)
                .copied()
                .unwrap_or_else(|| LoadPoint {
                    load: want,
                    lambda: want * self.holding_rate / self.bu_per_call(),
                });
            points.push(found);
        }
        if points.is_empty() {
            return Err(config_err("--loads selected an empty load list"));
        }
        self.load_points = points;
        Ok(())
    }

    /// Every effective parameter, explicit or defaulted, in a fixed order.
    /// Written as the `#`-prefixed header of each output file.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let list = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };

        push("schema_version", SCHEMA_VERSION.to_string());
        push("model.total_channels", self.total_channels.to_string());
        push("model.pricing", self.options.scheme.to_string());
        push("model.convention", self.options.convention.to_string());
        push("model.departure_rates", self.options.departure_rates.to_string());
        push("model.reward_timing", self.options.reward_timing.to_string());
        for class in &self.classes {
            let base = format!("class.{}", class.index);
            push(&format!("{base}.bandwidth"), class.bandwidth.to_string());
            push(&format!("{base}.reward_carry"), class.reward_carry.to_string());
            push(&format!("{base}.reward_block"), class.reward_block.to_string());
            push(&format!("{base}.reward_drop"), class.reward_drop.to_string());
        }
        push("traffic.class_mix", list(&self.class_mix));
        push("traffic.mean_holding_time", self.mean_holding_time.to_string());
        push("traffic.holding_rate", self.holding_rate.to_string());
        push("traffic.speed", self.speed_kmh.to_string());
        push("traffic.cell_radius", self.cell_radius_km.to_string());
        push("traffic.rho", self.rho.to_string());
        push(
            "traffic.handoff_rate_per_call",
            (self.rho * self.holding_rate).to_string(),
        );
        push("traffic.bu_per_call", self.bu_per_call().to_string());
        let loads: Vec<f64> = self.load_points.iter().map(|p| p.load).collect();
        let lambdas: Vec<f64> = self.load_points.iter().map(|p| p.lambda).collect();
        push("traffic.offered_loads", list(&loads));
        push("traffic.arrival_rates", list(&lambdas));
        push("solver.criterion", self.solver.criterion.to_string());
        push("solver.epsilon", self.solver.epsilon.to_string());
        push("solver.max_sweeps", self.solver.max_sweeps.to_string());
        push(
            "solver.fixed_point_tolerance",
            self.solver.fixed_point_tolerance.to_string(),
        );
        push(
            "solver.fixed_point_damping",
            self.solver.fixed_point_damping.to_string(),
        );
        push(
            "solver.max_fixed_point_iters",
            self.solver.max_fixed_point_iters.to_string(),
        );
        push("solver.method", self.solve_method.to_string());
        push("nag.alpha", self.nag.alpha.to_string());
        push("nag.t_est", self.nag.t_est.to_string());
        push("simulation.rings", self.sim.rings.to_string());
        push("simulation.horizon", self.sim.horizon.to_string());
        push("simulation.warmup", self.sim.warmup.to_string());
        push("simulation.replications", self.sim.replications.to_string());
        push("simulation.base_seed", self.sim.base_seed.to_string());
        push(
            "simulation.allow_self_reinjection",
            self.sim.allow_self_reinjection.to_string(),
        );
        out
    }
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        config_err(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| config_err(format!("parse error: {e}")))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, CliError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(config_err(format!(
            "schema_version: expected {SCHEMA_VERSION}, found {}",
            raw.schema_version
        )));
    }
    if raw.classes.is_empty() {
        return Err(config_err("classes: at least one QoS class is required"));
    }

    let mut classes = Vec::with_capacity(raw.classes.len());
    for (i, class) in raw.classes.iter().enumerate() {
        let index = i + 1;
        let field = |name: &str| format!("classes[{i}].{name}");
        if class.bandwidth < 1 {
            return Err(config_err(format!("{}: must be >= 1 BU", field("bandwidth"))));
        }
        let carry = class.reward_carry.unwrap_or(f64::from(class.bandwidth));
        let block = class.reward_block.unwrap_or(-0.1 * carry);
        let r_db = class.r_db.unwrap_or(80.0);
        if r_db < 0.0 {
            return Err(config_err(format!("{}: must be >= 0", field("r_db"))));
        }
        let drop = class.reward_drop.unwrap_or(r_db * block);
        classes.push(
            QosClassSpec::new(index, class.bandwidth, carry, block, drop)
                .map_err(|e| config_err(format!("classes[{i}]: {e}")))?,
        );
    }

    let scheme = match raw.model.pricing.as_deref().unwrap_or("flat") {
        "flat" => PricingScheme::Flat,
        "linear" => PricingScheme::Linear,
        other => {
            return Err(config_err(format!(
                "model.pricing: unknown scheme `{other}` (expected flat|linear)"
            )))
        }
    };
    let convention = match raw.model.convention.as_deref().unwrap_or("post-action") {
        "post-action" => OccupancyConvention::PostAction,
        "pre-action" => OccupancyConvention::PreActionRates,
        other => {
            return Err(config_err(format!(
                "model.convention: unknown convention `{other}` (expected post-action|pre-action)"
            )))
        }
    };
    let departure_rates = match raw
        .model
        .departure_rates
        .as_deref()
        .unwrap_or("include-handoff-out")
    {
        "include-handoff-out" => DepartureRates::IncludeHandoffOut,
        "holding-only" => DepartureRates::HoldingOnly,
        other => {
            return Err(config_err(format!(
                "model.departure_rates: unknown composition `{other}` \
                 (expected include-handoff-out|holding-only)"
            )))
        }
    };
    let reward_timing = match raw.model.reward_timing.as_deref().unwrap_or("per-event") {
        "per-event" => RewardTiming::PerEvent,
        "sojourn-weighted" => RewardTiming::SojournWeighted,
        other => {
            return Err(config_err(format!(
                "model.reward_timing: unknown timing `{other}` (expected per-event|sojourn-weighted)"
            )))
        }
    };
    let options = ModelOptions {
        scheme,
        convention,
        reward_timing,
        departure_rates,
    };

    let k = classes.len();
    let traffic = &raw.traffic;
    if traffic.class_mix.len() != k {
        return Err(config_err(format!(
            "traffic.class_mix: has {} entries, expected one per class ({k})",
            traffic.class_mix.len()
        )));
    }
    let mix_sum: f64 = traffic.class_mix.iter().sum();
    if traffic.class_mix.iter().any(|&m| !(0.0..=1.0).contains(&m)) || (mix_sum - 1.0).abs() > 1e-9
    {
        return Err(config_err(format!(
            "traffic.class_mix: entries must lie in [0,1] and sum to 1 (sum = {mix_sum})"
        )));
    }
    let mean_holding_time = traffic.mean_holding_time.unwrap_or(120.0);
    if !(mean_holding_time > 0.0) {
        return Err(config_err("traffic.mean_holding_time: must be > 0 seconds"));
    }
    let holding_rate = 1.0 / mean_holding_time;
    let speed_kmh = traffic.speed.unwrap_or(50.0);
    if !(speed_kmh >= 0.0) {
        return Err(config_err("traffic.speed: must be >= 0 km/h"));
    }
    let cell_radius_km = traffic.cell_radius.unwrap_or(1.0);
    if !(cell_radius_km > 0.0) {
        return Err(config_err("traffic.cell_radius: must be > 0 km"));
    }
    let rho = mobility_rho(speed_kmh, holding_rate, cell_radius_km)
        .map_err(|e| config_err(format!("traffic: {e}")))?;

    let bu_per_call: f64 = traffic
        .class_mix
        .iter()
        .zip(&classes)
        .map(|(&m, c)| m * f64::from(c.bandwidth))
        .sum();
    let load_points = resolve_loads(traffic, holding_rate, bu_per_call)?;

    let criterion = match raw.solver.criterion.as_deref().unwrap_or("average") {
        "average" => Criterion::AverageReward,
        "discounted" => {
            let gamma = raw.solver.discount.unwrap_or(0.95);
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(config_err("solver.discount: must lie in (0,1)"));
            }
            Criterion::Discounted(gamma)
        }
        other => {
            return Err(config_err(format!(
                "solver.criterion: unknown criterion `{other}` (expected average|discounted)"
            )))
        }
    };
    let solver = SolverConfig {
        criterion,
        epsilon: raw.solver.epsilon.unwrap_or(1e-6),
        max_sweeps: raw.solver.max_sweeps.unwrap_or(1_000_000),
        fixed_point_tolerance: raw.solver.fixed_point_tolerance.unwrap_or(0.01),
        fixed_point_damping: raw.solver.fixed_point_damping.unwrap_or(0.5),
        max_fixed_point_iters: raw.solver.max_fixed_point_iters.unwrap_or(100),
        ..SolverConfig::default()
    };
    if !(solver.epsilon > 0.0) {
        return Err(config_err("solver.epsilon: must be > 0"));
    }
    if !(solver.fixed_point_tolerance > 0.0) {
        return Err(config_err("solver.fixed_point_tolerance: must be > 0"));
    }
    if !(solver.fixed_point_damping > 0.0 && solver.fixed_point_damping <= 1.0) {
        return Err(config_err("solver.fixed_point_damping: must lie in (0,1]"));
    }
    let solve_method = match raw.solver.method.as_deref().unwrap_or("fixed-point") {
        "fixed-point" => SolveMethod::FixedPoint,
        "binary-search" => {
            if k != 1 {
                return Err(config_err(
                    "solver.method: binary-search requires exactly one QoS class",
                ));
            }
            SolveMethod::BinarySearch
        }
        other => {
            return Err(config_err(format!(
                "solver.method: unknown method `{other}` (expected fixed-point|binary-search)"
            )))
        }
    };

    let nag = NagConfig::new(raw.nag.alpha.unwrap_or(0.01), raw.nag.t_est.unwrap_or(5.0))
        .map_err(|e| config_err(format!("nag: {e}")))?;

    let horizon = raw.simulation.horizon.unwrap_or(20_000.0);
    let warmup = raw.simulation.warmup.unwrap_or(0.1 * horizon);
    if !(horizon > 0.0) {
        return Err(config_err("simulation.horizon: must be > 0 seconds"));
    }
    if !(warmup >= 0.0 && warmup < horizon) {
        return Err(config_err(
            "simulation.warmup: must satisfy 0 <= warmup < horizon",
        ));
    }
    let replications = raw.simulation.replications.unwrap_or(5);
    if replications < 1 {
        return Err(config_err("simulation.replications: must be >= 1"));
    }
    let sim = SimSettings {
        rings: raw.simulation.rings.unwrap_or(2),
        horizon,
        warmup,
        replications,
        base_seed: raw.simulation.base_seed.unwrap_or(1),
        allow_self_reinjection: raw.simulation.allow_self_reinjection.unwrap_or(true),
    };

    Ok(ExperimentConfig {
        classes,
        total_channels: raw.model.total_channels,
        options,
        class_mix: traffic.class_mix.clone(),
        holding_rate,
        mean_holding_time,
        speed_kmh,
        cell_radius_km,
        rho,
        load_points,
        solver,
        solve_method,
        nag,
        sim,
        output_dir: raw.output.directory.unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn resolve_loads(
    traffic: &RawTraffic,
    holding_rate: f64,
    bu_per_call: f64,
) -> Result<Vec<LoadPoint>, CliError> {
    let mut sources = 0;
    sources += traffic.arrival_rate.is_some() as u32;
    sources += traffic.arrival_rates.is_some() as u32;
    sources += traffic.offered_load.is_some() as u32;
    sources += traffic.offered_loads.is_some() as u32;
    if sources != 1 {
        return Err(config_err(
            "traffic: exactly one of arrival_rate, arrival_rates, offered_load, offered_loads \
             must be given",
        ));
    }

    let from_lambda = |name: &str, lambdas: &[f64]| -> Result<Vec<LoadPoint>, CliError> {
        lambdas
            .iter()
            .map(|&lambda| {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(config_err(format!("traffic.{name}: must be >= 0")));
                }
                Ok(LoadPoint {
                    load: lambda * bu_per_call / holding_rate,
                    lambda,
                })
            })
            .collect()
    };
    let from_load = |name: &str, loads: &[f64]| -> Result<Vec<LoadPoint>, CliError> {
        loads
            .iter()
            .map(|&load| {
                if !(load >= 0.0) || !load.is_finite() {
                    return Err(config_err(format!("traffic.{name}: must be >= 0")));
                }
                Ok(LoadPoint {
                    load,
                    lambda: load * holding_rate / bu_per_call,
                })
            })
            .collect()
    };

    let points = if let Some(lambda) = traffic.arrival_rate {
        from_lambda("arrival_rate", &[lambda])?
    } else if let Some(lambdas) = &traffic.arrival_rates {
        from_lambda("arrival_rates", lambdas)?
    } else if let Some(load) = traffic.offered_load {
        from_load("offered_load", &[load])?
    } else {
        from_load("offered_loads", traffic.offered_loads.as_ref().unwrap())?
    };
    if points.is_empty() {
        return Err(config_err("traffic: the load list is empty"));
    }
    Ok(points)
}
