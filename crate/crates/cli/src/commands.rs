//! The four subcommands: solve, simulate, compare, verify.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use cac_core::model::{
    enumerate_states, event_rate_total, mean_event_time, transition_distribution, Action,
    CallEvent, OccupancyConvention, PricingScheme,
};
use cac_core::nag::survival_probabilities;
use cac_core::sim::{
    build_hex_topology, run_simulation, AcceptAllPolicy, MdpTablePolicy, NagPolicyProvider,
    PolicyProvider, SimConfig, SimMetrics,
};
use cac_core::solver::{
    binary_search_single_class, export_policy, export_policy_to_path, fixed_point_policy,
    import_policy_from_path, verify_threshold, FixedPointIteration, Policy, PolicyMeta,
    ThresholdReport,
};

use crate::config::{ExperimentConfig, LoadPoint, SolveMethod};
use crate::output::{
    mean_se, write_compare_csv, write_file, write_runs_csv, CompareRow, RunRow,
};
use crate::CliError;

/// Where an admission policy for the simulator comes from.
#[derive(Debug, Clone)]
pub enum PolicySource {
    MdpFile(PathBuf),
    Nag,
    AcceptAll,
}

impl PolicySource {
    /// Parses the `--policy` flag: `mdp:PATH`, `nag` or `accept-all`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if let Some(path) = text.strip_prefix("mdp:") {
            if path.is_empty() {
                return Err(CliError::Config("--policy mdp: needs a file path".into()));
            }
            return Ok(PolicySource::MdpFile(PathBuf::from(path)));
        }
        match text {
            "nag" => Ok(PolicySource::Nag),
            "accept-all" => Ok(PolicySource::AcceptAll),
            other => Err(CliError::Config(format!(
                "--policy: expected mdp:PATH, nag or accept-all, found `{other}`"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            PolicySource::MdpFile(_) => "mdp",
            PolicySource::Nag => "nag",
            PolicySource::AcceptAll => "accept-all",
        }
    }
}

/// A solved load point.
pub struct SolvedPoint {
    pub point: LoadPoint,
    pub policy: Policy,
    pub c_star: Vec<f64>,
    pub gain: Option<f64>,
    pub trace: Vec<FixedPointIteration>,
    pub warnings: Vec<String>,
    pub threshold: ThresholdReport,
}

fn solve_point(cfg: &ExperimentConfig, point: LoadPoint) -> Result<SolvedPoint, CliError> {
    if cfg.options.convention == OccupancyConvention::PreActionRates {
        return Err(CliError::Config(
            "model.convention: solving requires post-action (pre-action rows leak mass at \
             boundary departures; use it only for model inspection via `verify`)"
                .into(),
        ));
    }
    let traffic = cfg.traffic_for(point.lambda);
    let (policy, c_star, gain, trace, warnings) = match cfg.solve_method {
        SolveMethod::FixedPoint => {
            let out = fixed_point_policy(&cfg.classes, &traffic, &cfg.options, &cfg.solver, None)?;
            (out.policy, out.c_star, out.gain, out.trace, Vec::new())
        }
        SolveMethod::BinarySearch => {
            let out = binary_search_single_class(&cfg.classes, &traffic, &cfg.options, &cfg.solver)?;
            let gain = out.trace.last().and_then(|it| it.gain);
            (out.policy, vec![out.c_star], gain, out.trace, out.warnings)
        }
    };
    let space = enumerate_states(&cfg.classes, cfg.total_channels).map_err(CliError::from_model)?;
    let threshold = verify_threshold(&policy, &space);
    Ok(SolvedPoint {
        point,
        policy,
        c_star,
        gain,
        trace,
        warnings,
        threshold,
    })
}

pub fn solve_all(cfg: &ExperimentConfig) -> Result<Vec<SolvedPoint>, CliError> {
    // Load points are independent solves; fan out.
    cfg.load_points
        .par_iter()
        .map(|&point| solve_point(cfg, point))
        .collect()
}

pub fn policy_file_name(load: f64) -> String {
    format!("policy_load_{load}.policy")
}

/// `solve`: writes one policy file per load point plus a human-readable
/// report, and returns the artifact paths.
pub fn solve_command(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out_dir)?;
    let solved = solve_all(cfg)?;
    let mut paths = Vec::new();
    let mut report = String::new();
    for (key, value) in cfg.echo() {
        let _ = writeln!(report, "# {key} = {value}");
    }
    for point in &solved {
        let path = out_dir.join(policy_file_name(point.point.load));
        export_policy_to_path(&point.policy, &path)?;
        let _ = writeln!(report, "load {}", point.point.load);
        let _ = writeln!(report, "  lambda {}", point.point.lambda);
        let _ = writeln!(report, "  method {}", cfg.solve_method);
        let _ = writeln!(report, "  iterations {}", point.trace.len());
        let c_text: Vec<String> = point.c_star.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(report, "  c_star {}", c_text.join(" "));
        let _ = writeln!(
            report,
            "  gain {}",
            point.gain.map_or("na".to_string(), |g| g.to_string())
        );
        if let Some(last) = point.trace.last() {
            let _ = writeln!(report, "  final_step {}", last.step);
            let _ = writeln!(report, "  final_residual {}", last.residual);
        }
        for check in &point.threshold.checks {
            let verdict = if check.monotone {
                format!(
                    "threshold {}",
                    check.threshold.map_or("na".to_string(), |t| t.to_string())
                )
            } else {
                format!("NOT MONOTONE ({} violating pairs)", check.violations.len())
            };
            let _ = writeln!(report, "  structure {}: {verdict}", check.event);
        }
        for warning in &point.warnings {
            let _ = writeln!(report, "  warning {warning}");
        }
        let _ = writeln!(report, "  policy_file {}", path.display());
        paths.push(path);
    }
    let report_path = out_dir.join("solve_report.txt");
    write_file(&report_path, report.as_bytes())?;
    paths.push(report_path);
    Ok(paths)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn sim_config(cfg: &ExperimentConfig, seed: u64) -> SimConfig {
    SimConfig {
        horizon: cfg.sim.horizon,
        warmup: cfg.sim.warmup,
        seed,
        allow_self_reinjection: cfg.sim.allow_self_reinjection,
        occupancy_probe: None,
    }
}

fn run_row(seed: u64, load: f64, policy: &str, m: &SimMetrics) -> RunRow {
    RunRow {
        seed: seed.to_string(),
        load,
        policy: policy.to_string(),
        p_cb: m.p_cb.clone(),
        p_hd: m.p_hd.clone(),
        utility_raw: Some(m.raw.utility_raw),
        normalized_utility: m.normalized_utility,
        events_simulated: Some(m.raw.events_simulated as f64),
    }
}

/// Mean/se aggregate rows over one (load, policy) group.
fn aggregate_rows(cfg: &ExperimentConfig, load: f64, policy: &str, group: &[&SimMetrics]) -> Vec<RunRow> {
    let k = cfg.classes.len();
    let collect = |f: &dyn Fn(&SimMetrics) -> Option<f64>| -> Vec<Option<f64>> {
        group.iter().map(|m| f(m)).collect()
    };
    let mut mean_row = RunRow {
        seed: "mean".to_string(),
        load,
        policy: policy.to_string(),
        p_cb: Vec::with_capacity(k),
        p_hd: Vec::with_capacity(k),
        utility_raw: None,
        normalized_utility: None,
        events_simulated: None,
    };
    let mut se_row = RunRow {
        seed: "se".to_string(),
        ..mean_row.clone()
    };
    for i in 0..k {
        let (mean, se) = mean_se(&collect(&|m| m.p_cb[i]));
        mean_row.p_cb.push(mean);
        se_row.p_cb.push(se);
    }
    for i in 0..k {
        let (mean, se) = mean_se(&collect(&|m| m.p_hd[i]));
        mean_row.p_hd.push(mean);
        se_row.p_hd.push(se);
    }
    let (mean, se) = mean_se(&collect(&|m| Some(m.raw.utility_raw)));
    mean_row.utility_raw = mean;
    se_row.utility_raw = se;
    let (mean, se) = mean_se(&collect(&|m| m.normalized_utility));
    mean_row.normalized_utility = mean;
    se_row.normalized_utility = se;
    let (mean, se) = mean_se(&collect(&|m| Some(m.raw.events_simulated as f64)));
    mean_row.events_simulated = mean;
    se_row.events_simulated = se;
    vec![mean_row, se_row]
}

impl CliError {
    pub(crate) fn from_model(e: cac_core::error::ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// All replications of one (load, policy provider) pair, fanned out over
/// seeds. Row order is canonical regardless of scheduling.
fn run_group(
    cfg: &ExperimentConfig,
    point: LoadPoint,
    provider: &(dyn PolicyProvider + Sync),
    scheme: PricingScheme,
) -> Result<Vec<SimMetrics>, CliError> {
    let topology = build_hex_topology(cfg.sim.rings);
    let traffic = cfg.traffic_for(point.lambda);
    let seeds: Vec<u64> = (0..cfg.sim.replications)
        .map(|r| cfg.sim.base_seed + u64::from(r))
        .collect();
    let results: Result<Vec<SimMetrics>, CliError> = seeds
        .par_iter()
        .map(|&seed| {
            run_simulation(
                &topology,
                provider,
                &cfg.classes,
                &traffic,
                scheme,
                &sim_config(cfg, seed),
            )
            .map_err(CliError::from)
        })
        .collect();
    results
}

/// `simulate`: evaluates one policy source over the configured loads and
/// replications; returns the CSV path.
pub fn simulate_command(
    cfg: &ExperimentConfig,
    source: &PolicySource,
    out_dir: &Path,
) -> Result<PathBuf, CliError> {
    let imported = match source {
        PolicySource::MdpFile(path) => {
            let policy = import_policy_from_path(path)
                .map_err(|e| CliError::Config(format!("--policy {}: {e}", path.display())))?;
            check_policy_matches(cfg, &policy.meta)?;
            Some(policy)
        }
        _ => None,
    };

    let mut rows: Vec<RunRow> = Vec::new();
    for &point in &cfg.load_points {
        let traffic = cfg.traffic_for(point.lambda);
        let provider: Box<dyn PolicyProvider + Sync> = match source {
            PolicySource::MdpFile(_) => Box::new(
                MdpTablePolicy::new(imported.as_ref().unwrap(), &traffic)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            PolicySource::Nag => Box::new(NagPolicyProvider::new(
                cfg.nag,
                cfg.classes.clone(),
                traffic.clone(),
            )),
            PolicySource::AcceptAll => Box::new(AcceptAllPolicy::new(
                cfg.classes.clone(),
                cfg.total_channels,
            )),
        };
        let metrics = run_group(cfg, point, provider.as_ref(), cfg.options.scheme)?;
        for (r, m) in metrics.iter().enumerate() {
            rows.push(run_row(cfg.sim.base_seed + r as u64, point.load, source.name(), m));
        }
        let refs: Vec<&SimMetrics> = metrics.iter().collect();
        rows.extend(aggregate_rows(cfg, point.load, source.name(), &refs));
    }

    let mut echo = cfg.echo();
    echo.push(("run.command".to_string(), "simulate".to_string()));
    echo.push(("run.policy_source".to_string(), source.name().to_string()));
    if let PolicySource::MdpFile(path) = source {
        echo.push(("run.policy_file".to_string(), path.display().to_string()));
    }
    let path = out_dir.join(format!("runs_{}.csv", source.name()));
    write_runs_csv(&path, &echo, cfg.classes.len(), &rows)?;
    Ok(path)
}

fn check_policy_matches(cfg: &ExperimentConfig, meta: &PolicyMeta) -> Result<(), CliError> {
    if meta.traffic.total_channels != cfg.total_channels {
        return Err(CliError::Config(format!(
            "policy file was solved for {} BU cells, config has {}",
            meta.traffic.total_channels, cfg.total_channels
        )));
    }
    if meta.classes.len() != cfg.classes.len() {
        return Err(CliError::Config(format!(
            "policy file has {} classes, config has {}",
            meta.classes.len(),
            cfg.classes.len()
        )));
    }
    for (a, b) in meta.classes.iter().zip(&cfg.classes) {
        if a.bandwidth != b.bandwidth {
            return Err(CliError::Config(format!(
                "policy file class {} has bandwidth {}, config has {}",
                a.index, a.bandwidth, b.bandwidth
            )));
        }
    }
    Ok(())
}

/// `compare`: solves the MDP policy per load, runs it and the heuristic on
/// matched seeds, and writes both the per-run rows and the per-load
/// comparison. Returns (runs.csv, compare.csv) paths.
pub fn compare_command(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    ensure_dir(out_dir)?;
    let solved = solve_all(cfg)?;

    let mut rows: Vec<RunRow> = Vec::new();
    let mut comparison: Vec<CompareRow> = Vec::new();
    for point in &solved {
        let traffic = cfg.traffic_for(point.point.lambda);
        export_policy_to_path(&point.policy, &out_dir.join(policy_file_name(point.point.load)))?;

        let mdp = MdpTablePolicy::new(&point.policy, &traffic)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let nag = NagPolicyProvider::new(cfg.nag, cfg.classes.clone(), traffic.clone());

        let mdp_metrics = run_group(cfg, point.point, &mdp, cfg.options.scheme)?;
        let nag_metrics = run_group(cfg, point.point, &nag, cfg.options.scheme)?;

        for (r, m) in mdp_metrics.iter().enumerate() {
            rows.push(run_row(cfg.sim.base_seed + r as u64, point.point.load, "mdp", m));
        }
        let mdp_refs: Vec<&SimMetrics> = mdp_metrics.iter().collect();
        rows.extend(aggregate_rows(cfg, point.point.load, "mdp", &mdp_refs));
        for (r, m) in nag_metrics.iter().enumerate() {
            rows.push(run_row(cfg.sim.base_seed + r as u64, point.point.load, "nag", m));
        }
        let nag_refs: Vec<&SimMetrics> = nag_metrics.iter().collect();
        rows.extend(aggregate_rows(cfg, point.point.load, "nag", &nag_refs));

        comparison.push(compare_row(cfg, point.point.load, &mdp_metrics, &nag_metrics));
    }

    let mut echo = cfg.echo();
    echo.push(("run.command".to_string(), "compare".to_string()));
    let runs_path = out_dir.join("runs.csv");
    write_runs_csv(&runs_path, &echo, cfg.classes.len(), &rows)?;
    let compare_path = out_dir.join("compare.csv");
    write_compare_csv(&compare_path, &echo, cfg.classes.len(), &comparison)?;
    Ok((runs_path, compare_path))
}

fn compare_row(
    cfg: &ExperimentConfig,
    load: f64,
    mdp: &[SimMetrics],
    nag: &[SimMetrics],
) -> CompareRow {
    let k = cfg.classes.len();
    let mean_of = |ms: &[SimMetrics], f: &dyn Fn(&SimMetrics) -> Option<f64>| -> Option<f64> {
        mean_se(&ms.iter().map(f).collect::<Vec<_>>()).0
    };
    let u_mdp = mean_of(mdp, &|m| m.normalized_utility);
    let u_nag = mean_of(nag, &|m| m.normalized_utility);
    let (utility_ratio, utility_gain) = match (u_mdp, u_nag) {
        (Some(a), Some(b)) if b != 0.0 => Some(((a / b), (a - b) / b.abs())),
        _ => None,
    }
    .map_or((None, None), |(r, g)| (Some(r), Some(g)));

    let per_class = |ms: &[SimMetrics], pick: &dyn Fn(&SimMetrics, usize) -> Option<f64>| {
        (0..k).map(|i| mean_of(ms, &|m| pick(m, i))).collect::<Vec<_>>()
    };
    CompareRow {
        load,
        utility_ratio,
        utility_gain,
        p_cb_mdp: per_class(mdp, &|m, i| m.p_cb[i]),
        p_hd_mdp: per_class(mdp, &|m, i| m.p_hd[i]),
        p_cb_nag: per_class(nag, &|m, i| m.p_cb[i]),
        p_hd_nag: per_class(nag, &|m, i| m.p_hd[i]),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub struct VerifyOutcome {
    pub lines: Vec<String>,
    pub failures: usize,
    pub total: usize,
}

/// `verify`: runs the invariant battery against the configured model and
/// reports one line per check.
pub fn verify_command(cfg: &ExperimentConfig) -> Result<VerifyOutcome, CliError> {
    let mut checks: Vec<(&'static str, Result<String, String>)> = Vec::new();

    checks.push(("state-space", check_state_space(cfg)));
    checks.push(("transition-rows", check_transitions(cfg)));
    checks.push(("event-timing", check_tau(cfg)));
    checks.push(("hex-topology", check_topology(cfg)));
    checks.push(("nag-survival", check_nag(cfg)));
    checks.push(("policy-file-round-trip", check_policy_roundtrip(cfg)));

    let total = checks.len();
    let mut failures = 0;
    let mut lines = Vec::with_capacity(total);
    for (name, outcome) in checks {
        match outcome {
            Ok(detail) => lines.push(format!("ok   {name} — {detail}")),
            Err(reason) => {
                failures += 1;
                lines.push(format!("FAIL {name} — {reason}"));
            }
        }
    }
    Ok(VerifyOutcome {
        lines,
        failures,
        total,
    })
}

fn check_state_space(cfg: &ExperimentConfig) -> Result<String, String> {
    let space = enumerate_states(&cfg.classes, cfg.total_channels).map_err(|e| e.to_string())?;
    let empty = space.state(space.empty_no_event_index());
    if empty.occupancy.iter().any(|&x| x != 0) || empty.event != CallEvent::None {
        return Err("canonical empty state is misplaced".into());
    }
    Ok(format!("{} states enumerated, indices stable", space.len()))
}

fn probe_traffic(cfg: &ExperimentConfig) -> cac_core::model::TrafficModel {
    let point = cfg.load_points[0];
    let mut traffic = cfg.traffic_for(point.lambda);
    // A representative coupling: half the capacity split by mix.
    traffic.expected_neighbor_calls = cfg
        .classes
        .iter()
        .zip(&cfg.class_mix)
        .map(|(c, &m)| 0.5 * f64::from(cfg.total_channels) * m / f64::from(c.bandwidth))
        .collect();
    traffic
}

fn check_transitions(cfg: &ExperimentConfig) -> Result<String, String> {
    let space = enumerate_states(&cfg.classes, cfg.total_channels).map_err(|e| e.to_string())?;
    let traffic = probe_traffic(cfg);
    let mut rows = 0usize;
    let mut leaking = 0usize;
    for state in space.states() {
        for action in [Action::Reject, Action::Accept] {
            if action == Action::Accept && state.event.is_arrival() && !space.accept_feasible(state)
            {
                continue;
            }
            let dist = transition_distribution(state, action, &cfg.classes, &traffic, cfg.options.convention)
                .map_err(|e| format!("state {state}: {e}"))?;
            let mut mass = 0.0;
            for (succ, p) in &dist {
                if *p < 0.0 {
                    return Err(format!("state {state}: negative probability {p}"));
                }
                if !space.contains(succ) {
                    return Err(format!("state {state}: successor {succ} left the space"));
                }
                mass += p;
            }
            rows += 1;
            match cfg.options.convention {
                OccupancyConvention::PostAction => {
                    if (mass - 1.0).abs() > 1e-12 {
                        return Err(format!("state {state} action {action}: row mass {mass}"));
                    }
                }
                OccupancyConvention::PreActionRates => {
                    // Boundary departures legitimately leak exactly mu*tau.
                    if (mass - 1.0).abs() > 1e-12 {
                        let leak_ok = matches!(state.event, CallEvent::Departure(i) if state.occupancy[i] == 1);
                        if !leak_ok {
                            return Err(format!("state {state} action {action}: row mass {mass}"));
                        }
                        leaking += 1;
                    }
                }
            }
        }
    }
    if leaking > 0 {
        Ok(format!(
            "{rows} rows checked; {leaking} boundary departure rows leak as the literal \
             convention prescribes"
        ))
    } else {
        Ok(format!("{rows} rows sum to 1 within 1e-12, all successors in the space"))
    }
}

fn check_tau(cfg: &ExperimentConfig) -> Result<String, String> {
    let space = enumerate_states(&cfg.classes, cfg.total_channels).map_err(|e| e.to_string())?;
    let traffic = probe_traffic(cfg);
    let mut checked = 0usize;
    for state in space.states() {
        let omega = event_rate_total(&state.occupancy, &traffic);
        if omega <= 0.0 {
            continue;
        }
        let tau = mean_event_time(state, &traffic).map_err(|e| e.to_string())?;
        if (tau * omega - 1.0).abs() > 2.0 * f64::EPSILON {
            return Err(format!("state {state}: tau * omega = {}", tau * omega));
        }
        checked += 1;
    }
    Ok(format!("tau = 1/omega verified for {checked} states"))
}

fn check_topology(cfg: &ExperimentConfig) -> Result<String, String> {
    let topo = build_hex_topology(cfg.sim.rings);
    let rings = cfg.sim.rings;
    let expected_cells = (3 * rings * rings + 3 * rings + 1) as usize;
    if topo.len() != expected_cells {
        return Err(format!("{} cells, expected {expected_cells}", topo.len()));
    }
    for cell in &topo.cells {
        for n in topo.neighbors(cell.id) {
            if !topo.neighbors(n).any(|m| m == cell.id) {
                return Err(format!("adjacency asymmetric between {} and {n}", cell.id));
            }
        }
    }
    let expected_deficit = if rings == 0 { 6 } else { 18 + 12 * (rings - 1) };
    if topo.total_deficit() != expected_deficit {
        return Err(format!(
            "total boundary deficit {}, expected {expected_deficit}",
            topo.total_deficit()
        ));
    }
    Ok(format!(
        "{} cells, symmetric adjacency, boundary deficit {}",
        topo.len(),
        topo.total_deficit()
    ))
}

fn check_nag(cfg: &ExperimentConfig) -> Result<String, String> {
    let traffic = probe_traffic(cfg);
    let mut checked = 0usize;
    for t_est in [0.5, cfg.nag.t_est, 30.0, 300.0] {
        let s = survival_probabilities(&traffic, t_est);
        for (i, &stay) in s.stay.iter().enumerate() {
            if !(0.0..=1.0).contains(&stay) || s.move_to_neighbor < 0.0 {
                return Err(format!("invalid survival probabilities at t_est {t_est}"));
            }
            if stay + 6.0 * s.move_to_neighbor > 1.0 + 1e-12 {
                return Err(format!(
                    "class {}: stay + 6*move = {} at t_est {t_est}",
                    i + 1,
                    stay + 6.0 * s.move_to_neighbor
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("survival mass bounded by 1 across {checked} settings"))
}

fn check_policy_roundtrip(cfg: &ExperimentConfig) -> Result<String, String> {
    let space = enumerate_states(&cfg.classes, cfg.total_channels).map_err(|e| e.to_string())?;
    let policy = Policy {
        actions: vec![Action::Reject; space.len()],
        meta: PolicyMeta {
            classes: cfg.classes.clone(),
            traffic: probe_traffic(cfg),
            options: cfg.options,
            criterion: cfg.solver.criterion,
        },
    };
    let mut first = Vec::new();
    export_policy(&policy, &mut first).map_err(|e| e.to_string())?;
    let imported = cac_core::solver::import_policy(first.as_slice()).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    export_policy(&imported, &mut second).map_err(|e| e.to_string())?;
    if first != second {
        return Err("re-export differs from the original bytes".into());
    }
    Ok(format!("{} rows round-trip byte-exactly", space.len()))
}
