//! The outer loop that makes the policy consistent with the handoff pressure
//! it generates.
//!
//! The transition rates depend on the expected neighbor population `c`, but
//! `c` is itself determined by the policy in force. The loop guesses `c`,
//! solves the MDP, measures the expected per-class population under the
//! solved policy's stationary distribution, and moves `c` toward the
//! measurement with damping until the update stalls. The result is a local
//! fixed point; no global optimality is claimed.

use crate::error::SolverError;
use crate::model::{Action, QosClassSpec, StateSpace, TrafficModel};
use crate::solver::{
    expected_calls, induced_chain, stationary_distribution_warm, value_iteration_warm,
    CompiledMdp, ModelOptions, Policy, PolicyMeta, SolverConfig,
};

/// One iteration of the fixed-point loop, for convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FixedPointIteration {
    pub iteration: usize,
    /// Coupling vector the MDP was solved with.
    pub c: Vec<f64>,
    /// Expected per-class population the solved policy actually induces.
    pub c_induced: Vec<f64>,
    /// `||c_induced - c||_inf` before damping.
    pub residual: f64,
    /// `||c_next - c||_inf` after damping (the stopping quantity).
    pub step: f64,
    /// Damping factor in force this iteration (halved on oscillation).
    pub damping: f64,
    pub gain: Option<f64>,
    pub vi_sweeps: usize,
}

/// A converged fixed point: the policy, the coupling vector it is consistent
/// with, and the full iteration trace.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub policy: Policy,
    pub c_star: Vec<f64>,
    pub gain: Option<f64>,
    pub trace: Vec<FixedPointIteration>,
}

/// Default initial guess: half the cell capacity, split across classes by
/// the traffic mix and converted to call counts.
pub fn default_initial_calls(classes: &[QosClassSpec], traffic: &TrafficModel) -> Vec<f64> {
    classes
        .iter()
        .zip(&traffic.class_mix)
        .map(|(class, &mix)| 0.5 * f64::from(traffic.total_channels) * mix / f64::from(class.bandwidth))
        .collect()
}

/// Runs the damped fixed-point loop from `c0` (or the default guess).
pub fn fixed_point_policy(
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    options: &ModelOptions,
    config: &SolverConfig,
    c0: Option<Vec<f64>>,
) -> Result<FixedPointResult, SolverError> {
    config.validate()?;
    traffic.validate()?;

    if traffic.arrival_rate == 0.0 {
        return empty_system_result(classes, traffic, options, config, c0);
    }

    let mut c = c0.unwrap_or_else(|| default_initial_calls(classes, traffic));
    let mut damping = config.fixed_point_damping;
    let mut previous_delta: Option<Vec<f64>> = None;
    let mut trace: Vec<FixedPointIteration> = Vec::new();
    let mut value_warm: Option<Vec<f64>> = None;
    let mut pi_warm: Option<Vec<f64>> = None;

    for iteration in 1..=config.max_fixed_point_iters {
        let mdp = CompiledMdp::compile(classes, &traffic.with_expected_calls(c.clone()), options)?;
        let solution = value_iteration_warm(&mdp, config, value_warm.as_deref())?;
        let chain = induced_chain(&mdp, &solution.policy);
        let pi = stationary_distribution_warm(&chain, &config.stationary, pi_warm.as_deref())?;
        let c_induced = expected_calls(&pi, mdp.space());

        // The induced map is a step function of c; when the iteration starts
        // bouncing across a jump, shrink the damping so the bounce amplitude
        // falls below tolerance instead of cycling forever.
        let delta: Vec<f64> = c_induced.iter().zip(&c).map(|(new, old)| new - old).collect();
        if let Some(prev) = &previous_delta {
            let dot: f64 = delta.iter().zip(prev).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                damping *= 0.5;
            }
        }
        previous_delta = Some(delta);

        let residual = inf_norm_diff(&c_induced, &c);
        let step = damping * residual;
        let c_next: Vec<f64> = c
            .iter()
            .zip(&c_induced)
            .map(|(&old, &new)| old + damping * (new - old))
            .collect();

        trace.push(FixedPointIteration {
            iteration,
            c: c.clone(),
            c_induced,
            residual,
            step,
            damping,
            gain: solution.gain,
            vi_sweeps: solution.sweeps,
        });

        value_warm = Some(solution.values.values.clone());
        pi_warm = Some(pi);

        if step < config.fixed_point_tolerance {
            let mut policy = solution.policy;
            policy.meta.traffic = traffic.with_expected_calls(c_next.clone());
            return Ok(FixedPointResult {
                policy,
                c_star: c_next,
                gain: solution.gain,
                trace,
            });
        }
        c = c_next;
    }

    let last_step = trace.last().map(|it| it.step).unwrap_or(f64::NAN);
    Err(SolverError::FixedPointExceeded {
        iterations: config.max_fixed_point_iters,
        last_step,
        tolerance: config.fixed_point_tolerance,
        trace,
    })
}

/// Result of the single-class bisection.
#[derive(Debug, Clone)]
pub struct BinarySearchResult {
    pub policy: Policy,
    pub c_star: f64,
    pub trace: Vec<FixedPointIteration>,
    /// Non-empty if the monotonicity assumption was violated and the damped
    /// loop was used instead.
    pub warnings: Vec<String>,
}

/// Single-class fixed point by bisection.
///
/// For one class, a larger assumed neighbor population lowers the acceptance
/// threshold and therefore the induced population: the map `c -> c'` is
/// non-increasing, so `c' - c` changes sign exactly once and the fixed point
/// can be bracketed. If a probe violates that monotonicity the routine logs a
/// warning and falls back to the damped loop.
pub fn binary_search_single_class(
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    options: &ModelOptions,
    config: &SolverConfig,
) -> Result<BinarySearchResult, SolverError> {
    config.validate()?;
    traffic.validate()?;
    if classes.len() != 1 {
        return Err(SolverError::NotSingleClass {
            classes: classes.len(),
        });
    }

    if traffic.arrival_rate == 0.0 {
        let result = empty_system_result(classes, traffic, options, config, None)?;
        return Ok(BinarySearchResult {
            policy: result.policy,
            c_star: 0.0,
            trace: result.trace,
            warnings: Vec::new(),
        });
    }

    let mut lo = 0.0_f64;
    let mut hi = f64::from(traffic.total_channels) / f64::from(classes[0].bandwidth);
    let mut trace: Vec<FixedPointIteration> = Vec::new();
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut value_warm: Option<Vec<f64>> = None;
    let mut pi_warm: Option<Vec<f64>> = None;
    let mut iteration = 0usize;

    while hi - lo > config.fixed_point_tolerance && iteration < config.max_fixed_point_iters {
        iteration += 1;
        let mid = 0.5 * (lo + hi);
        let (solution, induced) = probe(
            classes,
            traffic,
            options,
            config,
            mid,
            &mut value_warm,
            &mut pi_warm,
        )?;
        trace.push(FixedPointIteration {
            iteration,
            c: vec![mid],
            c_induced: vec![induced],
            residual: (induced - mid).abs(),
            step: 0.5 * (hi - lo),
            damping: 1.0,
            gain: solution.gain,
            vi_sweeps: solution.sweeps,
        });
        probes.push((mid, induced));

        if let Some(reason) = monotonicity_violation(&probes) {
            let warning = format!("bisection assumption violated ({reason}); falling back to damped iteration");
            let fallback = fixed_point_policy(classes, traffic, options, config, Some(vec![mid]))?;
            let c_star = fallback.c_star[0];
            let mut combined = trace;
            combined.extend(fallback.trace);
            return Ok(BinarySearchResult {
                policy: fallback.policy,
                c_star,
                trace: combined,
                warnings: vec![warning],
            });
        }

        if induced > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let c_star = 0.5 * (lo + hi);
    let (solution, _) = probe(
        classes,
        traffic,
        options,
        config,
        c_star,
        &mut value_warm,
        &mut pi_warm,
    )?;
    let mut policy = solution.policy;
    policy.meta.traffic = traffic.with_expected_calls(vec![c_star]);
    Ok(BinarySearchResult {
        policy,
        c_star,
        trace,
        warnings: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn probe(
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    options: &ModelOptions,
    config: &SolverConfig,
    c: f64,
    value_warm: &mut Option<Vec<f64>>,
    pi_warm: &mut Option<Vec<f64>>,
) -> Result<(crate::solver::Solution, f64), SolverError> {
    let mdp = CompiledMdp::compile(classes, &traffic.with_expected_calls(vec![c]), options)?;
    let solution = value_iteration_warm(&mdp, config, value_warm.as_deref())?;
    let chain = induced_chain(&mdp, &solution.policy);
    let pi = stationary_distribution_warm(&chain, &config.stationary, pi_warm.as_deref())?;
    let induced = expected_calls(&pi, mdp.space())[0];
    *value_warm = Some(solution.values.values.clone());
    *pi_warm = Some(pi);
    Ok((solution, induced))
}

/// The bisection brackets the root of `g(c) = F(c) - c`, which is decreasing
/// as long as raising the assumed population raises the induced one by less
/// than a call per call (the acceptance threshold only falls). A probe where
/// `g` rises with `c` breaks the bracket and is reported. Small slack covers
/// runs of equal policies.
fn monotonicity_violation(probes: &[(f64, f64)]) -> Option<String> {
    let mut sorted: Vec<(f64, f64)> = probes.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sorted.windows(2) {
        let (c_lo, f_lo) = pair[0];
        let (c_hi, f_hi) = pair[1];
        let g_lo = f_lo - c_lo;
        let g_hi = f_hi - c_hi;
        let slack = 1e-6 * g_lo.abs().max(1.0);
        if g_hi > g_lo + slack {
            return Some(format!(
                "induced-minus-assumed calls rose from {g_lo:.6} at c = {c_lo:.6} to {g_hi:.6} at c = {c_hi:.6}"
            ));
        }
    }
    None
}

/// With no exogenous traffic the network is empty: the only self-consistent
/// coupling is zero and there is nothing to optimize. The degenerate model
/// (zero total event rate in the empty cell) cannot even be compiled, so the
/// loop short-circuits to an all-reject policy and `c* = 0`.
fn empty_system_result(
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    options: &ModelOptions,
    config: &SolverConfig,
    c0: Option<Vec<f64>>,
) -> Result<FixedPointResult, SolverError> {
    let space = StateSpace::enumerate(classes, traffic.total_channels)?;
    let zero = vec![0.0; classes.len()];
    let start = c0.unwrap_or_else(|| default_initial_calls(classes, traffic));
    let residual = inf_norm_diff(&zero, &start);
    let policy = Policy {
        actions: vec![Action::Reject; space.len()],
        meta: PolicyMeta {
            classes: classes.to_vec(),
            traffic: traffic.with_expected_calls(zero.clone()),
            options: *options,
            criterion: config.criterion,
        },
    };
    Ok(FixedPointResult {
        policy,
        c_star: zero.clone(),
        gain: Some(0.0),
        trace: vec![FixedPointIteration {
            iteration: 1,
            c: start,
            c_induced: zero,
            residual,
            step: 0.0,
            damping: config.fixed_point_damping,
            gain: Some(0.0),
            vi_sweeps: 0,
        }],
    })
}

fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
