//! Value iteration for the discounted and average-reward criteria.

use crate::error::SolverError;
use crate::model::Action;
use crate::solver::{CompiledMdp, Criterion, Policy, SolverConfig, ValueFunction};

/// Output of a value-iteration solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueFunction,
    pub policy: Policy,
    /// Average reward per event epoch (average-reward criterion only).
    pub gain: Option<f64>,
    pub sweeps: usize,
    /// Per-sweep stopping quantity: the span of successive differences
    /// (average criterion) or their sup norm (discounted).
    pub span_history: Vec<f64>,
}

/// Solves the MDP from a zero initial value function.
pub fn value_iteration(mdp: &CompiledMdp, config: &SolverConfig) -> Result<Solution, SolverError> {
    value_iteration_warm(mdp, config, None)
}

/// Solves the MDP, optionally starting from a previous value function (a big
/// saving inside the fixed-point loop, where successive models differ only in
/// the handoff rates).
pub fn value_iteration_warm(
    mdp: &CompiledMdp,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<Solution, SolverError> {
    config.validate()?;
    let n = mdp.len();
    let mut v = match warm_start {
        Some(v0) if v0.len() == n => v0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut next = vec![0.0; n];

    match config.criterion {
        Criterion::Discounted(gamma) => {
            let mut history = Vec::new();
            for sweep in 1..=config.max_sweeps {
                let mut delta: f64 = 0.0;
                for s in 0..n {
                    let t = best_q(mdp, s, &v, gamma).0;
                    delta = delta.max((t - v[s]).abs());
                    next[s] = t;
                }
                std::mem::swap(&mut v, &mut next);
                history.push(delta);
                if delta < config.epsilon {
                    return Ok(finish(mdp, config, v, None, sweep, gamma, history));
                }
            }
            Err(SolverError::ValueIterationDiverged {
                sweeps: config.max_sweeps,
                span: *history.last().unwrap_or(&f64::NAN),
                epsilon: config.epsilon,
            })
        }
        Criterion::AverageReward => {
            // Relative value iteration: subtract the value of the reference
            // state (the empty, no-event cell) each sweep and stop when the
            // span of successive differences collapses.
            let reference = mdp.space().empty_no_event_index();
            let mut history = Vec::new();
            let mut span = f64::INFINITY;
            for sweep in 1..=config.max_sweeps {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in 0..n {
                    let t = best_q(mdp, s, &v, 1.0).0;
                    let diff = t - v[s];
                    lo = lo.min(diff);
                    hi = hi.max(diff);
                    next[s] = t;
                }
                span = hi - lo;
                history.push(span);
                let shift = next[reference];
                for s in 0..n {
                    next[s] -= shift;
                }
                std::mem::swap(&mut v, &mut next);
                if span < config.epsilon {
                    let gain = 0.5 * (hi + lo);
                    return Ok(finish(mdp, config, v, Some(gain), sweep, 1.0, history));
                }
            }
            Err(SolverError::ValueIterationDiverged {
                sweeps: config.max_sweeps,
                span,
                epsilon: config.epsilon,
            })
        }
    }
}

/// Greedy action extraction from a converged value function. Re-running this
/// on the same values returns the same policy; ties go to `reject`.
pub(crate) fn greedy_actions(mdp: &CompiledMdp, v: &[f64], gamma: f64) -> Vec<Action> {
    (0..mdp.len()).map(|s| best_q(mdp, s, v, gamma).1).collect()
}

fn finish(
    mdp: &CompiledMdp,
    config: &SolverConfig,
    v: Vec<f64>,
    gain: Option<f64>,
    sweeps: usize,
    gamma: f64,
    span_history: Vec<f64>,
) -> Solution {
    let actions = greedy_actions(mdp, &v, gamma);
    Solution {
        policy: mdp.policy_from_actions(actions, config.criterion),
        values: ValueFunction { values: v },
        gain,
        sweeps,
        span_history,
    }
}

#[inline]
fn q_value(mdp: &CompiledMdp, s: usize, action: Action, v: &[f64], gamma: f64) -> f64 {
    let mut acc = 0.0;
    for &(t, p) in mdp.row(s, action) {
        acc += p * v[t as usize];
    }
    mdp.reward_of(s, action) + gamma * acc
}

#[inline]
fn best_q(mdp: &CompiledMdp, s: usize, v: &[f64], gamma: f64) -> (f64, Action) {
    let q_reject = q_value(mdp, s, Action::Reject, v, gamma);
    if mdp.accept_available(s) {
        let q_accept = q_value(mdp, s, Action::Accept, v, gamma);
        if q_accept > q_reject {
            return (q_accept, Action::Accept);
        }
    }
    (q_reject, Action::Reject)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QosClassSpec, TrafficModel};
    use crate::solver::ModelOptions;

    fn tiny_mdp(reward_scale: f64) -> CompiledMdp {
        let classes = vec![QosClassSpec::new(1, 1, 1.0 * reward_scale, -0.1 * reward_scale, -8.0 * reward_scale).unwrap()];
        let traffic = TrafficModel::new(4, 0.05, vec![1.0], 1.0 / 120.0, 0.01, vec![1.0]).unwrap();
        CompiledMdp::compile(&classes, &traffic, &ModelOptions::default()).unwrap()
    }

    #[test]
    fn average_reward_converges_on_small_instance() {
        let mdp = tiny_mdp(1.0);
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        assert!(sol.gain.unwrap().is_finite());
        assert_eq!(sol.policy.actions.len(), mdp.len());
        // Greedy extraction is idempotent.
        let again = greedy_actions(&mdp, &sol.values.values, 1.0);
        assert_eq!(again, sol.policy.actions);
    }

    #[test]
    fn policy_invariant_under_positive_reward_scaling() {
        let cfg = SolverConfig::default();
        let a = value_iteration(&tiny_mdp(1.0), &cfg).unwrap();
        let b = value_iteration(&tiny_mdp(7.0), &cfg).unwrap();
        assert_eq!(a.policy.actions, b.policy.actions);
    }

    #[test]
    fn discounted_converges_and_contracts() {
        let mdp = tiny_mdp(1.0);
        let cfg = SolverConfig {
            criterion: Criterion::Discounted(0.9),
            ..SolverConfig::default()
        };
        let sol = value_iteration(&mdp, &cfg).unwrap();
        assert!(sol.gain.is_none());
        assert!(sol.sweeps > 1);
    }

    #[test]
    fn sweep_budget_exhaustion_is_reported() {
        let mdp = tiny_mdp(1.0);
        let cfg = SolverConfig {
            epsilon: 1e-14,
            max_sweeps: 3,
            ..SolverConfig::default()
        };
        match value_iteration(&mdp, &cfg) {
            Err(SolverError::ValueIterationDiverged { sweeps, span, .. }) => {
                assert_eq!(sweeps, 3);
                assert!(span.is_finite());
            }
            other => panic!("expected divergence error, got {other:?}"),
        }
    }

    #[test]
    fn accept_never_chosen_where_infeasible() {
        let mdp = tiny_mdp(1.0);
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        for (s, &a) in sol.policy.actions.iter().enumerate() {
            if a == Action::Accept {
                assert!(mdp.accept_available(s));
            }
        }
    }

    #[test]
    fn one_channel_cell_accepts_when_nothing_needs_protecting() {
        // Smallest nontrivial cell: one channel, one class, no handoff
        // pressure. Carrying pays +1 and blocking costs -0.1, so the
        // empty-cell arrival is accepted and the gain is positive. (With
        // handoff pressure the same cell rightly holds the channel free:
        // an avoided drop is worth far more than one carried call.)
        use crate::model::{CallEvent, CellState};
        let classes = vec![QosClassSpec::new(1, 1, 1.0, -0.1, -8.0).unwrap()];
        let traffic = TrafficModel::new(1, 0.05, vec![1.0], 1.0 / 120.0, 0.01, vec![0.0]).unwrap();
        let mdp = CompiledMdp::compile(&classes, &traffic, &ModelOptions::default()).unwrap();
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        let empty_arrival = mdp
            .space()
            .index_of(&CellState::new(vec![0], CallEvent::NewArrival(0)))
            .unwrap();
        assert_eq!(sol.policy.actions[empty_arrival], Action::Accept);
        assert!(sol.gain.unwrap() > 0.0);

        let pressured = TrafficModel::new(1, 0.05, vec![1.0], 1.0 / 120.0, 0.01, vec![0.5]).unwrap();
        let mdp = CompiledMdp::compile(&classes, &pressured, &ModelOptions::default()).unwrap();
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        assert_eq!(sol.policy.actions[empty_arrival], Action::Reject);
    }

    #[test]
    fn greedy_extraction_is_invariant_under_value_shifts() {
        // Adding a constant to every value (equivalently to every reward one
        // step earlier) cannot change the argmax.
        let mdp = tiny_mdp(1.0);
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        for shift in [-1000.0, -1.0, 3.5, 1e6] {
            let shifted: Vec<f64> = sol.values.values.iter().map(|v| v + shift).collect();
            assert_eq!(greedy_actions(&mdp, &shifted, 1.0), sol.policy.actions);
        }
    }

    #[test]
    fn relative_vi_span_is_non_increasing() {
        let mdp = tiny_mdp(1.0);
        let sol = value_iteration(&mdp, &SolverConfig::default()).unwrap();
        let spans = &sol.span_history;
        assert_eq!(spans.len(), sol.sweeps);
        for pair in spans.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "span rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn discounted_vi_contracts_geometrically() {
        let mdp = tiny_mdp(1.0);
        let gamma = 0.9;
        let cfg = SolverConfig {
            criterion: Criterion::Discounted(gamma),
            epsilon: 1e-9,
            ..SolverConfig::default()
        };
        let sol = value_iteration(&mdp, &cfg).unwrap();
        for pair in sol.span_history.windows(2) {
            assert!(
                pair[1] <= gamma * pair[0] + 1e-12,
                "sup-norm difference fell from {} only to {}",
                pair[0],
                pair[1]
            );
        }
    }
}
