//! Policy computation: value iteration over the compiled MDP, induced-chain
//! analysis, and the outer fixed-point loop over the handoff coupling vector.

mod chain;
mod fixed_point;
mod policy_file;
mod threshold;
mod vi;

pub use chain::{
    expected_calls, induced_chain, stationary_distribution, stationary_distribution_warm,
    InducedChain, StationaryOptions,
};
pub use fixed_point::{
    binary_search_single_class, default_initial_calls, fixed_point_policy, BinarySearchResult,
    FixedPointIteration, FixedPointResult,
};
pub use policy_file::{export_policy, export_policy_to_path, import_policy, import_policy_from_path};
pub use threshold::{verify_threshold, ThresholdCheck, ThresholdReport};
pub use vi::{value_iteration, value_iteration_warm, Solution};

use crate::error::{ModelError, SolverError};
use crate::model::{
    mean_event_time, reward, transition_distribution, Action, CellState, OccupancyConvention,
    PricingScheme, QosClassSpec, StateSpace, TrafficModel,
};

/// Optimization criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Long-run average reward per event epoch (relative value iteration).
    AverageReward,
    /// Discounted total reward with factor `gamma` in (0,1).
    Discounted(f64),
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::AverageReward => write!(f, "average"),
            Criterion::Discounted(g) => write!(f, "discounted {g}"),
        }
    }
}

/// How epoch rewards are formed from the pricing scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTiming {
    /// Charge the pricing table per event epoch as written.
    PerEvent,
    /// Weight the linear-pricing carriage term by the expected epoch length
    /// `tau`, so carriage is paid per unit time rather than per event. No
    /// effect under flat pricing.
    SojournWeighted,
}

impl std::fmt::Display for RewardTiming {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RewardTiming::PerEvent => write!(f, "per-event"),
            RewardTiming::SojournWeighted => write!(f, "sojourn-weighted"),
        }
    }
}

/// What counts as a departure in the cell's event race.
///
/// A call leaves its cell either by ending (rate `mu_i`) or by handing off
/// to a neighbor (rate `rho * mu`). `IncludeHandoffOut` puts both flows into
/// the per-call departure rate, matching the handoff-arrival flow `c_i *
/// rho * mu` on the inbound side; this keeps the coupling loop subcritical
/// and is the default. `HoldingOnly` uses the bare holding rate: each
/// assumed neighbor call then breeds `rho` induced calls, so for `rho >= 1`
/// the fixed point rides against capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepartureRates {
    HoldingOnly,
    IncludeHandoffOut,
}

impl std::fmt::Display for DepartureRates {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DepartureRates::HoldingOnly => write!(f, "holding-only"),
            DepartureRates::IncludeHandoffOut => write!(f, "include-handoff-out"),
        }
    }
}

/// Everything that shapes the MDP besides the traffic numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub scheme: PricingScheme,
    pub convention: OccupancyConvention,
    pub reward_timing: RewardTiming,
    pub departure_rates: DepartureRates,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            scheme: PricingScheme::Flat,
            convention: OccupancyConvention::PostAction,
            reward_timing: RewardTiming::PerEvent,
            departure_rates: DepartureRates::IncludeHandoffOut,
        }
    }
}

impl ModelOptions {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn linear() -> Self {
        Self {
            scheme: PricingScheme::Linear,
            ..Self::default()
        }
    }

    /// Traffic with the departure-rate composition applied: the rates the
    /// cell's event race actually runs at.
    pub fn rate_traffic(&self, traffic: &TrafficModel) -> TrafficModel {
        let mut rates = traffic.clone();
        if self.departure_rates == DepartureRates::IncludeHandoffOut {
            for mu in &mut rates.holding_rates {
                *mu += traffic.handoff_rate_per_call;
            }
        }
        rates
    }
}

/// Solver settings. Defaults match the experiment setup: average reward,
/// span tolerance 1e-6, fixed-point tolerance 0.01 calls with damping 0.5.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub criterion: Criterion,
    /// Stopping threshold on the span (average) or sup norm (discounted) of
    /// successive value differences.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Stop the outer loop when the damped update moves `c` by less than
    /// this in the sup norm.
    pub fixed_point_tolerance: f64,
    /// Damping factor in (0,1]: `c_{k+1} = c_k + d * (c'_k - c_k)`.
    pub fixed_point_damping: f64,
    pub max_fixed_point_iters: usize,
    pub stationary: StationaryOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::AverageReward,
            epsilon: 1e-6,
            // Span contraction follows the chain's mixing rate; lightly
            // loaded wide cells need a few hundred thousand sweeps.
            max_sweeps: 1_000_000,
            fixed_point_tolerance: 0.01,
            fixed_point_damping: 0.5,
            max_fixed_point_iters: 100,
            stationary: StationaryOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |name: &'static str, reason: &str| {
            SolverError::Model(ModelError::InvalidTraffic {
                name,
                reason: reason.to_string(),
            })
        };
        if let Criterion::Discounted(g) = self.criterion {
            if !(g > 0.0 && g < 1.0) {
                return Err(bad("criterion", "discount factor must lie in (0,1)"));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(bad("epsilon", "must be > 0"));
        }
        if !(self.fixed_point_tolerance > 0.0) {
            return Err(bad("fixed_point_tolerance", "must be > 0"));
        }
        if !(self.fixed_point_damping > 0.0 && self.fixed_point_damping <= 1.0) {
            return Err(bad("fixed_point_damping", "must lie in (0,1]"));
        }
        Ok(())
    }
}

/// A value function over the canonical state order.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub values: Vec<f64>,
}

/// Everything a policy was solved under, carried with it for export and for
/// wiring it into the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMeta {
    pub classes: Vec<QosClassSpec>,
    pub traffic: TrafficModel,
    pub options: ModelOptions,
    pub criterion: Criterion,
}

/// A total map from state indices (canonical order) to actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actions: Vec<Action>,
    pub meta: PolicyMeta,
}

impl Policy {
    pub fn action(&self, state_index: usize) -> Action {
        self.actions[state_index]
    }

    /// Re-enumerates the state space this policy is indexed by.
    pub fn state_space(&self) -> Result<StateSpace, ModelError> {
        StateSpace::enumerate(&self.meta.classes, self.meta.traffic.total_channels)
    }
}

const REJECT: usize = 0;
const ACCEPT: usize = 1;

fn action_slot(action: Action) -> usize {
    match action {
        Action::Reject => REJECT,
        Action::Accept => ACCEPT,
    }
}

/// The MDP flattened into index-based reward and transition tables, ready for
/// repeated sweeps.
#[derive(Debug, Clone)]
pub struct CompiledMdp {
    space: StateSpace,
    traffic: TrafficModel,
    options: ModelOptions,
    accept_available: Vec<bool>,
    rewards: Vec<[f64; 2]>,
    transitions: Vec<[Vec<(u32, f64)>; 2]>,
}

impl CompiledMdp {
    /// Enumerates the state space and precomputes rewards and transition rows
    /// for both actions of every state.
    pub fn compile(
        classes: &[QosClassSpec],
        traffic: &TrafficModel,
        options: &ModelOptions,
    ) -> Result<Self, SolverError> {
        traffic.validate()?;
        if traffic.class_mix.len() != classes.len() {
            return Err(SolverError::Model(ModelError::InvalidTraffic {
                name: "class_mix",
                reason: "traffic vectors must have one entry per class".into(),
            }));
        }
        let space = StateSpace::enumerate(classes, traffic.total_channels)?;
        if classes
            .iter()
            .all(|c| c.bandwidth > traffic.total_channels)
        {
            return Err(SolverError::Model(ModelError::DegenerateModel {
                reason: "no QoS class fits in the cell; no call can ever be admitted".into(),
            }));
        }
        let rate_traffic = options.rate_traffic(traffic);

        let n = space.len();
        let mut accept_available = vec![false; n];
        let mut rewards = vec![[0.0; 2]; n];
        let mut transitions: Vec<[Vec<(u32, f64)>; 2]> = vec![[Vec::new(), Vec::new()]; n];

        for (s, state) in space.states().iter().enumerate() {
            let accept_ok = if state.event.is_arrival() {
                space.accept_feasible(state)
            } else {
                true // accept degenerates to reject on departures and no-event
            };
            accept_available[s] = accept_ok;

            for action in [Action::Reject, Action::Accept] {
                if action == Action::Accept && !accept_ok {
                    continue;
                }
                let slot = action_slot(action);
                rewards[s][slot] = Self::epoch_reward(state, action, classes, &rate_traffic, options)?;
                let dist =
                    transition_distribution(state, action, classes, &rate_traffic, options.convention)?;
                let mut row = Vec::with_capacity(dist.len());
                let mut mass = 0.0;
                for (succ, p) in dist {
                    let idx = space.index_of(&succ).ok_or_else(|| {
                        SolverError::Model(ModelError::InvalidState {
                            reason: format!("successor {succ} is outside the state space"),
                        })
                    })?;
                    mass += p;
                    row.push((idx as u32, p));
                }
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(SolverError::SubStochasticRow { state: s, mass });
                }
                transitions[s][slot] = row;
            }
        }

        Ok(Self {
            space,
            traffic: traffic.clone(),
            options: *options,
            accept_available,
            rewards,
            transitions,
        })
    }

    fn epoch_reward(
        state: &CellState,
        action: Action,
        classes: &[QosClassSpec],
        rate_traffic: &TrafficModel,
        options: &ModelOptions,
    ) -> Result<f64, SolverError> {
        let base = reward(state, action, options.scheme, classes);
        if options.scheme != PricingScheme::Linear
            || options.reward_timing != RewardTiming::SojournWeighted
        {
            return Ok(base);
        }
        // Replace the per-epoch carriage term by carriage * tau, with tau
        // taken from the same occupancy the transition rates use.
        let carriage: f64 = state
            .occupancy
            .iter()
            .zip(classes)
            .map(|(&x, c)| f64::from(x) * c.reward_carry)
            .sum();
        let rate_occ = match options.convention {
            OccupancyConvention::PostAction => crate::model::post_action_occupancy(
                state,
                action,
                classes,
                rate_traffic.total_channels,
            )?,
            OccupancyConvention::PreActionRates => state.occupancy.clone(),
        };
        let tau = mean_event_time(&CellState::new(rate_occ, state.event), rate_traffic)?;
        Ok(base - carriage + carriage * tau)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn traffic(&self) -> &TrafficModel {
        &self.traffic
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn accept_available(&self, state: usize) -> bool {
        self.accept_available[state]
    }

    pub fn reward_of(&self, state: usize, action: Action) -> f64 {
        self.rewards[state][action_slot(action)]
    }

    pub fn row(&self, state: usize, action: Action) -> &[(u32, f64)] {
        &self.transitions[state][action_slot(action)]
    }

    fn meta(&self, criterion: Criterion) -> PolicyMeta {
        PolicyMeta {
            classes: self.space.classes().to_vec(),
            traffic: self.traffic.clone(),
            options: self.options,
            criterion,
        }
    }

    pub(crate) fn policy_from_actions(&self, actions: Vec<Action>, criterion: Criterion) -> Policy {
        Policy {
            actions,
            meta: self.meta(criterion),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CallEvent;

    fn classes2() -> Vec<QosClassSpec> {
        vec![
            QosClassSpec::from_drop_block_ratio(1, 1, 80.0).unwrap(),
            QosClassSpec::from_drop_block_ratio(2, 4, 80.0).unwrap(),
        ]
    }

    fn literal_options() -> ModelOptions {
        ModelOptions {
            convention: OccupancyConvention::PreActionRates,
            departure_rates: DepartureRates::HoldingOnly,
            ..ModelOptions::default()
        }
    }

    #[test]
    fn compile_rejects_paper_literal_for_solving() {
        let traffic =
            TrafficModel::new(10, 0.2, vec![0.5, 0.5], 1.0 / 120.0, 0.01, vec![1.0, 1.0]).unwrap();
        let err = CompiledMdp::compile(&classes2(), &traffic, &literal_options());
        assert!(matches!(err, Err(SolverError::SubStochasticRow { .. })));
    }

    #[test]
    fn compile_reports_degenerate_when_nothing_fits() {
        let classes = vec![QosClassSpec::from_drop_block_ratio(1, 50, 80.0).unwrap()];
        let traffic = TrafficModel::new(10, 0.2, vec![1.0], 1.0 / 120.0, 0.01, vec![1.0]).unwrap();
        let err = CompiledMdp::compile(&classes, &traffic, &ModelOptions::default());
        assert!(matches!(
            err,
            Err(SolverError::Model(ModelError::DegenerateModel { .. }))
        ));
    }

    #[test]
    fn compiled_rows_are_stochastic_and_sparse() {
        let traffic =
            TrafficModel::new(20, 0.2, vec![0.5, 0.5], 1.0 / 120.0, 0.01, vec![2.0, 1.0]).unwrap();
        for departure_rates in [DepartureRates::HoldingOnly, DepartureRates::IncludeHandoffOut] {
            let options = ModelOptions {
                departure_rates,
                ..ModelOptions::default()
            };
            let mdp = CompiledMdp::compile(&classes2(), &traffic, &options).unwrap();
            let k = 2;
            for s in 0..mdp.len() {
                for action in [Action::Reject, Action::Accept] {
                    if action == Action::Accept && !mdp.accept_available(s) {
                        continue;
                    }
                    let row = mdp.row(s, action);
                    assert!(row.len() <= 3 * k + 1);
                    let mass: f64 = row.iter().map(|(_, p)| p).sum();
                    assert!((mass - 1.0).abs() < 1e-12, "row {s} sums to {mass}");
                }
            }
        }
    }

    #[test]
    fn handoff_out_composition_adds_the_dwell_rate_to_departures() {
        let traffic =
            TrafficModel::new(20, 0.2, vec![0.5, 0.5], 1.0 / 120.0, 0.01, vec![2.0, 1.0]).unwrap();
        let options = ModelOptions::default();
        let rates = options.rate_traffic(&traffic);
        for (i, mu) in rates.holding_rates.iter().enumerate() {
            approx::assert_relative_eq!(*mu, traffic.holding_rates[i] + 0.01, max_relative = 1e-12);
        }
        let literal = ModelOptions {
            departure_rates: DepartureRates::HoldingOnly,
            ..options
        };
        assert_eq!(literal.rate_traffic(&traffic), traffic);
    }

    #[test]
    fn sojourn_weighting_scales_only_the_carriage_term() {
        let traffic =
            TrafficModel::new(20, 0.2, vec![0.5, 0.5], 1.0 / 120.0, 0.01, vec![2.0, 1.0]).unwrap();
        let classes = classes2();
        let state = CellState::new(vec![3, 1], CallEvent::NewArrival(0));
        let base = ModelOptions {
            scheme: PricingScheme::Linear,
            departure_rates: DepartureRates::HoldingOnly,
            ..ModelOptions::default()
        };
        let weighted_opts = ModelOptions {
            reward_timing: RewardTiming::SojournWeighted,
            ..base
        };
        let per_event =
            CompiledMdp::epoch_reward(&state, Action::Accept, &classes, &traffic, &base).unwrap();
        let weighted =
            CompiledMdp::epoch_reward(&state, Action::Accept, &classes, &traffic, &weighted_opts)
                .unwrap();
        let carriage = 3.0 * 1.0 + 1.0 * 4.0;
        let tau = mean_event_time(&CellState::new(vec![4, 1], state.event), &traffic).unwrap();
        approx::assert_relative_eq!(weighted, per_event - carriage + carriage * tau, max_relative = 1e-12);
        // Flat pricing is untouched by the timing switch.
        let flat = ModelOptions {
            reward_timing: RewardTiming::SojournWeighted,
            departure_rates: DepartureRates::HoldingOnly,
            ..ModelOptions::default()
        };
        let flat_reward =
            CompiledMdp::epoch_reward(&state, Action::Accept, &classes, &traffic, &flat).unwrap();
        approx::assert_relative_eq!(flat_reward, 1.0);
    }
}
