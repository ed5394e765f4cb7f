//! The single-cell admission MDP.
//!
//! A cell has `N` bandwidth units (BU) and carries `K` QoS classes; a class-i
//! call occupies `b_i` BU. The state is the per-class occupancy vector plus
//! the call event currently being decided: a new-call arrival, a handoff
//! arrival, a departure, or no event. The only actions are `accept` and
//! `reject`; they matter only on arrivals. Between decisions the cell evolves
//! by a race of exponential clocks — per-class Poisson new arrivals, handoff
//! arrivals at a rate proportional to the expected neighbor population, and
//! per-call departures — and the MDP is the embedded chain at event epochs.

mod reward;
mod space;
mod transition;

pub use reward::reward;
pub use space::{enumerate_states, StateSpace};
pub use transition::{event_rate_total, mean_event_time, post_action_occupancy, transition_distribution};

use crate::error::ModelError;

/// Zero-based position of a QoS class within the class list.
pub type ClassId = usize;

/// One QoS class: its bandwidth demand and its reward triple.
#[derive(Debug, Clone, PartialEq)]
pub struct QosClassSpec {
    /// One-based class id, used in displays and file formats.
    pub index: usize,
    /// Bandwidth demand in BU (`b_i >= 1`).
    pub bandwidth: u32,
    /// Reward for carrying a call: per admission under flat pricing, per unit
    /// of time under linear pricing. Strictly positive.
    pub reward_carry: f64,
    /// Penalty for blocking a new call (non-positive).
    pub reward_block: f64,
    /// Penalty for dropping a call at handoff (non-positive).
    pub reward_drop: f64,
}

impl QosClassSpec {
    pub fn new(
        index: usize,
        bandwidth: u32,
        reward_carry: f64,
        reward_block: f64,
        reward_drop: f64,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            index,
            bandwidth,
            reward_carry,
            reward_block,
            reward_drop,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Standard reward parameterization: carry reward proportional to
    /// bandwidth, blocking penalty 10% of it, dropping penalty `r_db` times
    /// the blocking penalty.
    pub fn from_drop_block_ratio(index: usize, bandwidth: u32, r_db: f64) -> Result<Self, ModelError> {
        let carry = f64::from(bandwidth);
        let block = -0.1 * carry;
        Self::new(index, bandwidth, carry, block, r_db * block)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| ModelError::InvalidClass {
            index: self.index,
            reason: reason.to_string(),
        };
        if self.bandwidth < 1 {
            return Err(fail("bandwidth must be >= 1 BU"));
        }
        if !(self.reward_carry > 0.0) || !self.reward_carry.is_finite() {
            return Err(fail("reward_carry must be finite and > 0"));
        }
        if !(self.reward_block <= 0.0) || !self.reward_block.is_finite() {
            return Err(fail("reward_block must be finite and <= 0"));
        }
        if !(self.reward_drop <= 0.0) || !self.reward_drop.is_finite() {
            return Err(fail("reward_drop must be finite and <= 0"));
        }
        Ok(())
    }
}

/// Validates a class list as a whole (non-empty, per-class invariants).
pub fn validate_classes(classes: &[QosClassSpec]) -> Result<(), ModelError> {
    if classes.is_empty() {
        return Err(ModelError::NoClasses);
    }
    for class in classes {
        class.validate()?;
    }
    Ok(())
}

/// The call event component of a state: at most one event per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallEvent {
    /// No pending event. Only the initial state of the chain carries this;
    /// transitions never produce it.
    None,
    /// A new call of the given class requests admission.
    NewArrival(ClassId),
    /// A call of the given class arrives by handoff from a neighbor.
    HandoffArrival(ClassId),
    /// A call of the given class ends. Requires at least one such call.
    Departure(ClassId),
}

impl CallEvent {
    /// The class the event concerns, if any.
    pub fn class(self) -> Option<ClassId> {
        match self {
            CallEvent::None => None,
            CallEvent::NewArrival(i) | CallEvent::HandoffArrival(i) | CallEvent::Departure(i) => {
                Some(i)
            }
        }
    }

    /// True for new-call and handoff arrivals — the events admission acts on.
    pub fn is_arrival(self) -> bool {
        matches!(self, CallEvent::NewArrival(_) | CallEvent::HandoffArrival(_))
    }

    /// Compact code used in policy files: `n`, `r<i>`, `h<i>`, `d<i>` with
    /// one-based class ids.
    pub fn code(self) -> String {
        match self {
            CallEvent::None => "n".to_string(),
            CallEvent::NewArrival(i) => format!("r{}", i + 1),
            CallEvent::HandoffArrival(i) => format!("h{}", i + 1),
            CallEvent::Departure(i) => format!("d{}", i + 1),
        }
    }

    /// Inverse of [`CallEvent::code`].
    pub fn parse_code(code: &str) -> Option<Self> {
        if code == "n" {
            return Some(CallEvent::None);
        }
        let (kind, id) = code.split_at(1);
        let id: usize = id.parse().ok()?;
        if id == 0 {
            return None;
        }
        match kind {
            "r" => Some(CallEvent::NewArrival(id - 1)),
            "h" => Some(CallEvent::HandoffArrival(id - 1)),
            "d" => Some(CallEvent::Departure(id - 1)),
            _ => None,
        }
    }
}

impl std::fmt::Display for CallEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// An MDP state: per-class occupancy plus the pending call event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellState {
    pub occupancy: Vec<u32>,
    pub event: CallEvent,
}

impl CellState {
    pub fn new(occupancy: Vec<u32>, event: CallEvent) -> Self {
        Self { occupancy, event }
    }

    /// Total bandwidth in use, in BU.
    pub fn used_bandwidth(&self, classes: &[QosClassSpec]) -> u64 {
        used_bandwidth(&self.occupancy, classes)
    }
}

impl std::fmt::Display for CellState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let occ: Vec<String> = self.occupancy.iter().map(|x| x.to_string()).collect();
        write!(f, "({},{})", occ.join(","), self.event)
    }
}

/// Total bandwidth of an occupancy vector, in BU.
pub fn used_bandwidth(occupancy: &[u32], classes: &[QosClassSpec]) -> u64 {
    occupancy
        .iter()
        .zip(classes)
        .map(|(&x, c)| u64::from(x) * u64::from(c.bandwidth))
        .sum()
}

/// The admission actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Reject,
    Accept,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Reject => write!(f, "reject"),
            Action::Accept => write!(f, "accept"),
        }
    }
}

/// How carriage revenue is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingScheme {
    /// One-shot reward per admitted new call.
    Flat,
    /// Reward proportional to carried time: every epoch also earns the sum of
    /// per-class carry rewards over the current occupancy.
    Linear,
}

impl std::fmt::Display for PricingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PricingScheme::Flat => write!(f, "flat"),
            PricingScheme::Linear => write!(f, "linear"),
        }
    }
}

/// Which occupancy the next-event rates are computed from.
///
/// `PostAction` uses the occupancy after the current action takes effect;
/// this makes every transition row a proper distribution and never predicts
/// a departure from an empty class. `PreActionRates` uses the occupancy
/// before the action in both the total rate and the departure terms — the
/// departing call still counts toward its own class's departure rate — at
/// the price of leaking mass in states whose departing class hits zero
/// (those rows sum to less than one). Solving requires `PostAction`;
/// the pre-action variant exists for construction-level inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupancyConvention {
    PostAction,
    PreActionRates,
}

impl std::fmt::Display for OccupancyConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OccupancyConvention::PostAction => write!(f, "post-action"),
            OccupancyConvention::PreActionRates => write!(f, "pre-action"),
        }
    }
}

/// Traffic, mobility and capacity parameters of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    /// Cell capacity `N` in BU.
    pub total_channels: u32,
    /// Aggregate new-call arrival rate, calls per second per cell.
    pub arrival_rate: f64,
    /// Probability that a new call belongs to each class; sums to 1.
    pub class_mix: Vec<f64>,
    /// Per-class call-termination rates (1/s). Experiments use one shared
    /// rate; the model allows them to differ.
    pub holding_rates: Vec<f64>,
    /// Per-call handoff rate `rho * mu` (1/s): the rate at which an active
    /// call leaves its cell for a neighbor.
    pub handoff_rate_per_call: f64,
    /// Expected number of active calls of each class at a neighboring cell —
    /// the coupling variable the fixed-point loop solves for.
    pub expected_neighbor_calls: Vec<f64>,
}

impl TrafficModel {
    /// Uniform-holding constructor used by the experiments.
    pub fn new(
        total_channels: u32,
        arrival_rate: f64,
        class_mix: Vec<f64>,
        holding_rate: f64,
        handoff_rate_per_call: f64,
        expected_neighbor_calls: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let k = class_mix.len();
        let traffic = Self {
            total_channels,
            arrival_rate,
            class_mix,
            holding_rates: vec![holding_rate; k],
            handoff_rate_per_call,
            expected_neighbor_calls,
        };
        traffic.validate()?;
        Ok(traffic)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.class_mix.len();
        if k == 0 {
            return Err(ModelError::InvalidTraffic {
                name: "class_mix",
                reason: "must have one entry per class".into(),
            });
        }
        if self.holding_rates.len() != k || self.expected_neighbor_calls.len() != k {
            return Err(ModelError::InvalidTraffic {
                name: "holding_rates",
                reason: "per-class vectors must all have the same length".into(),
            });
        }
        if !(self.arrival_rate >= 0.0) || !self.arrival_rate.is_finite() {
            return Err(ModelError::InvalidTraffic {
                name: "arrival_rate",
                reason: "must be finite and >= 0".into(),
            });
        }
        let mix_sum: f64 = self.class_mix.iter().sum();
        if self.class_mix.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (mix_sum - 1.0).abs() > 1e-9
        {
            return Err(ModelError::InvalidTraffic {
                name: "class_mix",
                reason: format!("entries must lie in [0,1] and sum to 1 (sum = {mix_sum})"),
            });
        }
        if self.holding_rates.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(ModelError::InvalidTraffic {
                name: "holding_rates",
                reason: "must be finite and >= 0".into(),
            });
        }
        if !(self.handoff_rate_per_call >= 0.0) || !self.handoff_rate_per_call.is_finite() {
            return Err(ModelError::InvalidTraffic {
                name: "handoff_rate_per_call",
                reason: "must be finite and >= 0".into(),
            });
        }
        if self
            .expected_neighbor_calls
            .iter()
            .any(|&c| !(c >= 0.0) || !c.is_finite())
        {
            return Err(ModelError::InvalidTraffic {
                name: "expected_neighbor_calls",
                reason: "must be finite and >= 0".into(),
            });
        }
        Ok(())
    }

    /// New-call arrival rate of one class: `lambda_i = mix_i * lambda`.
    pub fn class_arrival_rate(&self, class: ClassId) -> f64 {
        self.arrival_rate * self.class_mix[class]
    }

    /// Handoff arrival rate of one class: `c_i * rho * mu`.
    pub fn class_handoff_rate(&self, class: ClassId) -> f64 {
        self.expected_neighbor_calls[class] * self.handoff_rate_per_call
    }

    /// Same traffic with a different expected-neighbor-calls vector.
    pub fn with_expected_calls(&self, c: Vec<f64>) -> Self {
        Self {
            expected_neighbor_calls: c,
            ..self.clone()
        }
    }
}

/// Mobility factor `rho`: the ratio of the per-call handoff rate to the
/// call-termination rate, for mobiles moving at constant speed through
/// hexagonal cells: `rho = (3 + 2*sqrt(3)) * SP / (9 * mu * R)` with the
/// speed converted to km/s.
///
/// `rho * mu` is then the dwell-time rate, and it does not depend on `mu`.
pub fn mobility_rho(speed_kmh: f64, holding_rate: f64, cell_radius_km: f64) -> Result<f64, ModelError> {
    if !(speed_kmh >= 0.0) || !(holding_rate >= 0.0) || !(cell_radius_km >= 0.0) {
        return Err(ModelError::InvalidTraffic {
            name: "mobility",
            reason: "speed, holding rate and radius must be >= 0".into(),
        });
    }
    if holding_rate == 0.0 {
        return Err(ModelError::DivisionByZero {
            context: "mobility rho with holding rate mu = 0".into(),
        });
    }
    if cell_radius_km == 0.0 {
        return Err(ModelError::DivisionByZero {
            context: "mobility rho with cell radius R = 0".into(),
        });
    }
    let speed_km_s = speed_kmh / 3600.0;
    Ok((3.0 + 2.0 * 3.0_f64.sqrt()) * speed_km_s / (9.0 * holding_rate * cell_radius_km))
}
