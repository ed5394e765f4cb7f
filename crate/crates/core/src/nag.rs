//! Predictive admission heuristic with a target dropping probability.
//!
//! A new call is admitted only if, looking `t_est` seconds ahead, the
//! probability of bandwidth overload stays below `alpha` both at the cell
//! itself and at each of its neighbors. The look-ahead treats every resident
//! call as staying with probability `p_stay` and every neighbor call as
//! arriving with probability `p_move`, and approximates the resulting
//! bandwidth demand by a Gaussian with matched mean and variance. Handoff
//! calls bypass the predictive test — protecting them is the point — and are
//! admitted whenever capacity permits.

use crate::error::ModelError;
use crate::model::{Action, CallEvent, ClassId, QosClassSpec, TrafficModel};

/// Heuristic parameters: target overload probability and look-ahead horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NagConfig {
    /// Target dropping probability, in (0,1).
    pub alpha: f64,
    /// Estimation horizon in seconds, chosen short enough that a second
    /// handoff within it is negligible.
    pub t_est: f64,
}

impl NagConfig {
    pub fn new(alpha: f64, t_est: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ModelError::InvalidTraffic {
                name: "nag.alpha",
                reason: "must lie strictly between 0 and 1".into(),
            });
        }
        if !(t_est > 0.0) || !t_est.is_finite() {
            return Err(ModelError::InvalidTraffic {
                name: "nag.t_est",
                reason: "must be finite and > 0".into(),
            });
        }
        Ok(Self { alpha, t_est })
    }
}

impl Default for NagConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            t_est: 5.0,
        }
    }
}

/// Where a call may be `t_est` seconds from now.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalProbs {
    /// Per class: still in its current cell (neither handed off nor ended),
    /// `exp(-(rho*mu + mu_i) * t_est)`.
    pub stay: Vec<f64>,
    /// Moved to one specific neighbor: `(1 - exp(-rho*mu * t_est)) / 6`.
    /// Dwell is class independent, so this is a scalar.
    pub move_to_neighbor: f64,
}

/// Survival probabilities over the look-ahead horizon.
pub fn survival_probabilities(traffic: &TrafficModel, t_est: f64) -> SurvivalProbs {
    let dwell_rate = traffic.handoff_rate_per_call;
    let move_to_neighbor = (1.0 - (-dwell_rate * t_est).exp()) / 6.0;
    let stay = traffic
        .holding_rates
        .iter()
        .map(|&mu| (-(dwell_rate + mu) * t_est).exp())
        .collect();
    SurvivalProbs {
        stay,
        move_to_neighbor,
    }
}

/// Probability that the cell's bandwidth demand `t_est` seconds from now
/// exceeds capacity.
///
/// Each resident call contributes its bandwidth with probability `p_stay`,
/// each call at a neighboring cell with probability `p_move`; the sum of the
/// independent contributions is approximated by a Gaussian with the matched
/// mean and variance. `extra_call` adds its bandwidth deterministically (a
/// commitment under test). With zero variance the indicator is exact.
pub fn overload_probability(
    cell: &[u32],
    neighbors: &[&[u32]],
    extra_call: Option<ClassId>,
    config: &NagConfig,
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
) -> f64 {
    let survival = survival_probabilities(traffic, config.t_est);
    let p_move = survival.move_to_neighbor;

    let mut mean = 0.0;
    let mut variance = 0.0;
    for (i, &count) in cell.iter().enumerate() {
        let b = f64::from(classes[i].bandwidth);
        let n = f64::from(count);
        let p = survival.stay[i];
        mean += n * b * p;
        variance += n * b * b * p * (1.0 - p);
    }
    for neighbor in neighbors {
        for (i, &count) in neighbor.iter().enumerate() {
            let b = f64::from(classes[i].bandwidth);
            let n = f64::from(count);
            mean += n * b * p_move;
            variance += n * b * b * p_move * (1.0 - p_move);
        }
    }

    let committed = extra_call.map_or(0.0, |i| f64::from(classes[i].bandwidth));
    let capacity = f64::from(traffic.total_channels);
    let headroom = capacity - committed - mean;
    if variance <= 0.0 {
        return if headroom < 0.0 { 1.0 } else { 0.0 };
    }
    // P(N(mean, variance) > capacity - committed) via the complementary erf.
    0.5 * libm::erfc(headroom / (variance * 2.0).sqrt())
}

/// A neighbor of the deciding cell, with everything the neighbor-side test
/// needs: its own occupancy and the occupancies around it.
#[derive(Debug, Clone)]
pub struct NeighborSnapshot<'a> {
    /// The neighbor's occupancy vector.
    pub occupancy: &'a [u32],
    /// Occupancies of the cells adjacent to this neighbor, the deciding cell
    /// among them.
    pub surrounding: Vec<&'a [u32]>,
    /// Position of the deciding cell within `surrounding`.
    pub deciding_cell_slot: usize,
}

/// The admission decision.
///
/// A new call of class `i` at cell `c` is accepted iff
/// (i) it fits in the free capacity right now,
/// (ii) the overload probability at `c` with the call committed is at most
/// `alpha`, and
/// (iii) for each neighbor, the overload probability with the new call
/// counted among `c`'s potential handoff sources is at most `alpha`.
/// Handoff arrivals skip (ii) and (iii).
pub fn nag_admit(
    cell: &[u32],
    neighbors: &[NeighborSnapshot<'_>],
    incoming: CallEvent,
    config: &NagConfig,
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
) -> Action {
    let class = match incoming {
        CallEvent::NewArrival(i) | CallEvent::HandoffArrival(i) => i,
        // Nothing to admit.
        _ => return Action::Reject,
    };

    let used = crate::model::used_bandwidth(cell, classes);
    let fits =
        used + u64::from(classes[class].bandwidth) <= u64::from(traffic.total_channels);
    if !fits {
        return Action::Reject;
    }
    if matches!(incoming, CallEvent::HandoffArrival(_)) {
        return Action::Accept;
    }

    // (ii) the cell itself, with the new call as a hard commitment.
    let neighbor_occs: Vec<&[u32]> = neighbors.iter().map(|n| n.occupancy).collect();
    if overload_probability(cell, &neighbor_occs, Some(class), config, classes, traffic)
        > config.alpha
    {
        return Action::Reject;
    }

    // (iii) each neighbor, with the new call added to this cell's population
    // as one more potential handoff source.
    let mut cell_with_call = cell.to_vec();
    cell_with_call[class] += 1;
    for neighbor in neighbors {
        let mut surrounding: Vec<&[u32]> = neighbor.surrounding.clone();
        surrounding[neighbor.deciding_cell_slot] = &cell_with_call;
        if overload_probability(
            neighbor.occupancy,
            &surrounding,
            None,
            config,
            classes,
            traffic,
        ) > config.alpha
        {
            return Action::Reject;
        }
    }
    Action::Accept
}
