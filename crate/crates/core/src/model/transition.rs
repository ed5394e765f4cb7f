//! Event timing and transition distributions of the embedded chain.

use crate::error::ModelError;
use crate::model::{
    Action, CallEvent, CellState, OccupancyConvention, QosClassSpec, TrafficModel,
};

/// Total event rate `omega` out of an occupancy: departures at `x_i * mu_i`,
/// new arrivals at `lambda_i`, handoff arrivals at `c_i * rho * mu`.
pub fn event_rate_total(occupancy: &[u32], traffic: &TrafficModel) -> f64 {
    let mut omega = 0.0;
    for (i, &x) in occupancy.iter().enumerate() {
        omega += f64::from(x) * traffic.holding_rates[i];
        omega += traffic.class_arrival_rate(i);
        omega += traffic.class_handoff_rate(i);
    }
    omega
}

/// Expected time until the next event from this state: `tau = 1 / omega`,
/// computed from the state's own occupancy.
pub fn mean_event_time(state: &CellState, traffic: &TrafficModel) -> Result<f64, ModelError> {
    let omega = event_rate_total(&state.occupancy, traffic);
    if omega <= 0.0 {
        return Err(ModelError::DegenerateModel {
            reason: format!("state {state} has total event rate 0; no event can ever fire"),
        });
    }
    Ok(omega.recip())
}

/// Occupancy after the action takes effect: +1 on an accepted arrival of the
/// event's class, -1 on a departure, unchanged otherwise.
///
/// Fails if an accepted arrival would exceed capacity; the caller must treat
/// `accept` as unavailable in such states.
pub fn post_action_occupancy(
    state: &CellState,
    action: Action,
    classes: &[QosClassSpec],
    total_channels: u32,
) -> Result<Vec<u32>, ModelError> {
    let mut occ = state.occupancy.clone();
    match (state.event, action) {
        (CallEvent::NewArrival(i), Action::Accept) | (CallEvent::HandoffArrival(i), Action::Accept) => {
            let used = crate::model::used_bandwidth(&occ, classes);
            let needed = classes[i].bandwidth;
            let total = u64::from(total_channels);
            if used + u64::from(needed) > total {
                return Err(ModelError::InfeasibleAction {
                    class_index: classes[i].index,
                    needed,
                    free: (total - used) as u32,
                    total: total_channels,
                });
            }
            occ[i] += 1;
        }
        (CallEvent::Departure(i), _) => {
            if occ[i] == 0 {
                return Err(ModelError::InvalidState {
                    reason: format!("departure event for class {} with occupancy 0", i + 1),
                });
            }
            occ[i] -= 1;
        }
        _ => {}
    }
    Ok(occ)
}

/// The transition distribution out of `(state, action)`.
///
/// Successors are `(x + sigma, theta')` for every next event `theta'` with
/// positive rate; the no-event state is never produced. Under
/// [`OccupancyConvention::PostAction`] both the departure rates and the
/// normalizing total use the post-action occupancy, so every row is a
/// probability distribution over the state space. Under
/// [`OccupancyConvention::PreActionRates`] they use the pre-action occupancy;
/// a departure successor whose class just emptied is omitted (it is not a
/// state), so those rows sum to less than one by exactly `mu_i * tau`.
pub fn transition_distribution(
    state: &CellState,
    action: Action,
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    convention: OccupancyConvention,
) -> Result<Vec<(CellState, f64)>, ModelError> {
    let next_occ = post_action_occupancy(state, action, classes, traffic.total_channels)?;
    let rate_occ: &[u32] = match convention {
        OccupancyConvention::PostAction => &next_occ,
        OccupancyConvention::PreActionRates => &state.occupancy,
    };

    let omega = event_rate_total(rate_occ, traffic);
    if omega <= 0.0 {
        return Err(ModelError::DegenerateModel {
            reason: format!(
                "state {state} with action {action} reaches occupancy with total event rate 0"
            ),
        });
    }

    let k = classes.len();
    let mut out = Vec::with_capacity(3 * k);
    for i in 0..k {
        let rate = traffic.class_arrival_rate(i);
        if rate > 0.0 {
            out.push((
                CellState::new(next_occ.clone(), CallEvent::NewArrival(i)),
                rate / omega,
            ));
        }
    }
    for i in 0..k {
        let rate = traffic.class_handoff_rate(i);
        if rate > 0.0 {
            out.push((
                CellState::new(next_occ.clone(), CallEvent::HandoffArrival(i)),
                rate / omega,
            ));
        }
    }
    for i in 0..k {
        let rate = f64::from(rate_occ[i]) * traffic.holding_rates[i];
        // A departure successor needs someone left to depart.
        if rate > 0.0 && next_occ[i] > 0 {
            out.push((
                CellState::new(next_occ.clone(), CallEvent::Departure(i)),
                rate / omega,
            ));
        }
    }
    Ok(out)
}
