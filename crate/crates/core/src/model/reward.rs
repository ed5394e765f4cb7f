//! The per-epoch reward function.

use crate::model::{Action, CallEvent, CellState, PricingScheme, QosClassSpec};

/// Reward for taking `action` in `state`.
///
/// Flat pricing charges once per admitted new call and penalizes blocks and
/// drops; departures and the no-event state are worth nothing. Linear pricing
/// additionally earns the carriage term `sum_j x_j * R_j0` every epoch, pays
/// the carry reward on any accepted arrival (new or handoff), and charges
/// `-R_i0` when a departure is processed under `reject`.
///
/// Total over all states and both actions; same inputs always give the same
/// output.
pub fn reward(
    state: &CellState,
    action: Action,
    scheme: PricingScheme,
    classes: &[QosClassSpec],
) -> f64 {
    match scheme {
        PricingScheme::Flat => match (state.event, action) {
            (CallEvent::NewArrival(i), Action::Accept) => classes[i].reward_carry,
            (CallEvent::NewArrival(i), Action::Reject) => classes[i].reward_block,
            (CallEvent::HandoffArrival(_), Action::Accept) => 0.0,
            (CallEvent::HandoffArrival(i), Action::Reject) => classes[i].reward_drop,
            (CallEvent::Departure(_), _) | (CallEvent::None, _) => 0.0,
        },
        PricingScheme::Linear => {
            let carriage: f64 = state
                .occupancy
                .iter()
                .zip(classes)
                .map(|(&x, c)| f64::from(x) * c.reward_carry)
                .sum();
            let event_term = match (state.event, action) {
                (CallEvent::NewArrival(i), Action::Accept)
                | (CallEvent::HandoffArrival(i), Action::Accept) => classes[i].reward_carry,
                (CallEvent::NewArrival(i), Action::Reject) => classes[i].reward_block,
                (CallEvent::HandoffArrival(i), Action::Reject) => classes[i].reward_drop,
                (CallEvent::Departure(i), Action::Reject) => -classes[i].reward_carry,
                (CallEvent::Departure(_), Action::Accept) | (CallEvent::None, _) => 0.0,
            };
            event_term + carriage
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn classes() -> Vec<QosClassSpec> {
        vec![
            QosClassSpec::new(1, 1, 1.0, -0.1, -8.0).unwrap(),
            QosClassSpec::new(2, 4, 4.0, -0.4, -32.0).unwrap(),
        ]
    }

    #[test]
    fn flat_cases() {
        let cs = classes();
        let s = |ev| CellState::new(vec![2, 3], ev);
        assert_relative_eq!(reward(&s(CallEvent::NewArrival(0)), Action::Accept, PricingScheme::Flat, &cs), 1.0);
        assert_relative_eq!(reward(&s(CallEvent::NewArrival(0)), Action::Reject, PricingScheme::Flat, &cs), -0.1);
        assert_relative_eq!(reward(&s(CallEvent::HandoffArrival(1)), Action::Accept, PricingScheme::Flat, &cs), 0.0);
        assert_relative_eq!(reward(&s(CallEvent::HandoffArrival(1)), Action::Reject, PricingScheme::Flat, &cs), -32.0);
        for action in [Action::Accept, Action::Reject] {
            assert_relative_eq!(reward(&s(CallEvent::Departure(0)), action, PricingScheme::Flat, &cs), 0.0);
            assert_relative_eq!(reward(&s(CallEvent::None), action, PricingScheme::Flat, &cs), 0.0);
        }
    }

    #[test]
    fn linear_rejected_departure_matches_hand_value() {
        // x = (2,3), R_10 = 1, R_20 = 4: -R_20 + (2*1 + 3*4) = 10.
        let cs = classes();
        let s = CellState::new(vec![2, 3], CallEvent::Departure(1));
        assert_relative_eq!(reward(&s, Action::Reject, PricingScheme::Linear, &cs), 10.0);
    }

    #[test]
    fn linear_adds_carriage_to_every_case() {
        let cs = classes();
        let carriage = 2.0 * 1.0 + 3.0 * 4.0;
        let s = |ev| CellState::new(vec![2, 3], ev);
        assert_relative_eq!(
            reward(&s(CallEvent::NewArrival(1)), Action::Accept, PricingScheme::Linear, &cs),
            4.0 + carriage
        );
        assert_relative_eq!(
            reward(&s(CallEvent::HandoffArrival(0)), Action::Accept, PricingScheme::Linear, &cs),
            1.0 + carriage
        );
        assert_relative_eq!(
            reward(&s(CallEvent::NewArrival(1)), Action::Reject, PricingScheme::Linear, &cs),
            -0.4 + carriage
        );
        assert_relative_eq!(
            reward(&s(CallEvent::HandoffArrival(1)), Action::Reject, PricingScheme::Linear, &cs),
            -32.0 + carriage
        );
        assert_relative_eq!(reward(&s(CallEvent::None), Action::Reject, PricingScheme::Linear, &cs), carriage);
        assert_relative_eq!(
            reward(&s(CallEvent::Departure(0)), Action::Accept, PricingScheme::Linear, &cs),
            carriage
        );
    }
}
