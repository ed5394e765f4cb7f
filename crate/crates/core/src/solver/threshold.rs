//! Structural check: is a policy a bandwidth threshold per arrival type?

use crate::model::{Action, CallEvent, StateSpace};
use crate::solver::Policy;

/// Cap on reported violating pairs per event type; the check itself is exact.
const MAX_VIOLATIONS_REPORTED: usize = 64;

/// Verdict for one arrival event type.
#[derive(Debug, Clone)]
pub struct ThresholdCheck {
    pub event: CallEvent,
    /// True when the accept region is downward closed in used bandwidth.
    pub monotone: bool,
    /// When monotone: accept exactly in states with used bandwidth strictly
    /// below this many BU. Equals the capacity when nothing is rejected and
    /// zero when nothing is accepted.
    pub threshold: Option<u64>,
    /// Pairs (accepted state index, rejected state index) with the accepted
    /// state at least as loaded as the rejected one.
    pub violations: Vec<(usize, usize)>,
}

/// Per-event-type threshold report.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub checks: Vec<ThresholdCheck>,
}

impl ThresholdReport {
    pub fn all_monotone(&self) -> bool {
        self.checks.iter().all(|c| c.monotone)
    }
}

/// Checks, for each arrival event type, whether the policy accepts exactly in
/// a downward-closed set of used bandwidths, and infers the cutoffs when it
/// does. Departure and no-event states are ignored: actions have no effect
/// there.
pub fn verify_threshold(policy: &Policy, space: &StateSpace) -> ThresholdReport {
    let k = space.classes().len();
    let mut events = Vec::with_capacity(2 * k);
    for i in 0..k {
        events.push(CallEvent::NewArrival(i));
    }
    for i in 0..k {
        events.push(CallEvent::HandoffArrival(i));
    }

    let checks = events
        .into_iter()
        .map(|event| check_event(policy, space, event))
        .collect();
    ThresholdReport { checks }
}

fn check_event(policy: &Policy, space: &StateSpace, event: CallEvent) -> ThresholdCheck {
    let mut accepted: Vec<(u64, usize)> = Vec::new();
    let mut rejected: Vec<(u64, usize)> = Vec::new();
    for (s, state) in space.states().iter().enumerate() {
        if state.event != event {
            continue;
        }
        let used = space.used_bandwidth(&state.occupancy);
        match policy.action(s) {
            Action::Accept => accepted.push((used, s)),
            Action::Reject => rejected.push((used, s)),
        }
    }

    let mut violations = Vec::new();
    for &(used_a, sa) in &accepted {
        for &(used_r, sr) in &rejected {
            if used_a >= used_r {
                violations.push((sa, sr));
                if violations.len() >= MAX_VIOLATIONS_REPORTED {
                    break;
                }
            }
        }
        if violations.len() >= MAX_VIOLATIONS_REPORTED {
            break;
        }
    }
    let monotone = violations.is_empty();

    let threshold = if !monotone {
        None
    } else if rejected.is_empty() {
        Some(u64::from(space.total_channels()))
    } else if accepted.is_empty() {
        Some(0)
    } else {
        rejected.iter().map(|&(used, _)| used).min()
    };

    ThresholdCheck {
        event,
        monotone,
        threshold,
        violations,
    }
}
