//! Counters and derived performance metrics.

use std::collections::BTreeMap;

/// Per-class event counts over the measurement window. A call belongs to the
/// window iff it arrived inside it, so per class
/// `new_arrivals = blocked + completions + dropped + active_at_horizon`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassCounters {
    pub new_arrivals: u64,
    pub blocked: u64,
    pub handoff_attempts: u64,
    pub dropped: u64,
    pub completions: u64,
    pub active_at_horizon: u64,
}

/// Raw output of one simulation run (plus its infinite-capacity replay).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawCounters {
    pub per_class: Vec<ClassCounters>,
    /// Accumulated utility of the run under the configured pricing scheme.
    pub utility_raw: f64,
    /// Utility of the same arrival trace with every admission accepted and
    /// no drops (infinite capacity).
    pub utility_infinite: f64,
    /// Draws per handoff direction, for uniformity checks.
    pub direction_counts: [u64; 6],
    pub events_simulated: u64,
    /// Occupancy of the probed cell at each of its event epochs, when a probe
    /// was requested.
    pub occupancy_histogram: Option<BTreeMap<Vec<u32>, u64>>,
}

/// Derived metrics: blocking/dropping probabilities and normalized utility.
/// Ratios with empty denominators are reported as `None` (not applicable).
#[derive(Debug, Clone)]
pub struct SimMetrics {
    pub raw: RawCounters,
    pub p_cb: Vec<Option<f64>>,
    pub p_hd: Vec<Option<f64>>,
    pub p_cb_aggregate: Option<f64>,
    pub p_hd_aggregate: Option<f64>,
    /// `utility_raw / utility_infinite`; 1 by convention when the trace is
    /// empty (both zero).
    pub normalized_utility: Option<f64>,
}

/// Derives probabilities and normalized utility from raw counters.
pub fn compute_metrics(raw: RawCounters) -> SimMetrics {
    let ratio = |num: u64, den: u64| -> Option<f64> {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };

    let p_cb = raw
        .per_class
        .iter()
        .map(|c| ratio(c.blocked, c.new_arrivals))
        .collect();
    let p_hd = raw
        .per_class
        .iter()
        .map(|c| ratio(c.dropped, c.handoff_attempts))
        .collect();

    let total = |f: fn(&ClassCounters) -> u64| -> u64 { raw.per_class.iter().map(f).sum() };
    let p_cb_aggregate = ratio(total(|c| c.blocked), total(|c| c.new_arrivals));
    let p_hd_aggregate = ratio(total(|c| c.dropped), total(|c| c.handoff_attempts));

    let normalized_utility = if raw.utility_infinite != 0.0 {
        Some(raw.utility_raw / raw.utility_infinite)
    } else if raw.utility_raw == 0.0 {
        Some(1.0)
    } else {
        None
    };

    SimMetrics {
        raw,
        p_cb,
        p_hd,
        p_cb_aggregate,
        p_hd_aggregate,
        normalized_utility,
    }
}

impl SimMetrics {
    /// Checks the per-class conservation identity.
    pub fn conservation_holds(&self) -> bool {
        self.raw.per_class.iter().all(|c| {
            c.new_arrivals == c.blocked + c.completions + c.dropped + c.active_at_horizon
        })
    }
}
