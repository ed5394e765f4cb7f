//! State-space enumeration and indexing.

use std::collections::HashMap;

use crate::error::ModelError;
use crate::model::{used_bandwidth, CallEvent, CellState, QosClassSpec};

/// The enumerated state space of one cell, with a stable canonical order.
///
/// States are ordered lexicographically by occupancy vector, and within one
/// occupancy by event: `n`, then new arrivals, handoff arrivals, and
/// departures in class order. Departure events are enumerated only for
/// classes with at least one active call. The order is deterministic, so
/// state indices are stable across runs and exported policy tables diff
/// cleanly.
#[derive(Debug, Clone)]
pub struct StateSpace {
    classes: Vec<QosClassSpec>,
    total_channels: u32,
    states: Vec<CellState>,
    index: HashMap<CellState, usize>,
    empty_no_event: usize,
}

impl StateSpace {
    pub fn enumerate(classes: &[QosClassSpec], total_channels: u32) -> Result<Self, ModelError> {
        enumerate_states(classes, total_channels)
    }

    pub fn classes(&self) -> &[QosClassSpec] {
        &self.classes
    }

    pub fn total_channels(&self) -> u32 {
        self.total_channels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &CellState {
        &self.states[index]
    }

    /// Canonical index of a state, if it belongs to the space.
    pub fn index_of(&self, state: &CellState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn contains(&self, state: &CellState) -> bool {
        self.index.contains_key(state)
    }

    /// Index of the all-empty, no-event state (always present).
    pub fn empty_no_event_index(&self) -> usize {
        self.empty_no_event
    }

    /// Bandwidth in use for an occupancy vector.
    pub fn used_bandwidth(&self, occupancy: &[u32]) -> u64 {
        used_bandwidth(occupancy, &self.classes)
    }

    /// Whether `accept` is a legal action in this state: the event must be an
    /// arrival whose bandwidth still fits.
    pub fn accept_feasible(&self, state: &CellState) -> bool {
        match state.event {
            CallEvent::NewArrival(i) | CallEvent::HandoffArrival(i) => {
                self.used_bandwidth(&state.occupancy) + u64::from(self.classes[i].bandwidth)
                    <= u64::from(self.total_channels)
            }
            _ => false,
        }
    }
}

/// Enumerates every state of the cell: each occupancy vector satisfying the
/// capacity constraint, paired with every admissible event.
pub fn enumerate_states(
    classes: &[QosClassSpec],
    total_channels: u32,
) -> Result<StateSpace, ModelError> {
    crate::model::validate_classes(classes)?;
    if total_channels < 1 {
        return Err(ModelError::DegenerateModel {
            reason: "cell capacity must be at least 1 BU".into(),
        });
    }

    let k = classes.len();
    let mut occupancies: Vec<Vec<u32>> = Vec::new();
    let mut current = vec![0u32; k];
    fill_occupancies(classes, total_channels, 0, 0, &mut current, &mut occupancies);

    let mut states = Vec::new();
    for occ in &occupancies {
        states.push(CellState::new(occ.clone(), CallEvent::None));
        for i in 0..k {
            states.push(CellState::new(occ.clone(), CallEvent::NewArrival(i)));
        }
        for i in 0..k {
            states.push(CellState::new(occ.clone(), CallEvent::HandoffArrival(i)));
        }
        for i in 0..k {
            if occ[i] > 0 {
                states.push(CellState::new(occ.clone(), CallEvent::Departure(i)));
            }
        }
    }

    let mut index = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
    }
    let empty_no_event = index[&CellState::new(vec![0; k], CallEvent::None)];

    Ok(StateSpace {
        classes: classes.to_vec(),
        total_channels,
        states,
        index,
        empty_no_event,
    })
}

fn fill_occupancies(
    classes: &[QosClassSpec],
    total: u32,
    class: usize,
    used: u64,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if class == classes.len() {
        out.push(current.clone());
        return;
    }
    let b = u64::from(classes[class].bandwidth);
    let max = (u64::from(total) - used) / b;
    for x in 0..=max {
        current[class] = x as u32;
        fill_occupancies(classes, total, class + 1, used + x * b, current, out);
    }
    current[class] = 0;
}
