//! Admission policies as the simulator sees them.

use crate::error::SimError;
use crate::model::{
    used_bandwidth, Action, CallEvent, CellState, QosClassSpec, StateSpace, TrafficModel,
};
use crate::nag::{nag_admit, NagConfig, NeighborSnapshot};
use crate::sim::hex::{CellId, HexTopology};
use crate::solver::Policy;

/// Read-only snapshot of the network the moment a decision is made.
pub struct NetworkView<'a> {
    pub topology: &'a HexTopology,
    pub occupancy: &'a [Vec<u32>],
}

impl<'a> NetworkView<'a> {
    pub fn cell_occupancy(&self, cell: CellId) -> &'a [u32] {
        &self.occupancy[cell]
    }

    pub fn neighbors(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        self.topology.neighbors(cell)
    }
}

/// An admission rule. Must be total and must never accept a call that does
/// not fit — the engine aborts the run if it does. Providers are read-only
/// and shared across concurrently running replications, hence `Sync`.
pub trait PolicyProvider: Sync {
    fn name(&self) -> &str;

    /// Decision for `incoming` (a new or handoff arrival) at `cell`.
    fn decide(&self, view: &NetworkView<'_>, cell: CellId, incoming: CallEvent) -> Action;
}

fn fits(occupancy: &[u32], class: usize, classes: &[QosClassSpec], total_channels: u32) -> bool {
    used_bandwidth(occupancy, classes) + u64::from(classes[class].bandwidth)
        <= u64::from(total_channels)
}

/// Admits everything that fits.
pub struct AcceptAllPolicy {
    classes: Vec<QosClassSpec>,
    total_channels: u32,
}

impl AcceptAllPolicy {
    pub fn new(classes: Vec<QosClassSpec>, total_channels: u32) -> Self {
        Self {
            classes,
            total_channels,
        }
    }
}

impl PolicyProvider for AcceptAllPolicy {
    fn name(&self) -> &str {
        "accept-all"
    }

    fn decide(&self, view: &NetworkView<'_>, cell: CellId, incoming: CallEvent) -> Action {
        match incoming.class() {
            Some(class) if fits(view.cell_occupancy(cell), class, &self.classes, self.total_channels) => {
                Action::Accept
            }
            _ => Action::Reject,
        }
    }
}

/// A solved policy table, applied per cell by state lookup.
pub struct MdpTablePolicy {
    name: String,
    space: StateSpace,
    actions: Vec<Action>,
}

impl MdpTablePolicy {
    /// Wraps a solved policy. The table's capacity must match the traffic the
    /// simulation runs under; otherwise lookups would leave the table.
    pub fn new(policy: &Policy, traffic: &TrafficModel) -> Result<Self, SimError> {
        if policy.meta.traffic.total_channels != traffic.total_channels {
            return Err(SimError::InvalidConfig {
                reason: format!(
                    "policy was solved for {} BU but the simulation runs {} BU cells",
                    policy.meta.traffic.total_channels, traffic.total_channels
                ),
            });
        }
        let space = policy.state_space()?;
        Ok(Self {
            name: "mdp".to_string(),
            space,
            actions: policy.actions.clone(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl PolicyProvider for MdpTablePolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, view: &NetworkView<'_>, cell: CellId, incoming: CallEvent) -> Action {
        let state = CellState::new(view.cell_occupancy(cell).to_vec(), incoming);
        match self.space.index_of(&state) {
            Some(idx) => self.actions[idx],
            // Outside the table (cannot happen when capacities match).
            None => Action::Reject,
        }
    }
}

/// The predictive heuristic behind the provider interface.
pub struct NagPolicyProvider {
    config: NagConfig,
    classes: Vec<QosClassSpec>,
    traffic: TrafficModel,
}

impl NagPolicyProvider {
    pub fn new(config: NagConfig, classes: Vec<QosClassSpec>, traffic: TrafficModel) -> Self {
        Self {
            config,
            classes,
            traffic,
        }
    }
}

impl PolicyProvider for NagPolicyProvider {
    fn name(&self) -> &str {
        "nag"
    }

    fn decide(&self, view: &NetworkView<'_>, cell: CellId, incoming: CallEvent) -> Action {
        let neighbor_ids: Vec<CellId> = view.neighbors(cell).collect();
        let snapshots: Vec<NeighborSnapshot<'_>> = neighbor_ids
            .iter()
            .map(|&n| {
                let surrounding_ids: Vec<CellId> = view.neighbors(n).collect();
                let deciding_cell_slot = surrounding_ids
                    .iter()
                    .position(|&m| m == cell)
                    .expect("adjacency is symmetric");
                NeighborSnapshot {
                    occupancy: view.cell_occupancy(n),
                    surrounding: surrounding_ids
                        .iter()
                        .map(|&m| view.cell_occupancy(m))
                        .collect(),
                    deciding_cell_slot,
                }
            })
            .collect();
        nag_admit(
            view.cell_occupancy(cell),
            &snapshots,
            incoming,
            &self.config,
            &self.classes,
            &self.traffic,
        )
    }
}
