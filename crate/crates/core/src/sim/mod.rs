//! Discrete-event simulation of a hexagonal network of cells under a
//! pluggable admission policy.

mod engine;
pub mod hex;
mod metrics;
mod provider;

pub use engine::{run_simulation, SimConfig};
pub use hex::{build_hex_topology, handle_boundary_handoff, CellId, HexCell, HexTopology};
pub use metrics::{compute_metrics, ClassCounters, RawCounters, SimMetrics};
pub use provider::{AcceptAllPolicy, MdpTablePolicy, NagPolicyProvider, NetworkView, PolicyProvider};
