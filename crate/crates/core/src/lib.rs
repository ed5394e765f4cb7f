//! Call-admission control for multi-class cellular cells.
//!
//! The crate has four layers:
//!
//! - [`model`] — the single-cell admission MDP: a cell with `N` bandwidth
//!   units carries `K` QoS classes; a state is the per-class occupancy plus
//!   the call event being decided; transitions follow the embedded chain of
//!   the competing exponential clocks (new arrivals, handoff arrivals,
//!   departures).
//! - [`solver`] — value iteration (average-reward and discounted), induced
//!   chain analysis, and the outer fixed-point loop that reconciles a policy
//!   with the handoff pressure it generates at its neighbors.
//! - [`nag`] — a predictive admission heuristic that admits a new call only
//!   if the estimated overload probability at the cell and its neighbors
//!   stays below a target threshold.
//! - [`sim`] — a discrete-event simulator for a hexagonal network of cells
//!   that evaluates any admission policy and reports blocking/dropping
//!   probabilities and normalized utility.

pub mod error;
pub mod model;
pub mod nag;
pub mod sim;
pub mod solver;
