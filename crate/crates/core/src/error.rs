//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while constructing or evaluating the admission MDP.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// The class list is empty.
    #[error("model has no QoS classes")]
    NoClasses,

    /// A class violates one of its invariants.
    #[error("QoS class {index}: {reason}")]
    InvalidClass { index: usize, reason: String },

    /// A traffic parameter violates one of its invariants.
    #[error("traffic parameter `{name}`: {reason}")]
    InvalidTraffic { name: &'static str, reason: String },

    /// A quantity that must be strictly positive is zero, so a rate or
    /// expectation cannot be formed.
    #[error("division by zero: {context}")]
    DivisionByZero { context: String },

    /// No event can ever fire from some reachable state: all rates are zero.
    #[error("degenerate model: {reason}")]
    DegenerateModel { reason: String },

    /// `accept` was requested on an arrival that does not fit in the cell.
    #[error(
        "infeasible action: accepting a class-{class_index} call needs {needed} BU \
         but only {free} of {total} BU are free"
    )]
    InfeasibleAction {
        class_index: usize,
        needed: u32,
        free: u32,
        total: u32,
    },

    /// A state fails the state-space invariants (capacity or event admissibility).
    #[error("state not in the state space: {reason}")]
    InvalidState { reason: String },
}

/// Errors raised by the policy solver.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),

    /// Value iteration did not meet its stopping rule within the sweep budget.
    #[error(
        "value iteration did not converge: span {span:.3e} after {sweeps} sweeps \
         (epsilon {epsilon:.1e})"
    )]
    ValueIterationDiverged {
        sweeps: usize,
        span: f64,
        epsilon: f64,
    },

    /// The induced chain has more than one terminal communicating class, so
    /// the stationary distribution is not unique.
    #[error(
        "chain has {count} recurrent classes (e.g. states {first_a} and {first_b} \
         cannot reach each other); stationary distribution is not unique"
    )]
    MultipleRecurrentClasses {
        count: usize,
        first_a: usize,
        first_b: usize,
    },

    /// Power iteration for the stationary distribution did not converge.
    #[error(
        "stationary distribution did not converge: L1 residual {residual:.3e} \
         after {iterations} iterations"
    )]
    StationaryDiverged { iterations: usize, residual: f64 },

    /// The outer fixed-point loop exceeded its iteration budget.
    #[error(
        "fixed-point loop did not converge: step {last_step:.3e} after {iterations} \
         iterations (tolerance {tolerance:.3e})"
    )]
    FixedPointExceeded {
        iterations: usize,
        last_step: f64,
        tolerance: f64,
        /// Per-iteration trace up to the failure, for diagnosis.
        trace: Vec<crate::solver::FixedPointIteration>,
    },

    /// An operation that requires a single QoS class was called with several.
    #[error("operation requires exactly one QoS class, model has {classes}")]
    NotSingleClass { classes: usize },

    /// A transition row is not a probability distribution over the state
    /// space. Raised when solving under the pre-action occupancy
    /// convention, whose boundary departure rows leak mass.
    #[error(
        "state {state} has transition mass {mass:.12} under this occupancy \
         convention; solving requires the post-action convention"
    )]
    SubStochasticRow { state: usize, mass: f64 },

    /// A policy file could not be parsed or fails its consistency checks.
    #[error("policy file: {reason}")]
    PolicyFile { reason: String },
}

/// Errors raised by the discrete-event simulator.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("simulation config: {reason}")]
    InvalidConfig { reason: String },

    /// A policy provider accepted a call that does not fit. The simulation
    /// aborts rather than carry an impossible occupancy.
    #[error(
        "policy `{policy}` accepted an infeasible {kind} call of class {class_index} \
         at cell {cell} (used {used} of {total} BU, call needs {needed})"
    )]
    ProviderInvariantViolation {
        policy: String,
        kind: String,
        class_index: usize,
        cell: usize,
        used: u64,
        total: u32,
        needed: u32,
    },

}
