//! The discrete-event engine.
//!
//! One replication is a single-threaded run over a global event heap. Each
//! cell owns two named random substreams: `arrivals` drives the Poisson
//! new-call process (inter-arrival gap, class, holding time — drawn together
//! at scheduling time, so the arrival trace is identical whatever the policy
//! decides), and `mobility` drives dwell times, handoff directions and
//! boundary reinjection. Every run is paired with an infinite-capacity replay
//! of the same arrival trace (every admission accepted, no drops) whose
//! utility normalizes the run's own.
//!
//! Utility accounting mirrors the pricing schemes: flat pricing pays the
//! carry reward once per admitted new call and charges the block/drop
//! penalties per event; linear pricing accrues carry reward per second of
//! carriage (the time integral of occupancy) plus the same penalties.
//! Penalties and carry bonuses are attributed to calls that arrive inside
//! the measurement window; carriage is integrated over the window.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};

use crate::error::SimError;
use crate::model::{used_bandwidth, Action, CallEvent, ClassId, PricingScheme, QosClassSpec, TrafficModel};
use crate::sim::hex::{handle_boundary_handoff, CellId, HexTopology};
use crate::sim::metrics::{compute_metrics, ClassCounters, RawCounters, SimMetrics};
use crate::sim::provider::{NetworkView, PolicyProvider};

/// Per-run settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Simulated end time in seconds.
    pub horizon: f64,
    /// Statistics are collected for calls arriving at or after this time.
    pub warmup: f64,
    pub seed: u64,
    /// Whether boundary reinjection may pick the source cell itself.
    pub allow_self_reinjection: bool,
    /// Record the occupancy of this cell at each of its event epochs.
    pub occupancy_probe: Option<CellId>,
}

impl SimConfig {
    pub fn new(horizon: f64, warmup: f64, seed: u64) -> Self {
        Self {
            horizon,
            warmup,
            seed,
            allow_self_reinjection: true,
            occupancy_probe: None,
        }
    }

    fn validate(&self, topology: &HexTopology) -> Result<(), SimError> {
        if !(self.warmup >= 0.0) || !(self.horizon > self.warmup) {
            return Err(SimError::InvalidConfig {
                reason: format!(
                    "need horizon > warmup >= 0, got horizon {} warmup {}",
                    self.horizon, self.warmup
                ),
            });
        }
        if let Some(cell) = self.occupancy_probe {
            if cell >= topology.len() {
                return Err(SimError::InvalidConfig {
                    reason: format!("probe cell {cell} outside topology of {} cells", topology.len()),
                });
            }
        }
        Ok(())
    }
}

/// Runs one replication and its infinite-capacity replay.
pub fn run_simulation(
    topology: &HexTopology,
    provider: &dyn PolicyProvider,
    classes: &[QosClassSpec],
    traffic: &TrafficModel,
    scheme: PricingScheme,
    config: &SimConfig,
) -> Result<SimMetrics, SimError> {
    config.validate(topology)?;
    crate::model::validate_classes(classes)?;
    traffic.validate()?;
    if traffic.class_mix.len() != classes.len() {
        return Err(SimError::InvalidConfig {
            reason: "traffic vectors must have one entry per class".into(),
        });
    }

    let mut raw = Pass::new(topology, Some(provider), classes, traffic, scheme, config).run()?;
    let replay = Pass::new(topology, None, classes, traffic, scheme, config).run()?;
    raw.utility_infinite = replay.utility_raw;
    Ok(compute_metrics(raw))
}

const ARRIVAL_STREAM: u64 = 0;
const MOBILITY_STREAM: u64 = 1;

fn substream(seed: u64, cell: CellId, purpose: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((cell as u64) * 2 + purpose);
    rng
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Arrival {
        cell: CellId,
        class: ClassId,
        holding: f64,
    },
    Departure {
        call: usize,
    },
    Dwell {
        call: usize,
        move_count: u32,
    },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Call {
    class: ClassId,
    cell: CellId,
    moves: u32,
    measured: bool,
}

struct Pass<'a> {
    topology: &'a HexTopology,
    provider: Option<&'a dyn PolicyProvider>,
    classes: &'a [QosClassSpec],
    traffic: &'a TrafficModel,
    scheme: PricingScheme,
    config: &'a SimConfig,

    occupancy: Vec<Vec<u32>>,
    calls: Vec<Option<Call>>,
    heap: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    arrival_rngs: Vec<ChaCha12Rng>,
    mobility_rngs: Vec<ChaCha12Rng>,

    counters: Vec<ClassCounters>,
    utility: f64,
    direction_counts: [u64; 6],
    events: u64,
    histogram: Option<BTreeMap<Vec<u32>, u64>>,

    // Time integral of the carry-reward rate, for linear pricing.
    carriage_rate: f64,
    carriage_accum: f64,
    last_time: f64,
}

impl<'a> Pass<'a> {
    fn new(
        topology: &'a HexTopology,
        provider: Option<&'a dyn PolicyProvider>,
        classes: &'a [QosClassSpec],
        traffic: &'a TrafficModel,
        scheme: PricingScheme,
        config: &'a SimConfig,
    ) -> Self {
        let cells = topology.len();
        let k = classes.len();
        // The replay never consults the probe; it only needs utility.
        let histogram = if provider.is_some() {
            config.occupancy_probe.map(|_| BTreeMap::new())
        } else {
            None
        };
        Self {
            topology,
            provider,
            classes,
            traffic,
            scheme,
            config,
            occupancy: vec![vec![0; k]; cells],
            calls: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            arrival_rngs: (0..cells)
                .map(|c| substream(config.seed, c, ARRIVAL_STREAM))
                .collect(),
            mobility_rngs: (0..cells)
                .map(|c| substream(config.seed, c, MOBILITY_STREAM))
                .collect(),
            counters: vec![ClassCounters::default(); k],
            utility: 0.0,
            direction_counts: [0; 6],
            events: 0,
            histogram,
            carriage_rate: 0.0,
            carriage_accum: 0.0,
            last_time: 0.0,
        }
    }

    fn unlimited(&self) -> bool {
        self.provider.is_none()
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Scheduled { time, seq, kind }));
    }

    fn exp_gap(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
        Exp::new(rate).expect("positive rate").sample(rng)
    }

    /// Draws the next arrival of a cell from its arrival substream: gap,
    /// class, holding time — always in this order, so the trace does not
    /// depend on admission decisions.
    fn schedule_next_arrival(&mut self, cell: CellId, now: f64) {
        if self.traffic.arrival_rate <= 0.0 {
            return;
        }
        let rng = &mut self.arrival_rngs[cell];
        let gap = Self::exp_gap(rng, self.traffic.arrival_rate);
        let class = {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = self.traffic.class_mix.len() - 1;
            for (i, &p) in self.traffic.class_mix.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let holding = Self::exp_gap(rng, self.traffic.holding_rates[class].max(f64::MIN_POSITIVE));
        self.push(now + gap, EventKind::Arrival { cell, class, holding });
    }

    fn accrue_carriage(&mut self, now: f64) {
        if self.scheme == PricingScheme::Linear && self.carriage_rate != 0.0 {
            let lo = self.last_time.max(self.config.warmup);
            let hi = now.min(self.config.horizon);
            if hi > lo {
                self.carriage_accum += self.carriage_rate * (hi - lo);
            }
        }
        self.last_time = now;
    }

    fn probe(&mut self, cell: CellId, time: f64) {
        if time < self.config.warmup {
            return;
        }
        if self.config.occupancy_probe == Some(cell) {
            if let Some(hist) = self.histogram.as_mut() {
                *hist.entry(self.occupancy[cell].clone()).or_insert(0) += 1;
            }
        }
    }

    fn decide(&self, cell: CellId, incoming: CallEvent) -> Action {
        match self.provider {
            None => Action::Accept,
            Some(provider) => provider.decide(
                &NetworkView {
                    topology: self.topology,
                    occupancy: &self.occupancy,
                },
                cell,
                incoming,
            ),
        }
    }

    /// Feasibility guard on provider accepts; the replay skips it.
    fn enforce_feasible(&self, cell: CellId, class: ClassId, kind: &str) -> Result<(), SimError> {
        if self.unlimited() {
            return Ok(());
        }
        let used = used_bandwidth(&self.occupancy[cell], self.classes);
        let needed = self.classes[class].bandwidth;
        if used + u64::from(needed) > u64::from(self.traffic.total_channels) {
            return Err(SimError::ProviderInvariantViolation {
                policy: self.provider.map(|p| p.name().to_string()).unwrap_or_default(),
                kind: kind.to_string(),
                class_index: self.classes[class].index,
                cell,
                used,
                total: self.traffic.total_channels,
                needed,
            });
        }
        Ok(())
    }

    fn admit(&mut self, cell: CellId, class: ClassId, end: f64, measured: bool, now: f64) {
        self.occupancy[cell][class] += 1;
        self.carriage_rate += self.classes[class].reward_carry;
        let id = self.calls.len();
        self.calls.push(Some(Call {
            class,
            cell,
            moves: 0,
            measured,
        }));
        self.push(end, EventKind::Departure { call: id });
        // Location only matters while capacity is finite; the replay skips
        // mobility entirely (it cannot change utility there).
        if !self.unlimited() && self.traffic.handoff_rate_per_call > 0.0 {
            let dwell = Self::exp_gap(&mut self.mobility_rngs[cell], self.traffic.handoff_rate_per_call);
            self.push(now + dwell, EventKind::Dwell { call: id, move_count: 0 });
        }
    }

    fn on_arrival(&mut self, now: f64, cell: CellId, class: ClassId, holding: f64) -> Result<(), SimError> {
        self.events += 1;
        self.probe(cell, now);
        self.schedule_next_arrival(cell, now);

        let measured = now >= self.config.warmup;
        if measured {
            self.counters[class].new_arrivals += 1;
        }

        let action = if self.unlimited() {
            Action::Accept
        } else {
            self.decide(cell, CallEvent::NewArrival(class))
        };
        match action {
            Action::Accept => {
                self.enforce_feasible(cell, class, "new")?;
                self.admit(cell, class, now + holding, measured, now);
                if measured && self.scheme == PricingScheme::Flat {
                    self.utility += self.classes[class].reward_carry;
                }
            }
            Action::Reject => {
                if measured {
                    self.counters[class].blocked += 1;
                    self.utility += self.classes[class].reward_block;
                }
            }
        }
        Ok(())
    }

    fn on_departure(&mut self, now: f64, id: usize) {
        let Some(call) = self.calls[id] else {
            return; // dropped earlier
        };
        self.events += 1;
        self.probe(call.cell, now);
        self.occupancy[call.cell][call.class] -= 1;
        self.carriage_rate -= self.classes[call.class].reward_carry;
        if call.measured {
            self.counters[call.class].completions += 1;
        }
        self.calls[id] = None;
    }

    fn on_dwell(&mut self, now: f64, id: usize, move_count: u32) -> Result<(), SimError> {
        let Some(call) = self.calls[id] else {
            return Ok(()); // call already gone
        };
        if call.moves != move_count {
            return Ok(()); // superseded by a later handoff
        }
        self.events += 1;
        let source = call.cell;
        let class = call.class;

        // Pick one of the six directions; off-grid directions re-enter
        // through a boundary cell chosen proportionally to its deficit.
        let direction = self.mobility_rngs[source].random_range(0..6usize);
        if now >= self.config.warmup {
            self.direction_counts[direction] += 1;
        }
        let destination = match self.topology.cells[source].neighbors[direction] {
            Some(n) => n,
            None => handle_boundary_handoff(
                self.topology,
                source,
                &mut self.mobility_rngs[source],
                self.config.allow_self_reinjection,
            ),
        };

        // The call is in flight: it no longer occupies the source.
        self.occupancy[source][class] -= 1;
        self.probe(destination, now);
        if call.measured {
            self.counters[class].handoff_attempts += 1;
        }

        let action = if self.unlimited() {
            Action::Accept
        } else {
            self.decide(destination, CallEvent::HandoffArrival(class))
        };
        match action {
            Action::Accept => {
                self.enforce_feasible(destination, class, "handoff")?;
                self.occupancy[destination][class] += 1;
                let call = self.calls[id].as_mut().expect("call is active");
                call.cell = destination;
                call.moves += 1;
                let moves = call.moves;
                if self.traffic.handoff_rate_per_call > 0.0 {
                    let dwell = Self::exp_gap(
                        &mut self.mobility_rngs[destination],
                        self.traffic.handoff_rate_per_call,
                    );
                    self.push(now + dwell, EventKind::Dwell { call: id, move_count: moves });
                }
            }
            Action::Reject => {
                self.carriage_rate -= self.classes[class].reward_carry;
                if call.measured {
                    self.counters[class].dropped += 1;
                    self.utility += self.classes[class].reward_drop;
                }
                self.calls[id] = None;
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<RawCounters, SimError> {
        for cell in 0..self.topology.len() {
            self.schedule_next_arrival(cell, 0.0);
        }

        while let Some(Reverse(event)) = self.heap.pop() {
            if event.time > self.config.horizon {
                break;
            }
            self.accrue_carriage(event.time);
            match event.kind {
                EventKind::Arrival { cell, class, holding } => {
                    self.on_arrival(event.time, cell, class, holding)?
                }
                EventKind::Departure { call } => self.on_departure(event.time, call),
                EventKind::Dwell { call, move_count } => {
                    self.on_dwell(event.time, call, move_count)?
                }
            }
        }
        self.accrue_carriage(self.config.horizon);

        for call in self.calls.iter().flatten() {
            if call.measured {
                self.counters[call.class].active_at_horizon += 1;
            }
        }

        let utility_raw = match self.scheme {
            PricingScheme::Flat => self.utility,
            PricingScheme::Linear => self.utility + self.carriage_accum,
        };

        Ok(RawCounters {
            per_class: self.counters,
            utility_raw,
            utility_infinite: 0.0,
            direction_counts: self.direction_counts,
            events_simulated: self.events,
            occupancy_histogram: self.histogram,
        })
    }
}
