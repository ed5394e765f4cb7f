//! Plain-text policy export and import.
//!
//! The format is line oriented: a fixed-order header describing the model the
//! policy was solved under, then one `x_1,...,x_K,event,action` row per state
//! in the canonical order. Floats are written in Rust's shortest round-trip
//! form, so export -> import -> export reproduces the file byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::SolverError;
use crate::model::{
    Action, CallEvent, OccupancyConvention, PricingScheme, QosClassSpec, StateSpace, TrafficModel,
};
use crate::solver::{Criterion, DepartureRates, ModelOptions, Policy, PolicyMeta, RewardTiming};

const MAGIC: &str = "cac-policy v1";

fn file_err(reason: impl Into<String>) -> SolverError {
    SolverError::PolicyFile {
        reason: reason.into(),
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn export_policy(policy: &Policy, mut w: impl Write) -> std::io::Result<()> {
    let meta = &policy.meta;
    let traffic = &meta.traffic;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "classes {}", meta.classes.len())?;
    writeln!(w, "channels {}", traffic.total_channels)?;
    for class in &meta.classes {
        writeln!(
            w,
            "class {} {} {} {} {}",
            class.index, class.bandwidth, class.reward_carry, class.reward_block, class.reward_drop
        )?;
    }
    writeln!(w, "lambda {}", traffic.arrival_rate)?;
    writeln!(w, "mix {}", join(&traffic.class_mix))?;
    writeln!(w, "mu {}", join(&traffic.holding_rates))?;
    writeln!(w, "handoff_per_call {}", traffic.handoff_rate_per_call)?;
    writeln!(w, "expected_neighbor_calls {}", join(&traffic.expected_neighbor_calls))?;
    writeln!(w, "scheme {}", meta.options.scheme)?;
    writeln!(w, "convention {}", meta.options.convention)?;
    writeln!(w, "reward_timing {}", meta.options.reward_timing)?;
    writeln!(w, "departure_rates {}", meta.options.departure_rates)?;
    writeln!(w, "criterion {}", meta.criterion)?;

    let space = policy
        .state_space()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    writeln!(w, "states {}", space.len())?;
    for (s, state) in space.states().iter().enumerate() {
        let occ: Vec<String> = state.occupancy.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{},{},{}", occ.join(","), state.event.code(), policy.actions[s])?;
    }
    Ok(())
}

pub fn export_policy_to_path(policy: &Policy, path: impl AsRef<Path>) -> Result<(), SolverError> {
    let file = File::create(path.as_ref())
        .map_err(|e| file_err(format!("cannot create {}: {e}", path.as_ref().display())))?;
    let mut w = BufWriter::new(file);
    export_policy(policy, &mut w).map_err(|e| file_err(format!("write failed: {e}")))?;
    w.flush().map_err(|e| file_err(format!("write failed: {e}")))
}

struct Lines<R> {
    reader: R,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, SolverError> {
        let mut line = String::new();
        let n = self
            .reader
            .read_line(&mut line)
            .map_err(|e| file_err(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(file_err(format!("unexpected end of file after line {}", self.number)));
        }
        self.number += 1;
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    }

    fn keyed(&mut self, key: &str) -> Result<String, SolverError> {
        let line = self.next()?;
        let (head, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
        if head != key {
            return Err(file_err(format!(
                "line {}: expected `{key} ...`, found `{line}`",
                self.number
            )));
        }
        Ok(rest.to_string())
    }
}

fn parse_f64(text: &str, what: &str, line: usize) -> Result<f64, SolverError> {
    text.parse()
        .map_err(|_| file_err(format!("line {line}: bad {what} `{text}`")))
}

fn parse_f64_list(text: &str, what: &str, line: usize, expect: usize) -> Result<Vec<f64>, SolverError> {
    let values: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse).collect();
    let values = values.map_err(|_| file_err(format!("line {line}: bad {what} `{text}`")))?;
    if values.len() != expect {
        return Err(file_err(format!(
            "line {line}: {what} has {} entries, expected {expect}",
            values.len()
        )));
    }
    Ok(values)
}

pub fn import_policy(reader: impl BufRead) -> Result<Policy, SolverError> {
    let mut lines = Lines { reader, number: 0 };

    let magic = lines.next()?;
    if magic != MAGIC {
        return Err(file_err(format!("not a policy file (header `{magic}`)")));
    }
    let k: usize = lines
        .keyed("classes")?
        .parse()
        .map_err(|_| file_err("bad class count"))?;
    if k == 0 {
        return Err(file_err("class count must be positive"));
    }
    let total_channels: u32 = lines
        .keyed("channels")?
        .parse()
        .map_err(|_| file_err("bad channel count"))?;

    let mut classes = Vec::with_capacity(k);
    for _ in 0..k {
        let body = lines.keyed("class")?;
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(file_err(format!(
                "line {}: class lines need `index bandwidth carry block drop`",
                lines.number
            )));
        }
        let index: usize = parts[0]
            .parse()
            .map_err(|_| file_err(format!("line {}: bad class index", lines.number)))?;
        let bandwidth: u32 = parts[1]
            .parse()
            .map_err(|_| file_err(format!("line {}: bad bandwidth", lines.number)))?;
        let carry = parse_f64(parts[2], "carry reward", lines.number)?;
        let block = parse_f64(parts[3], "block penalty", lines.number)?;
        let drop = parse_f64(parts[4], "drop penalty", lines.number)?;
        classes.push(
            QosClassSpec::new(index, bandwidth, carry, block, drop)
                .map_err(|e| file_err(format!("line {}: {e}", lines.number)))?,
        );
    }

    let lambda = parse_f64(&lines.keyed("lambda")?, "lambda", lines.number)?;
    let mix = parse_f64_list(&lines.keyed("mix")?, "mix", lines.number, k)?;
    let mu = parse_f64_list(&lines.keyed("mu")?, "mu", lines.number, k)?;
    let handoff = parse_f64(&lines.keyed("handoff_per_call")?, "handoff rate", lines.number)?;
    let c = parse_f64_list(
        &lines.keyed("expected_neighbor_calls")?,
        "expected neighbor calls",
        lines.number,
        k,
    )?;
    let scheme = match lines.keyed("scheme")?.as_str() {
        "flat" => PricingScheme::Flat,
        "linear" => PricingScheme::Linear,
        other => return Err(file_err(format!("unknown pricing scheme `{other}`"))),
    };
    let convention = match lines.keyed("convention")?.as_str() {
        "post-action" => OccupancyConvention::PostAction,
        "pre-action" => OccupancyConvention::PreActionRates,
        other => return Err(file_err(format!("unknown occupancy convention `{other}`"))),
    };
    let reward_timing = match lines.keyed("reward_timing")?.as_str() {
        "per-event" => RewardTiming::PerEvent,
        "sojourn-weighted" => RewardTiming::SojournWeighted,
        other => return Err(file_err(format!("unknown reward timing `{other}`"))),
    };
    let departure_rates = match lines.keyed("departure_rates")?.as_str() {
        "holding-only" => DepartureRates::HoldingOnly,
        "include-handoff-out" => DepartureRates::IncludeHandoffOut,
        other => return Err(file_err(format!("unknown departure-rate composition `{other}`"))),
    };
    let criterion_text = lines.keyed("criterion")?;
    let criterion = if criterion_text == "average" {
        Criterion::AverageReward
    } else if let Some(gamma) = criterion_text.strip_prefix("discounted ") {
        Criterion::Discounted(parse_f64(gamma, "discount factor", lines.number)?)
    } else {
        return Err(file_err(format!("unknown criterion `{criterion_text}`")));
    };

    let traffic = TrafficModel {
        total_channels,
        arrival_rate: lambda,
        class_mix: mix,
        holding_rates: mu,
        handoff_rate_per_call: handoff,
        expected_neighbor_calls: c,
    };
    traffic
        .validate()
        .map_err(|e| file_err(format!("invalid traffic in header: {e}")))?;

    let state_count: usize = lines
        .keyed("states")?
        .parse()
        .map_err(|_| file_err("bad state count"))?;
    let space = StateSpace::enumerate(&classes, total_channels)
        .map_err(|e| file_err(format!("cannot rebuild state space: {e}")))?;
    if space.len() != state_count {
        return Err(file_err(format!(
            "header says {state_count} states, model has {}",
            space.len()
        )));
    }

    let mut actions = Vec::with_capacity(state_count);
    for (s, expected) in space.states().iter().enumerate() {
        let line = lines.next()?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 2 {
            return Err(file_err(format!(
                "line {}: state rows need {} comma-separated fields",
                lines.number,
                k + 2
            )));
        }
        let mut occupancy = Vec::with_capacity(k);
        for field in &fields[..k] {
            occupancy.push(
                field
                    .parse::<u32>()
                    .map_err(|_| file_err(format!("line {}: bad occupancy `{field}`", lines.number)))?,
            );
        }
        let event = CallEvent::parse_code(fields[k])
            .ok_or_else(|| file_err(format!("line {}: bad event code `{}`", lines.number, fields[k])))?;
        if occupancy != expected.occupancy || event != expected.event {
            return Err(file_err(format!(
                "line {}: state {} out of canonical order (expected {expected}, found row {s})",
                lines.number, line
            )));
        }
        let action = match fields[k + 1] {
            "accept" => Action::Accept,
            "reject" => Action::Reject,
            other => return Err(file_err(format!("line {}: bad action `{other}`", lines.number))),
        };
        if action == Action::Accept && expected.event.is_arrival() && !space.accept_feasible(expected) {
            return Err(file_err(format!(
                "line {}: accept recorded for infeasible state {expected}",
                lines.number
            )));
        }
        actions.push(action);
    }

    Ok(Policy {
        actions,
        meta: PolicyMeta {
            classes,
            traffic,
            options: ModelOptions {
                scheme,
                convention,
                reward_timing,
                departure_rates,
            },
            criterion,
        },
    })
}

pub fn import_policy_from_path(path: impl AsRef<Path>) -> Result<Policy, SolverError> {
    let file = File::open(path.as_ref())
        .map_err(|e| file_err(format!("cannot open {}: {e}", path.as_ref().display())))?;
    import_policy(BufReader::new(file))
}
