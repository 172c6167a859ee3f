//! Trace lines, one per fired event:
//!
//! ```text
//! tick=<n> event=<name> part=<id> proc=<id> detail=<...>
//! ```
//!
//! Partitions and processes are printed by their scenario names, `-` when
//! the event has none.

use crate::config::{Caller, Scenario};
use crate::ids::*;
use crate::pipeline::{Event, Step};
use crate::state::*;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub tick: u64,
    pub event: &'static str,
    pub part: Option<String>,
    pub proc: Option<String>,
    pub detail: String,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tick={} event={} part={} proc={} detail={}",
            self.tick,
            self.event,
            self.part.as_deref().unwrap_or("-"),
            self.proc.as_deref().unwrap_or("-"),
            if self.detail.is_empty() { "-" } else { &self.detail }
        )
    }
}

fn subject(scn: &Scenario, s: &SystemState, ev: &Event) -> (Option<PartitionId>, Option<ProcessId>) {
    match ev {
        Event::Release(p) | Event::DeadlineMiss(p) => (Some(scn.process(*p).partition), Some(*p)),
        Event::InitAuto(part) | Event::InitStep(part) => (Some(*part), None),
        Event::Call(c) => match c.caller {
            Caller::Process(p) => (Some(scn.process(p).partition), Some(p)),
            Caller::Main(part) => (Some(part), None),
        },
        _ => (s.current_partition, s.current_process),
    }
}

impl TraceLine {
    /// A line for an event that did not produce a step.
    pub fn event(scn: &Scenario, s: &SystemState, ev: &Event, detail: String) -> TraceLine {
        let (part, proc) = subject(scn, s, ev);
        let detail = match ev {
            Event::Call(c) => format!("{} {detail}", c.request.describe(scn)),
            _ => detail,
        };
        TraceLine {
            tick: s.clock_tick,
            event: ev.name(),
            part: part.map(|p| scn.partition_name(p).to_string()),
            proc: proc.map(|p| scn.process_name(p).to_string()),
            detail,
        }
    }

    /// A line for a fired step. Kernel events without an explicit subject
    /// report the partition and process current after the step.
    pub fn from_step(scn: &Scenario, pre: &SystemState, ev: &Event, step: &Step) -> TraceLine {
        let (part, proc) = match ev {
            Event::Tick | Event::TimeOut | Event::PartitionSchedule | Event::ProcessSchedule => {
                (step.state.current_partition, step.state.current_process)
            }
            _ => subject(scn, pre, ev),
        };
        let mut parts = Vec::new();
        if let (Event::Call(c), Some(out)) = (ev, &step.call) {
            let mut head = format!("{} -> {}", c.request.describe(scn), out.return_code);
            if out.blocked.is_some() {
                head.push_str(" blocked");
            }
            for (name, v) in &out.out_values {
                head.push_str(&format!(" {name}={}", v.render(scn)));
            }
            parts.push(head);
        }
        parts.extend(step.notes.iter().map(|n| render_note(scn, n)));
        TraceLine {
            tick: step.state.clock_tick,
            event: ev.name(),
            part: part.map(|p| scn.partition_name(p).to_string()),
            proc: proc.map(|p| scn.process_name(p).to_string()),
            detail: parts.join("; "),
        }
    }
}

pub fn mechanism_name(scn: &Scenario, m: Mechanism) -> String {
    match m {
        Mechanism::Channel(c) => scn.channels[c.index()].name.clone(),
        Mechanism::Port(p) => scn.port(p).name.clone(),
        Mechanism::Buffer(b) => scn.buffers[b.index()].name.clone(),
    }
}

/// Compact rendering of a note for trace details.
pub fn render_note(scn: &Scenario, n: &Note) -> String {
    let pn = |p: ProcessId| scn.process_name(p).to_string();
    match n {
        Note::Proc { pid, from, to, cause } => format!("{}:{from}->{to}({})", pn(*pid), cause.as_str()),
        Note::Mode { part, from, to } => format!("{}:{from}->{to}", scn.partition_name(*part)),
        Note::Created(p) => format!("created {}", pn(*p)),
        Note::Deleted(p) => format!("deleted {}", pn(*p)),
        Note::Completed { pid, code, msg } => match msg {
            Some(m) => format!("{} completes {code} {m}", pn(*pid)),
            None => format!("{} completes {code}", pn(*pid)),
        },
        Note::Sent { mech, msg, by } => format!("{} sent {msg} on {}", pn(*by), mechanism_name(scn, *mech)),
        Note::Received { mech, msg, by } => format!("{} received {msg} from {}", pn(*by), mechanism_name(scn, *mech)),
        Note::Displayed { bb, msg } => format!("{msg} displayed on {}", scn.blackboards[bb.index()].name),
        Note::HmError { code, part, pid, action } => {
            let at = match (pid, part) {
                (Some(p), _) => pn(*p),
                (None, Some(part)) => scn.partition_name(*part).to_string(),
                _ => "module".to_string(),
            };
            format!("hm {code} at {at} -> {action}")
        }
        Note::Text(t) => t.clone(),
    }
}
