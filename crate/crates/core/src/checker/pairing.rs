//! The refinement pairing table (`data/pairings.tbl`).

use crate::pipeline::Event;
use crate::services::ServiceName;
use crate::state::Note;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub const DEFAULT_PAIRING: &str = include_str!("../../data/pairings.tbl");

/// Kernel events named in the pairing table.
pub const KERNEL_EVENTS: &[&str] = &[
    "ticktock",
    "time_out",
    "periodicproc_reach_releasepoint",
    "deadline_miss",
    "partition_schedule",
    "process_schedule",
    "init",
    "init_step",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractEvent {
    PartitionModeTransition,
    ProcessStateTransition,
    CreateProcess,
    IpcSend,
    IpcReceive,
    BbDisplay,
    HmError,
}

impl AbstractEvent {
    const ALL: &'static [AbstractEvent] = &[
        AbstractEvent::PartitionModeTransition,
        AbstractEvent::ProcessStateTransition,
        AbstractEvent::CreateProcess,
        AbstractEvent::IpcSend,
        AbstractEvent::IpcReceive,
        AbstractEvent::BbDisplay,
        AbstractEvent::HmError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AbstractEvent::PartitionModeTransition => "partition_mode_transition",
            AbstractEvent::ProcessStateTransition => "process_state_transition",
            AbstractEvent::CreateProcess => "create_process",
            AbstractEvent::IpcSend => "ipc_send",
            AbstractEvent::IpcReceive => "ipc_receive",
            AbstractEvent::BbDisplay => "bb_display",
            AbstractEvent::HmError => "hm_error",
        }
    }

    /// The abstract event a recorded effect belongs to.
    pub fn of_note(n: &Note) -> Option<AbstractEvent> {
        match n {
            Note::Proc { .. } => Some(AbstractEvent::ProcessStateTransition),
            Note::Mode { .. } | Note::Deleted(_) => Some(AbstractEvent::PartitionModeTransition),
            Note::Created(_) => Some(AbstractEvent::CreateProcess),
            Note::Sent { .. } => Some(AbstractEvent::IpcSend),
            Note::Received { .. } => Some(AbstractEvent::IpcReceive),
            Note::Displayed { .. } => Some(AbstractEvent::BbDisplay),
            Note::HmError { .. } => Some(AbstractEvent::HmError),
            Note::Completed { .. } | Note::Text(_) => None,
        }
    }
}

impl fmt::Display for AbstractEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PairingError {
    #[error("pairing line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("pairing has no row for `{0}`")]
    Missing(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pairing {
    rows: BTreeMap<String, BTreeSet<AbstractEvent>>,
}

/// Pairing-table name of a concrete event.
pub fn concrete_name(ev: &Event) -> &'static str {
    match ev {
        Event::Call(c) => c.request.service().as_str(),
        other => other.name(),
    }
}

impl Pairing {
    pub fn parse(text: &str) -> Result<Pairing, PairingError> {
        let mut rows = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PairingError::Syntax { line: n + 1, msg };
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| err("expected `<event> = <abstract events>`".into()))?;
            let concrete = lhs.trim();
            let known = KERNEL_EVENTS.contains(&concrete) || concrete.parse::<ServiceName>().is_ok();
            if !known {
                return Err(err(format!("unknown concrete event `{concrete}`")));
            }
            let mut set = BTreeSet::new();
            for tok in rhs.split_whitespace() {
                if tok == "skip" {
                    continue;
                }
                let a = AbstractEvent::ALL
                    .iter()
                    .copied()
                    .find(|a| a.as_str() == tok)
                    .ok_or_else(|| err(format!("unknown abstract event `{tok}`")))?;
                set.insert(a);
            }
            let key = match concrete.parse::<ServiceName>() {
                Ok(s) => s.as_str().to_string(),
                Err(_) => concrete.to_string(),
            };
            if rows.insert(key, set).is_some() {
                return Err(err(format!("duplicate row for `{concrete}`")));
            }
        }
        let pairing = Pairing { rows };
        for name in KERNEL_EVENTS.iter().copied().chain(ServiceName::ALL.iter().map(|s| s.as_str())) {
            if !pairing.rows.contains_key(name) {
                return Err(PairingError::Missing(name.to_string()));
            }
        }
        Ok(pairing)
    }

    pub fn default_table() -> Pairing {
        Pairing::parse(DEFAULT_PAIRING).expect("shipped pairing parses")
    }

    pub fn allows(&self, concrete: &str, a: AbstractEvent) -> bool {
        self.rows.get(concrete).is_some_and(|set| set.contains(&a))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeSet<AbstractEvent>)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The table in its file syntax, one row per concrete event.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.rows {
            let rhs: Vec<&str> = v.iter().map(|a| a.as_str()).collect();
            let rhs = if rhs.is_empty() { "skip".to_string() } else { rhs.join(" ") };
            out.push_str(&format!("{k:<32} = {rhs}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_covers_every_event() {
        let p = Pairing::default_table();
        assert_eq!(p.rows().count(), KERNEL_EVENTS.len() + 57);
        assert!(p.allows("RESUME", AbstractEvent::ProcessStateTransition));
        assert!(!p.allows("GET_TIME", AbstractEvent::ProcessStateTransition));
    }

    #[test]
    fn missing_rows_are_rejected() {
        assert_eq!(
            Pairing::parse("ticktock = skip\n").unwrap_err(),
            PairingError::Missing("time_out".into())
        );
        assert!(matches!(
            Pairing::parse("bogus = skip\n"),
            Err(PairingError::Syntax { line: 1, .. })
        ));
    }
}
