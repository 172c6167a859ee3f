//! Safety invariants (1)–(27) over the system state, plus message
//! conservation for the queued mechanisms.
//!
//! Numbering:
//!
//! | No. | Property |
//! |-----|----------|
//! | 1 | each process is in one partition |
//! | 2 | a partition not in NORMAL has no Ready, Running or Suspend process |
//! | 3 | a partition with a Ready, Running or Suspend process is in NORMAL |
//! | 4 | a NORMAL partition has processes |
//! | 5 | an IDLE partition has no process |
//! | 6 | at most one Running process |
//! | 7 | start modes have a positive lock level |
//! | 8 | a positive lock level has a holder in the partition |
//! | 9 | a lock holder implies a positive lock level |
//! | 10 | a zero lock level implies NORMAL |
//! | 11 | the current process is in the current partition |
//! | 12 | the current partition is not IDLE |
//! | 13 | the current process is Running in a NORMAL partition |
//! | 14 | a delayed-started process has a delay time |
//! | 15 | an aperiodic process has an infinite period |
//! | 16 | a periodic process has a finite period |
//! | 17 | queuing port queues are bounded |
//! | 18 | a queuing port holds at most its maximum number of messages |
//! | 19 | buffer queues are bounded |
//! | 20 | a buffer holds at most its maximum number of messages |
//! | 21 | an OCCUPIED blackboard holds a message |
//! | 22 | a semaphore value does not exceed its maximum |
//! | 23 | waiters of intra-partition objects belong to the object's partition |
//! | 24 | waiters of any communication object are Waiting or WaitandSuspend |
//! | 25 | the error handler has the maximum priority |
//! | 26 | the error handler belongs to its partition |
//! | 27 | the error handler and its creator share a partition |

use crate::config::Scenario;
use crate::state::*;
use crate::types::*;
use std::collections::BTreeMap;
use std::fmt;

pub const INVARIANT_COUNT: u8 = 27;

pub fn describe(n: u8) -> &'static str {
    match n {
        1 => "each process is in one partition",
        2 => "non-NORMAL partition has no Ready/Running/Suspend process",
        3 => "Ready/Running/Suspend processes imply a NORMAL partition",
        4 => "NORMAL partition has processes",
        5 => "IDLE partition has no process",
        6 => "at most one Running process",
        7 => "start modes have lock level > 0",
        8 => "lock level > 0 implies a lock holder",
        9 => "lock holder implies lock level > 0",
        10 => "lock level 0 implies NORMAL",
        11 => "current process is in the current partition",
        12 => "current partition is not IDLE",
        13 => "current process is Running in a NORMAL partition",
        14 => "delayed-started process has a delay time",
        15 => "aperiodic process has infinite period",
        16 => "periodic process has finite period",
        17 => "queuing port queue is bounded",
        18 => "queuing port within its message bound",
        19 => "buffer queue is bounded",
        20 => "buffer within its message bound",
        21 => "OCCUPIED blackboard holds a message",
        22 => "semaphore value within maximum",
        23 => "waiters share the object's partition",
        24 => "waiters are in a Waiting state",
        25 => "error handler has maximum priority",
        26 => "error handler belongs to its partition",
        27 => "error handler and creator share a partition",
        _ => "unknown invariant",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Invariant(u8),
    Conservation(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Invariant(n) => write!(f, "invariant ({n}) {}", describe(*n)),
            Violation::Conservation(detail) => write!(f, "message conservation: {detail}"),
        }
    }
}

/// Numbers of all violated invariants, ascending.
pub fn check_invariants(scn: &Scenario, s: &SystemState) -> Vec<u8> {
    (1..=INVARIANT_COUNT).filter(|&n| !holds(scn, s, n)).collect()
}

/// Evaluates a single invariant.
pub fn holds(scn: &Scenario, s: &SystemState, n: u8) -> bool {
    let procs = || s.processes.values();
    let active = |p: &ProcessRec| {
        matches!(
            p.state,
            ProcessState::Ready | ProcessState::Running | ProcessState::Suspend
        )
    };
    let mode_of = |p: &ProcessRec| s.partitions.get(p.partition.index()).map(|r| r.mode);
    match n {
        1 => s.processes.iter().all(|(id, p)| {
            p.id == *id
                && p.partition.index() < s.partitions.len()
                && id.index() < scn.processes.len()
                && scn.process(*id).partition == p.partition
        }),
        2 => s.partitions.iter().all(|part| {
            part.mode == PartitionMode::Normal || !s.processes_of(part.id).any(active)
        }),
        3 => procs().filter(|p| active(p)).all(|p| mode_of(p) == Some(PartitionMode::Normal)),
        4 => s
            .partitions
            .iter()
            .all(|part| part.mode != PartitionMode::Normal || s.processes_of(part.id).next().is_some()),
        5 => s
            .partitions
            .iter()
            .all(|part| part.mode != PartitionMode::Idle || s.processes_of(part.id).next().is_none()),
        6 => procs().filter(|p| p.state == ProcessState::Running).count() <= 1,
        7 => s.partitions.iter().all(|p| !p.mode.is_start() || p.lock_level > 0),
        8 => s.partitions.iter().all(|part| {
            part.lock_level == 0
                || match part.lock_holder {
                    Some(LockHolder::MainFlow) => true,
                    Some(LockHolder::Process(pid)) => {
                        s.process(pid).is_some_and(|p| p.partition == part.id)
                    }
                    None => false,
                }
        }),
        9 => s
            .partitions
            .iter()
            .all(|p| p.lock_holder.is_none() || p.lock_level > 0),
        10 => s
            .partitions
            .iter()
            .all(|p| p.lock_level > 0 || p.mode == PartitionMode::Normal),
        11 => match (s.current_process, s.current_partition) {
            (Some(pid), Some(part)) => s.process(pid).is_some_and(|p| p.partition == part),
            _ => true,
        },
        12 => s
            .current_partition
            .is_none_or(|p| s.partitions.get(p.index()).is_some_and(|r| r.mode != PartitionMode::Idle)),
        13 => s.current_process.is_none_or(|pid| {
            s.process(pid).is_some_and(|p| {
                p.state == ProcessState::Running && mode_of(p) == Some(PartitionMode::Normal)
            })
        }),
        14 => procs().all(|p| !p.delayed_started || p.delay_time.is_some()),
        15 => procs()
            .filter(|p| !p.periodicity.is_periodic())
            .all(|p| p.periodicity.period() == Duration::Infinite && p.release_point.is_none()),
        16 => procs().all(|p| match p.periodicity {
            Periodicity::Periodic { period } => period > 0,
            Periodicity::Aperiodic => true,
        }),
        17 => s
            .queuing_ports
            .iter()
            .all(|(id, p)| p.max_msg_num > 0 && p.max_msg_num == scn.port(*id).max_msg),
        18 => s
            .queuing_ports
            .values()
            .all(|p| p.queue.len() <= p.max_msg_num as usize),
        19 => s
            .buffers
            .iter()
            .all(|(id, b)| b.max_msg_num > 0 && b.max_msg_num == scn.buffers[id.index()].max_msg),
        20 => s.buffers.values().all(|b| b.queue.len() <= b.max_msg_num as usize),
        21 => s
            .blackboards
            .values()
            .all(|b| b.empty_indicator == EmptyIndicator::Empty || b.msgspace.is_some()),
        22 => s.semaphores.values().all(|x| x.value <= x.max_value),
        23 => {
            let same = |part, ws: &Vec<Waiter>| {
                ws.iter()
                    .all(|w| s.process(w.pid).is_some_and(|p| p.partition == part))
            };
            s.buffers.values().all(|b| same(b.partition, &b.waiting))
                && s.blackboards.values().all(|b| same(b.partition, &b.waiting))
                && s.semaphores.values().all(|b| same(b.partition, &b.waiting))
                && s.event_objs.values().all(|b| same(b.partition, &b.waiting))
        }
        24 => s.resources().into_iter().all(|r| {
            s.waiters(r).unwrap().iter().all(|w| {
                s.process(w.pid).is_some_and(|p| {
                    matches!(p.state, ProcessState::Waiting | ProcessState::WaitandSuspend)
                })
            })
        }),
        25 => procs()
            .filter(|p| p.is_error_handler)
            .all(|p| p.current_priority == scn.max_priority && p.base_priority == scn.max_priority),
        26 => s.partitions.iter().all(|part| {
            part.error_handler.is_none_or(|h| {
                s.process(h)
                    .is_some_and(|p| p.partition == part.id && p.is_error_handler)
            })
        }),
        27 => procs()
            .filter(|p| p.is_error_handler)
            .all(|p| p.created_by == p.partition),
        _ => true,
    }
}

/// Every tracked message is where its fate says: a queued message sits in
/// exactly one queue or sender record, a delivered or aborted message in
/// none. Returns the first discrepancy.
pub fn check_conservation(s: &SystemState) -> Option<String> {
    let mut located: BTreeMap<_, Vec<String>> = BTreeMap::new();
    for (m, place) in s.message_locations() {
        located.entry(m).or_default().push(place);
    }
    for (m, places) in &located {
        match s.fates.get(m) {
            Some(Fate::Queued) if places.len() == 1 => {}
            Some(Fate::Queued) => return Some(format!("{m} present in {} places: {}", places.len(), places.join(", "))),
            Some(f) => return Some(format!("{m} is {f:?} but still in {}", places[0])),
            None => return Some(format!("{m} in {} was never sent", places[0])),
        }
    }
    for (m, fate) in &s.fates {
        if !s.used_messages.contains(m) {
            return Some(format!("{m} tracked but not consumed"));
        }
        if *fate == Fate::Queued && !located.contains_key(m) {
            return Some(format!("{m} was accepted but is in no queue, sender record or delivered set"));
        }
    }
    None
}

/// All violations of a state, invariants first.
pub fn violations(scn: &Scenario, s: &SystemState) -> Vec<Violation> {
    let mut out: Vec<Violation> = check_invariants(scn, s).into_iter().map(Violation::Invariant).collect();
    if let Some(detail) = check_conservation(s) {
        out.push(Violation::Conservation(detail));
    }
    out
}

pub fn validate(scn: &Scenario, s: &SystemState) -> Result<(), Vec<Violation>> {
    let v = violations(scn, s);
    if v.is_empty() { Ok(()) } else { Err(v) }
}
