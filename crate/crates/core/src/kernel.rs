//! Abstract partition-mode and process-state transitions.
//!
//! The process transition relation is data (`data/transitions.tbl`): each
//! row allows a `(mode class, from, to)` step for a given cause and process
//! kind. Rows are tagged as belonging to the relation as figured in the
//! standard, or only to the augmented relation that also contains the
//! transitions the standard's figure omits.

use crate::config::Scenario;
use crate::ids::*;
use crate::state::*;
use crate::types::*;
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Which abstract process transition relation to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitionModelVariant {
    AsFigured,
    Augmented,
}

impl std::str::FromStr for TransitionModelVariant {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "as_figured" => Ok(TransitionModelVariant::AsFigured),
            "augmented" => Ok(TransitionModelVariant::Augmented),
            _ => Err(UnknownToken {
                kind: "transition model",
                token: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeClass {
    Start,
    Normal,
}

impl ModeClass {
    pub fn of(mode: PartitionMode) -> Option<ModeClass> {
        match mode {
            PartitionMode::ColdStart | PartitionMode::WarmStart => Some(ModeClass::Start),
            PartitionMode::Normal => Some(ModeClass::Normal),
            PartitionMode::Idle => None,
        }
    }
}

impl fmt::Display for ModeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeClass::Start => "COLD/WARM_START",
            ModeClass::Normal => "NORMAL",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KindFilter {
    Periodic,
    Aperiodic,
    Any,
}

impl KindFilter {
    fn admits(self, p: Periodicity) -> bool {
        match self {
            KindFilter::Any => true,
            KindFilter::Periodic => p.is_periodic(),
            KindFilter::Aperiodic => !p.is_periodic(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionEntry {
    pub augmented_only: bool,
    pub mode: ModeClass,
    pub from: ProcessState,
    pub to: ProcessState,
    pub cause: Cause,
    pub kind: KindFilter,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionRelation {
    pub process: Vec<TransitionEntry>,
    pub modes: Vec<(PartitionMode, PartitionMode)>,
}

pub const TRANSITION_TABLE: &str = include_str!("../data/transitions.tbl");

impl TransitionRelation {
    pub fn parse(text: &str) -> Result<TransitionRelation, String> {
        let mut rel = TransitionRelation {
            process: Vec::new(),
            modes: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| format!("transition table line {}: {m}", n + 1);
            match f[0] {
                "proc" if f.len() >= 8 => {
                    let augmented_only = match f[1] {
                        "as_figured" => false,
                        "augmented" => true,
                        _ => return Err(err("bad relation set")),
                    };
                    let mode = match f[2] {
                        "start" => ModeClass::Start,
                        "normal" => ModeClass::Normal,
                        _ => return Err(err("bad mode class")),
                    };
                    let kind = match f[6] {
                        "periodic" => KindFilter::Periodic,
                        "aperiodic" => KindFilter::Aperiodic,
                        "any" => KindFilter::Any,
                        _ => return Err(err("bad kind")),
                    };
                    rel.process.push(TransitionEntry {
                        augmented_only,
                        mode,
                        from: f[3].parse().map_err(|e: UnknownToken| err(&e.to_string()))?,
                        to: f[4].parse().map_err(|e: UnknownToken| err(&e.to_string()))?,
                        cause: Cause::parse(f[5]).ok_or_else(|| err("bad cause"))?,
                        kind,
                        source: f[7..].join(" "),
                    });
                }
                "mode" if f.len() >= 3 => rel.modes.push((
                    f[1].parse().map_err(|e: UnknownToken| err(&e.to_string()))?,
                    f[2].parse().map_err(|e: UnknownToken| err(&e.to_string()))?,
                )),
                _ => return Err(err("unrecognized row")),
            }
        }
        Ok(rel)
    }

    /// The relation shipped with the crate.
    pub fn standard() -> &'static TransitionRelation {
        static REL: OnceLock<TransitionRelation> = OnceLock::new();
        REL.get_or_init(|| TransitionRelation::parse(TRANSITION_TABLE).expect("shipped table parses"))
    }

    pub fn entries(&self, variant: TransitionModelVariant) -> impl Iterator<Item = &TransitionEntry> {
        self.process
            .iter()
            .filter(move |e| variant == TransitionModelVariant::Augmented || !e.augmented_only)
    }

    pub fn allows(
        &self,
        variant: TransitionModelVariant,
        mode: ModeClass,
        from: ProcessState,
        to: ProcessState,
        cause: Cause,
        kind: Periodicity,
    ) -> bool {
        self.entries(variant).any(|e| {
            e.mode == mode && e.from == from && e.to == to && e.cause == cause && e.kind.admits(kind)
        })
    }

    pub fn mode_allowed(&self, from: PartitionMode, to: PartitionMode) -> bool {
        self.modes.contains(&(from, to))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("illegal mode transition {from} -> {to}")]
    IllegalModeTransition { from: PartitionMode, to: PartitionMode },
    #[error("illegal process transition in {mode}: {from} -> {to}")]
    IllegalStateTransition {
        mode: PartitionMode,
        from: ProcessState,
        to: ProcessState,
    },
    #[error("operation not allowed in mode {0}")]
    InvalidMode(PartitionMode),
    #[error("process {0} already exists")]
    DuplicateId(ProcessId),
    #[error("process {0} is not a created process of the partition")]
    UnknownProcess(ProcessId),
}

/// Whether the mode graph has an edge `from -> to`.
pub fn mode_allowed(from: PartitionMode, to: PartitionMode) -> bool {
    TransitionRelation::standard().mode_allowed(from, to)
}

/// Changes a partition's mode with all its effects.
pub fn partition_mode_transition(
    scn: &Scenario,
    s: &SystemState,
    part: PartitionId,
    newmode: PartitionMode,
) -> Result<SystemState, KernelError> {
    let from = s.partition(part).mode;
    if !TransitionRelation::standard().mode_allowed(from, newmode) {
        return Err(KernelError::IllegalModeTransition { from, to: newmode });
    }
    let mut ctx = Ctx::new(scn, s);
    enter_mode(&mut ctx, part, newmode, StartCondition::PartitionRestart);
    Ok(ctx.s)
}

/// Effects of a partition entering `newmode`. The caller checks legality.
pub(crate) fn enter_mode(ctx: &mut Ctx, part: PartitionId, newmode: PartitionMode, condition: StartCondition) {
    let from = ctx.s.partition(part).mode;
    ctx.notes.push(Note::Mode {
        part,
        from,
        to: newmode,
    });
    if newmode == PartitionMode::Normal {
        enter_normal(ctx, part);
    } else {
        reset_partition(ctx, part, newmode, condition);
    }
}

fn enter_normal(ctx: &mut Ctx, part: PartitionId) {
    let clock = ctx.s.clock_tick;
    {
        let rec = ctx.s.partition_mut(part);
        rec.mode = PartitionMode::Normal;
        rec.lock_level = 0;
        rec.lock_holder = None;
    }
    let pids: Vec<ProcessId> = ctx.s.processes_of(part).map(|p| p.id).collect();
    for pid in pids {
        let p = ctx.proc(pid).clone();
        let suspended = p.state == ProcessState::WaitandSuspend;
        let delay = match p.wait {
            Some(WaitReason::Normal) => 0,
            Some(WaitReason::DelayedStart) => p.delay_time.unwrap_or(0),
            _ => continue,
        };
        if p.periodicity.is_periodic() {
            crate::sched::start_periodic_timing(ctx, pid, delay);
            continue;
        }
        let deadline = p.time_capacity.ticks().map(|c| clock + delay + c);
        ctx.proc_mut(pid).deadline_time = deadline;
        let woken = if suspended { ProcessState::Suspend } else { ProcessState::Ready };
        if delay == 0 {
            ctx.set_state(pid, woken, Cause::ModeNormal);
        } else {
            ctx.s.timeout_trigger.insert(pid, (woken, clock + delay));
        }
    }
    ctx.s.need_procresch = true;
}

/// Restart or idle: the partition loses every process and intra-partition
/// object and goes back to its initialization flow.
fn reset_partition(ctx: &mut Ctx, part: PartitionId, mode: PartitionMode, condition: StartCondition) {
    let pids: Vec<ProcessId> = ctx.s.processes_of(part).map(|p| p.id).collect();
    for pid in pids {
        crate::ipc::purge_process(ctx, pid);
        ctx.s.processes.remove(&pid);
        ctx.notes.push(Note::Deleted(pid));
        if ctx.s.current_process == Some(pid) {
            ctx.s.current_process = None;
        }
    }
    crate::ipc::delete_partition_objects(ctx, part);
    let rec = ctx.s.partition_mut(part);
    *rec = fresh_partition(part);
    rec.mode = mode;
    rec.start_condition = condition;
    if ctx.s.current_partition == Some(part) {
        if mode == PartitionMode::Idle {
            ctx.s.current_partition = None;
        }
        ctx.s.need_procresch = true;
    }
}

/// Moves one process along the abstract relation, changing nothing else.
pub fn process_state_transition(
    scn: &Scenario,
    s: &SystemState,
    part: PartitionId,
    proc: ProcessId,
    newstate: ProcessState,
    cause: Cause,
    variant: TransitionModelVariant,
) -> Result<SystemState, KernelError> {
    let p = s
        .process(proc)
        .filter(|p| p.partition == part)
        .ok_or(KernelError::UnknownProcess(proc))?;
    let mode = s.partition(part).mode;
    let class = ModeClass::of(mode).ok_or(KernelError::InvalidMode(mode))?;
    if !TransitionRelation::standard().allows(variant, class, p.state, newstate, cause, p.periodicity) {
        return Err(KernelError::IllegalStateTransition {
            mode,
            from: p.state,
            to: newstate,
        });
    }
    let _ = scn;
    let mut next = s.clone();
    next.processes.get_mut(&proc).unwrap().state = newstate;
    Ok(next)
}

/// Instantiates a configured process in Dormant.
pub fn create_process(scn: &Scenario, s: &SystemState, part: PartitionId, proc: ProcessId) -> Result<SystemState, KernelError> {
    let mode = s.partition(part).mode;
    if !mode.is_start() {
        return Err(KernelError::InvalidMode(mode));
    }
    if s.processes.contains_key(&proc) {
        return Err(KernelError::DuplicateId(proc));
    }
    if proc.index() >= scn.processes.len() || scn.process(proc).partition != part {
        return Err(KernelError::UnknownProcess(proc));
    }
    let mut ctx = Ctx::new(scn, s);
    insert_process(&mut ctx, proc, part);
    Ok(ctx.s)
}

pub(crate) fn insert_process(ctx: &mut Ctx, proc: ProcessId, creator: PartitionId) {
    let cfg = ctx.scn.process(proc);
    let rec = ProcessRec {
        id: proc,
        partition: cfg.partition,
        state: ProcessState::Dormant,
        base_priority: cfg.priority,
        current_priority: cfg.priority,
        periodicity: cfg.periodicity,
        time_capacity: cfg.capacity,
        deadline_time: None,
        release_point: None,
        delay_time: None,
        delayed_started: false,
        is_error_handler: cfg.is_handler,
        preempted_process: None,
        wait: None,
        ready_since: None,
        created_by: creator,
    };
    ctx.s.processes.insert(proc, rec);
    ctx.notes.push(Note::Created(proc));
}

/// A value bound to an abstract event parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Partition(PartitionId),
    Process(ProcessId),
    Mode(PartitionMode),
    State(ProcessState),
    Cause(Cause),
}

pub type Bindings = Vec<(&'static str, Value)>;

fn bound<T>(b: &Bindings, name: &str, pick: impl Fn(Value) -> Option<T>) -> Option<T> {
    b.iter().find(|(n, _)| *n == name).and_then(|(_, v)| pick(*v))
}

type Guard = fn(&Scenario, &SystemState, &Bindings, TransitionModelVariant) -> bool;
type Action = fn(&Scenario, &SystemState, &Bindings, TransitionModelVariant) -> SystemState;

/// A named guarded event of the abstract machine.
pub struct GuardActionEvent {
    pub name: &'static str,
    pub params: &'static [(&'static str, &'static str)],
    pub guard: Guard,
    pub action: Action,
}

fn b_part(b: &Bindings) -> PartitionId {
    bound(b, "part", |v| if let Value::Partition(p) = v { Some(p) } else { None }).expect("part bound")
}

fn b_proc(b: &Bindings) -> ProcessId {
    bound(b, "proc", |v| if let Value::Process(p) = v { Some(p) } else { None }).expect("proc bound")
}

/// The abstract events with finite parameter domains.
pub fn abstract_events() -> &'static [GuardActionEvent] {
    const EVENTS: &[GuardActionEvent] = &[
        GuardActionEvent {
            name: "partition_mode_transition",
            params: &[("part", "PARTITIONS"), ("newmode", "PARTITION_MODES")],
            guard: |_, s, b, _| {
                let newmode = bound(b, "newmode", |v| if let Value::Mode(m) = v { Some(m) } else { None }).unwrap();
                TransitionRelation::standard().mode_allowed(s.partition(b_part(b)).mode, newmode)
            },
            action: |scn, s, b, _| {
                let newmode = bound(b, "newmode", |v| if let Value::Mode(m) = v { Some(m) } else { None }).unwrap();
                partition_mode_transition(scn, s, b_part(b), newmode).expect("guard checked")
            },
        },
        GuardActionEvent {
            name: "process_state_transition",
            params: &[
                ("part", "PARTITIONS"),
                ("proc", "processes"),
                ("newstate", "PROCESS_STATES"),
                ("cause", "CAUSES"),
            ],
            guard: |scn, s, b, v| {
                let ns = bound(b, "newstate", |x| if let Value::State(st) = x { Some(st) } else { None }).unwrap();
                let c = bound(b, "cause", |x| if let Value::Cause(c) = x { Some(c) } else { None }).unwrap();
                process_state_transition(scn, s, b_part(b), b_proc(b), ns, c, v).is_ok()
            },
            action: |scn, s, b, v| {
                let ns = bound(b, "newstate", |x| if let Value::State(st) = x { Some(st) } else { None }).unwrap();
                let c = bound(b, "cause", |x| if let Value::Cause(c) = x { Some(c) } else { None }).unwrap();
                process_state_transition(scn, s, b_part(b), b_proc(b), ns, c, v).expect("guard checked")
            },
        },
        GuardActionEvent {
            name: "create_process",
            params: &[("part", "PARTITIONS"), ("proc", "PROCESSES")],
            guard: |scn, s, b, _| create_process(scn, s, b_part(b), b_proc(b)).is_ok(),
            action: |scn, s, b, _| create_process(scn, s, b_part(b), b_proc(b)).expect("guard checked"),
        },
    ];
    EVENTS
}

/// Every (event, bindings) pair whose guard holds, enumerating each
/// parameter over its finite domain in canonical order.
pub fn enabled_abstract_events(
    scn: &Scenario,
    s: &SystemState,
    variant: TransitionModelVariant,
) -> Vec<(&'static str, Bindings)> {
    let mut out = Vec::new();
    for ev in abstract_events() {
        for b in domain(scn, s, ev.name) {
            if (ev.guard)(scn, s, &b, variant) {
                out.push((ev.name, b));
            }
        }
    }
    out
}

fn domain(scn: &Scenario, s: &SystemState, event: &str) -> Vec<Bindings> {
    let mut out = Vec::new();
    match event {
        "partition_mode_transition" => {
            for part in scn.partition_ids() {
                for &m in PartitionMode::ALL {
                    out.push(vec![("part", Value::Partition(part)), ("newmode", Value::Mode(m))]);
                }
            }
        }
        "process_state_transition" => {
            for part in scn.partition_ids() {
                for pid in s.processes.keys() {
                    for &st in ProcessState::ALL {
                        for &c in Cause::ALL {
                            out.push(vec![
                                ("part", Value::Partition(part)),
                                ("proc", Value::Process(*pid)),
                                ("newstate", Value::State(st)),
                                ("cause", Value::Cause(c)),
                            ]);
                        }
                    }
                }
            }
        }
        "create_process" => {
            for part in scn.partition_ids() {
                for pid in scn.process_ids() {
                    out.push(vec![("part", Value::Partition(part)), ("proc", Value::Process(pid))]);
                }
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_parses() {
        let rel = TransitionRelation::standard();
        assert!(rel.process.len() > 20);
        assert_eq!(rel.process.iter().filter(|e| e.augmented_only).count(), 3);
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(TransitionRelation::parse("proc maybe start Dormant Waiting start any x").is_err());
        assert!(TransitionRelation::parse("mode NORMAL SIDEWAYS").is_err());
    }
}
