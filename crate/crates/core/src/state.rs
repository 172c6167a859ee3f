//! The system state and its records.
//!
//! `SystemState` is a plain value: every operation of the model takes a
//! state and returns a new one. Static attributes (schedule, HM tables,
//! configured priorities) stay in the [`Scenario`] and are looked up from
//! there.

use crate::config::{PortKind, Scenario};
use crate::ids::*;
use crate::types::*;
use std::collections::{BTreeMap, BTreeSet};

/// Why a process in a Waiting-family state is waiting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WaitReason {
    /// Started while its partition is in a start mode; released when the
    /// partition enters NORMAL.
    Normal,
    DelayedStart,
    ReleasePoint,
    TimedWait,
    Resource(Resource),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    QueuingPort(PortId),
    Buffer(BufferId),
    Blackboard(BlackboardId),
    Semaphore(SemaphoreId),
    Event(EventId),
}

/// Holder of a partition's preemption lock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LockHolder {
    /// The initialization flow, which owns the partition in start modes.
    MainFlow,
    Process(ProcessId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionRec {
    pub id: PartitionId,
    pub mode: PartitionMode,
    pub lock_level: u32,
    pub lock_holder: Option<LockHolder>,
    pub error_handler: Option<ProcessId>,
    pub start_condition: StartCondition,
    /// Creation steps already performed by the initialization flow.
    pub init_step: u16,
    /// Errors waiting for the handler (GET_ERROR_STATUS), oldest first.
    pub error_status: Vec<(ErrorCode, Option<ProcessId>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcessRec {
    pub id: ProcessId,
    pub partition: PartitionId,
    pub state: ProcessState,
    pub base_priority: u32,
    pub current_priority: u32,
    pub periodicity: Periodicity,
    pub time_capacity: Duration,
    pub deadline_time: Option<u64>,
    pub release_point: Option<u64>,
    pub delay_time: Option<u64>,
    pub delayed_started: bool,
    pub is_error_handler: bool,
    pub preempted_process: Option<ProcessId>,
    pub wait: Option<WaitReason>,
    /// Tick at which the process last entered Ready; scheduling tie-break.
    pub ready_since: Option<u64>,
    /// Partition whose flow created the process.
    pub created_by: PartitionId,
}

/// A process blocked on a communication object. Senders carry their message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Waiter {
    pub pid: ProcessId,
    pub since: u64,
    pub msg: Option<MessageId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SamplingPortRec {
    pub id: PortId,
    pub direction: Direction,
    pub msgspace: Option<(MessageId, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueuingPortRec {
    pub id: PortId,
    pub direction: Direction,
    pub max_msg_num: u32,
    pub discipline: Discipline,
    pub queue: Vec<(MessageId, u64)>,
    pub waiting: Vec<Waiter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BufferRec {
    pub id: BufferId,
    pub partition: PartitionId,
    pub max_msg_num: u32,
    pub discipline: Discipline,
    pub queue: Vec<(MessageId, u64)>,
    pub waiting: Vec<Waiter>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EmptyIndicator {
    Empty,
    Occupied,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlackboardRec {
    pub id: BlackboardId,
    pub partition: PartitionId,
    pub msgspace: Option<MessageId>,
    pub empty_indicator: EmptyIndicator,
    pub waiting: Vec<Waiter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemaphoreRec {
    pub id: SemaphoreId,
    pub partition: PartitionId,
    pub value: u32,
    pub max_value: u32,
    pub discipline: Discipline,
    pub waiting: Vec<Waiter>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventFlag {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventObjRec {
    pub id: EventId,
    pub partition: PartitionId,
    pub flag: EventFlag,
    pub waiting: Vec<Waiter>,
}

/// Where a queued-mechanism message ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fate {
    /// Somewhere in a port or buffer queue, or held by a blocked sender.
    Queued,
    Delivered,
    /// Legitimately discarded: sender timed out or was stopped, queue
    /// cleared, owner partition restarted.
    Aborted,
}

/// Service call a blocked process is waiting to complete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PendingCall {
    pub service: crate::services::ServiceName,
    pub resource: Option<Resource>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub clock_tick: u64,
    pub need_reschedule: bool,
    pub need_procresch: bool,
    pub current_partition: Option<PartitionId>,
    pub current_process: Option<ProcessId>,
    pub module_shutdown: bool,
    pub partitions: Vec<PartitionRec>,
    pub processes: BTreeMap<ProcessId, ProcessRec>,
    pub sampling_ports: BTreeMap<PortId, SamplingPortRec>,
    pub queuing_ports: BTreeMap<PortId, QueuingPortRec>,
    pub buffers: BTreeMap<BufferId, BufferRec>,
    pub blackboards: BTreeMap<BlackboardId, BlackboardRec>,
    pub semaphores: BTreeMap<SemaphoreId, SemaphoreRec>,
    pub event_objs: BTreeMap<EventId, EventObjRec>,
    pub used_messages: BTreeSet<MessageId>,
    pub fates: BTreeMap<MessageId, Fate>,
    /// Process to (state it moves to, absolute expiry tick).
    pub timeout_trigger: BTreeMap<ProcessId, (ProcessState, u64)>,
    pub pending: BTreeMap<ProcessId, PendingCall>,
}

/// Builds the initial state: every partition in COLD_START holding its own
/// preemption lock, nothing created, scheduling requested.
pub fn new_state(scn: &Scenario) -> SystemState {
    SystemState {
        clock_tick: 0,
        need_reschedule: true,
        need_procresch: false,
        current_partition: None,
        current_process: None,
        module_shutdown: false,
        partitions: scn.partition_ids().map(fresh_partition).collect(),
        processes: BTreeMap::new(),
        sampling_ports: BTreeMap::new(),
        queuing_ports: BTreeMap::new(),
        buffers: BTreeMap::new(),
        blackboards: BTreeMap::new(),
        semaphores: BTreeMap::new(),
        event_objs: BTreeMap::new(),
        used_messages: BTreeSet::new(),
        fates: BTreeMap::new(),
        timeout_trigger: BTreeMap::new(),
        pending: BTreeMap::new(),
    }
}

pub(crate) fn fresh_partition(id: PartitionId) -> PartitionRec {
    PartitionRec {
        id,
        mode: PartitionMode::ColdStart,
        lock_level: 1,
        lock_holder: Some(LockHolder::MainFlow),
        error_handler: None,
        start_condition: StartCondition::NormalStart,
        init_step: 0,
        error_status: Vec::new(),
    }
}

impl SystemState {
    pub fn partition(&self, p: PartitionId) -> &PartitionRec {
        &self.partitions[p.index()]
    }

    pub fn partition_mut(&mut self, p: PartitionId) -> &mut PartitionRec {
        &mut self.partitions[p.index()]
    }

    pub fn process(&self, p: ProcessId) -> Option<&ProcessRec> {
        self.processes.get(&p)
    }

    pub fn processes_of(&self, part: PartitionId) -> impl Iterator<Item = &ProcessRec> {
        self.processes.values().filter(move |p| p.partition == part)
    }

    /// The smallest message id not yet consumed.
    pub fn fresh_message(&self) -> MessageId {
        let mut next = 0;
        for m in &self.used_messages {
            if m.0 != next {
                break;
            }
            next += 1;
        }
        MessageId(next)
    }

    pub fn port_created(&self, port: PortId) -> bool {
        self.sampling_ports.contains_key(&port) || self.queuing_ports.contains_key(&port)
    }

    /// Every place a queued-mechanism message can sit, as (message, place).
    pub fn message_locations(&self) -> Vec<(MessageId, String)> {
        let mut out = Vec::new();
        for (id, p) in &self.queuing_ports {
            out.extend(p.queue.iter().map(|(m, _)| (*m, format!("queue of {id}"))));
            out.extend(p.waiting.iter().filter_map(|w| w.msg.map(|m| (m, format!("sender {} on {id}", w.pid)))));
        }
        for (id, b) in &self.buffers {
            out.extend(b.queue.iter().map(|(m, _)| (*m, format!("queue of {id}"))));
            out.extend(b.waiting.iter().filter_map(|w| w.msg.map(|m| (m, format!("sender {} on {id}", w.pid)))));
        }
        out
    }

    /// The waiter list of a resource, if the object exists.
    pub fn waiters(&self, r: Resource) -> Option<&Vec<Waiter>> {
        match r {
            Resource::QueuingPort(p) => self.queuing_ports.get(&p).map(|x| &x.waiting),
            Resource::Buffer(b) => self.buffers.get(&b).map(|x| &x.waiting),
            Resource::Blackboard(b) => self.blackboards.get(&b).map(|x| &x.waiting),
            Resource::Semaphore(s) => self.semaphores.get(&s).map(|x| &x.waiting),
            Resource::Event(e) => self.event_objs.get(&e).map(|x| &x.waiting),
        }
    }

    pub fn waiters_mut(&mut self, r: Resource) -> Option<&mut Vec<Waiter>> {
        match r {
            Resource::QueuingPort(p) => self.queuing_ports.get_mut(&p).map(|x| &mut x.waiting),
            Resource::Buffer(b) => self.buffers.get_mut(&b).map(|x| &mut x.waiting),
            Resource::Blackboard(b) => self.blackboards.get_mut(&b).map(|x| &mut x.waiting),
            Resource::Semaphore(s) => self.semaphores.get_mut(&s).map(|x| &mut x.waiting),
            Resource::Event(e) => self.event_objs.get_mut(&e).map(|x| &mut x.waiting),
        }
    }

    /// Every resource whose waiter list exists, in canonical order.
    pub fn resources(&self) -> Vec<Resource> {
        let mut out: Vec<Resource> = self.queuing_ports.keys().map(|&p| Resource::QueuingPort(p)).collect();
        out.extend(self.buffers.keys().map(|&b| Resource::Buffer(b)));
        out.extend(self.blackboards.keys().map(|&b| Resource::Blackboard(b)));
        out.extend(self.semaphores.keys().map(|&s| Resource::Semaphore(s)));
        out.extend(self.event_objs.keys().map(|&e| Resource::Event(e)));
        out
    }

    /// Partition owning a resource. Ports are owned by the partition
    /// configured for them.
    pub fn resource_partition(&self, scn: &Scenario, r: Resource) -> PartitionId {
        match r {
            Resource::QueuingPort(p) => scn.port(p).partition,
            Resource::Buffer(b) => scn.buffers[b.index()].partition,
            Resource::Blackboard(b) => scn.blackboards[b.index()].partition,
            Resource::Semaphore(s) => scn.semaphores[s.index()].partition,
            Resource::Event(e) => scn.events[e.index()].partition,
        }
    }
}

/// Effects recorded while an operation runs. The checkers read these to
/// pair concrete steps with abstract events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Note {
    Proc {
        pid: ProcessId,
        from: ProcessState,
        to: ProcessState,
        cause: Cause,
    },
    Mode {
        part: PartitionId,
        from: PartitionMode,
        to: PartitionMode,
    },
    Created(ProcessId),
    Deleted(ProcessId),
    /// A blocked call finished.
    Completed {
        pid: ProcessId,
        code: ReturnCode,
        msg: Option<MessageId>,
    },
    /// A message entered a queued mechanism (port/buffer) or was handed to
    /// a waiting receiver.
    Sent { mech: Mechanism, msg: MessageId, by: ProcessId },
    Received { mech: Mechanism, msg: MessageId, by: ProcessId },
    Displayed { bb: BlackboardId, msg: MessageId },
    HmError {
        code: ErrorCode,
        part: Option<PartitionId>,
        pid: Option<ProcessId>,
        action: String,
    },
    Text(String),
}

/// A queued communication mechanism as seen by the abstract IPC events: a
/// queuing channel (both its ports) or a buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mechanism {
    Channel(ChannelId),
    /// A queuing port with no channel attached.
    Port(PortId),
    Buffer(BufferId),
}

/// Why a process changed state; part of the abstract transition relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cause {
    Start,
    DelayedStart,
    Stop,
    Suspend,
    Resume,
    Schedule,
    Preempt,
    Block,
    Unblock,
    TimeOut,
    Release,
    /// Effect of the partition entering NORMAL.
    ModeNormal,
}

impl Cause {
    pub const ALL: &'static [Cause] = &[
        Cause::Start,
        Cause::DelayedStart,
        Cause::Stop,
        Cause::Suspend,
        Cause::Resume,
        Cause::Schedule,
        Cause::Preempt,
        Cause::Block,
        Cause::Unblock,
        Cause::TimeOut,
        Cause::Release,
        Cause::ModeNormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Cause::Start => "start",
            Cause::DelayedStart => "delayed_start",
            Cause::Stop => "stop",
            Cause::Suspend => "suspend",
            Cause::Resume => "resume",
            Cause::Schedule => "schedule",
            Cause::Preempt => "preempt",
            Cause::Block => "block",
            Cause::Unblock => "unblock",
            Cause::TimeOut => "timeout",
            Cause::Release => "release",
            Cause::ModeNormal => "mode_normal",
        }
    }

    pub fn parse(s: &str) -> Option<Cause> {
        Cause::ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

/// Working context of one operation: the scenario, the state being built
/// and the notes recorded so far.
pub struct Ctx<'a> {
    pub scn: &'a Scenario,
    pub s: SystemState,
    pub notes: Vec<Note>,
    pub toggles: VariantToggles,
}

impl<'a> Ctx<'a> {
    pub fn new(scn: &'a Scenario, s: &SystemState) -> Self {
        Ctx {
            scn,
            s: s.clone(),
            notes: Vec::new(),
            toggles: scn.variants,
        }
    }

    pub fn proc(&self, pid: ProcessId) -> &ProcessRec {
        &self.s.processes[&pid]
    }

    pub fn proc_mut(&mut self, pid: ProcessId) -> &mut ProcessRec {
        self.s.processes.get_mut(&pid).expect("process exists")
    }

    /// Moves a process to a new state and records the step. Maintains the
    /// ready-since stamp: set on entering Ready from a non-running state,
    /// kept across preemption, cleared outside Ready/Running.
    pub fn set_state(&mut self, pid: ProcessId, to: ProcessState, cause: Cause) {
        let clock = self.s.clock_tick;
        let p = self.proc_mut(pid);
        let from = p.state;
        if from == to {
            return;
        }
        p.state = to;
        match to {
            ProcessState::Ready if from != ProcessState::Running => p.ready_since = Some(clock),
            ProcessState::Ready | ProcessState::Running => {}
            _ => p.ready_since = None,
        }
        if !matches!(to, ProcessState::Waiting | ProcessState::WaitandSuspend) {
            p.wait = None;
        }
        if self.s.current_process == Some(pid) && to != ProcessState::Running {
            self.s.current_process = None;
        }
        self.notes.push(Note::Proc { pid, from, to, cause });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(Note::Text(text.into()));
    }

    /// Marks a message consumed and, for queued mechanisms, tracks its fate.
    pub fn consume_message(&mut self, msg: MessageId, tracked: bool) {
        self.s.used_messages.insert(msg);
        if tracked {
            self.s.fates.insert(msg, Fate::Queued);
        }
    }

    pub fn set_fate(&mut self, msg: MessageId, fate: Fate) {
        if let Some(f) = self.s.fates.get_mut(&msg) {
            *f = fate;
        }
    }

    pub fn mechanism_of_port(&self, port: PortId) -> Mechanism {
        match self.scn.port(port).channel {
            Some(c) if self.scn.port(port).kind == PortKind::Queuing => Mechanism::Channel(c),
            _ => Mechanism::Port(port),
        }
    }

    pub fn finish(self) -> (SystemState, Vec<Note>) {
        (self.s, self.notes)
    }
}
