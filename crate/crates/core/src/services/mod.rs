//! The APEX service layer of ARINC 653 Part 1.
//!
//! Every service has an error part and a normal part. The error clauses are
//! evaluated in order and the first that matches returns its code with the
//! state untouched; otherwise the normal part runs atomically. Blocking
//! calls leave a pending record and complete later with NO_ERROR or
//! TIMED_OUT.

mod comm;
mod health;
mod menu;
mod partition;
mod process;
mod time;

pub use menu::{main_candidates, process_candidates};

use crate::config::{Caller, Scenario};
use crate::ids::*;
use crate::state::*;
use crate::types::*;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

crate::types::text_enum!(
    /// The service catalog.
    ServiceName, "service" {
    GetPartitionStatus => "GET_PARTITION_STATUS",
    SetPartitionMode => "SET_PARTITION_MODE",
    CreateProcess => "CREATE_PROCESS",
    SetPriority => "SET_PRIORITY",
    SuspendSelf => "SUSPEND_SELF",
    Suspend => "SUSPEND",
    Resume => "RESUME",
    StopSelf => "STOP_SELF",
    Stop => "STOP",
    Start => "START",
    DelayedStart => "DELAYED_START",
    LockPreemption => "LOCK_PREEMPTION",
    UnlockPreemption => "UNLOCK_PREEMPTION",
    GetMyId => "GET_MY_ID",
    GetProcessId => "GET_PROCESS_ID",
    GetProcessStatus => "GET_PROCESS_STATUS",
    TimedWait => "TIMED_WAIT",
    PeriodicWait => "PERIODIC_WAIT",
    GetTime => "GET_TIME",
    Replenish => "REPLENISH",
    CreateSamplingPort => "CREATE_SAMPLING_PORT",
    WriteSamplingMessage => "WRITE_SAMPLING_MESSAGE",
    ReadSamplingMessage => "READ_SAMPLING_MESSAGE",
    GetSamplingPortId => "GET_SAMPLING_PORT_ID",
    GetSamplingPortStatus => "GET_SAMPLING_PORT_STATUS",
    CreateQueuingPort => "CREATE_QUEUING_PORT",
    SendQueuingMessage => "SEND_QUEUING_MESSAGE",
    ReceiveQueuingMessage => "RECEIVE_QUEUING_MESSAGE",
    GetQueuingPortId => "GET_QUEUING_PORT_ID",
    GetQueuingPortStatus => "GET_QUEUING_PORT_STATUS",
    ClearQueuingPort => "CLEAR_QUEUING_PORT",
    CreateBuffer => "CREATE_BUFFER",
    SendBuffer => "SEND_BUFFER",
    ReceiveBuffer => "RECEIVE_BUFFER",
    GetBufferId => "GET_BUFFER_ID",
    GetBufferStatus => "GET_BUFFER_STATUS",
    CreateBlackboard => "CREATE_BLACKBOARD",
    DisplayBlackboard => "DISPLAY_BLACKBOARD",
    ReadBlackboard => "READ_BLACKBOARD",
    ClearBlackboard => "CLEAR_BLACKBOARD",
    GetBlackboardId => "GET_BLACKBOARD_ID",
    GetBlackboardStatus => "GET_BLACKBOARD_STATUS",
    CreateSemaphore => "CREATE_SEMAPHORE",
    WaitSemaphore => "WAIT_SEMAPHORE",
    SignalSemaphore => "SIGNAL_SEMAPHORE",
    GetSemaphoreId => "GET_SEMAPHORE_ID",
    GetSemaphoreStatus => "GET_SEMAPHORE_STATUS",
    CreateEvent => "CREATE_EVENT",
    SetEvent => "SET_EVENT",
    ResetEvent => "RESET_EVENT",
    WaitEvent => "WAIT_EVENT",
    GetEventId => "GET_EVENT_ID",
    GetEventStatus => "GET_EVENT_STATUS",
    ReportApplicationMessage => "REPORT_APPLICATION_MESSAGE",
    CreateErrorHandler => "CREATE_ERROR_HANDLER",
    GetErrorStatus => "GET_ERROR_STATUS",
    RaiseApplicationError => "RAISE_APPLICATION_ERROR",
});

/// A fully bound service request. `msg: None` means "the next fresh
/// message id".
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Request {
    GetPartitionStatus,
    SetPartitionMode { mode: PartitionMode },
    CreateProcess { proc: ProcessId },
    SetPriority { proc: ProcessId, priority: u32 },
    SuspendSelf { timeout: Duration },
    Suspend { proc: ProcessId },
    Resume { proc: ProcessId },
    StopSelf,
    Stop { proc: ProcessId },
    Start { proc: ProcessId },
    DelayedStart { proc: ProcessId, delay: u64 },
    LockPreemption,
    UnlockPreemption,
    GetMyId,
    GetProcessId { name: String },
    GetProcessStatus { proc: ProcessId },
    TimedWait { delay: Duration },
    PeriodicWait,
    GetTime,
    Replenish { budget: Duration },
    CreateSamplingPort { port: PortId },
    WriteSamplingMessage { port: PortId, msg: Option<MessageId> },
    ReadSamplingMessage { port: PortId },
    GetSamplingPortId { name: String },
    GetSamplingPortStatus { port: PortId },
    CreateQueuingPort { port: PortId },
    SendQueuingMessage { port: PortId, msg: Option<MessageId>, timeout: Duration },
    ReceiveQueuingMessage { port: PortId, timeout: Duration },
    GetQueuingPortId { name: String },
    GetQueuingPortStatus { port: PortId },
    ClearQueuingPort { port: PortId },
    CreateBuffer { buffer: BufferId },
    SendBuffer { buffer: BufferId, msg: Option<MessageId>, timeout: Duration },
    ReceiveBuffer { buffer: BufferId, timeout: Duration },
    GetBufferId { name: String },
    GetBufferStatus { buffer: BufferId },
    CreateBlackboard { bb: BlackboardId },
    DisplayBlackboard { bb: BlackboardId, msg: Option<MessageId> },
    ReadBlackboard { bb: BlackboardId, timeout: Duration },
    ClearBlackboard { bb: BlackboardId },
    GetBlackboardId { name: String },
    GetBlackboardStatus { bb: BlackboardId },
    CreateSemaphore { sem: SemaphoreId },
    WaitSemaphore { sem: SemaphoreId, timeout: Duration },
    SignalSemaphore { sem: SemaphoreId },
    GetSemaphoreId { name: String },
    GetSemaphoreStatus { sem: SemaphoreId },
    CreateEvent { event: EventId },
    SetEvent { event: EventId },
    ResetEvent { event: EventId },
    WaitEvent { event: EventId, timeout: Duration },
    GetEventId { name: String },
    GetEventStatus { event: EventId },
    ReportApplicationMessage { length: u32 },
    CreateErrorHandler,
    GetErrorStatus,
    RaiseApplicationError { code: ErrorCode },
}

fn arg<'a>(args: &[&'a str], i: usize, what: &str) -> Result<&'a str, String> {
    args.get(i)
        .copied()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| format!("missing argument {}: {what}", i + 1))
}

fn lookup<T>(found: Option<T>, kind: &str, name: &str) -> Result<T, String> {
    found.ok_or_else(|| format!("unknown {kind} `{name}`"))
}

fn parse_num<T: FromStr>(text: &str, what: &str) -> Result<T, String> {
    text.parse().map_err(|_| format!("bad {what} `{text}`"))
}

fn parse_msg(args: &[&str], i: usize) -> Result<Option<MessageId>, String> {
    match args.get(i).copied() {
        None | Some("") | Some("fresh") => Ok(None),
        Some(t) => {
            let digits = t.strip_prefix('m').unwrap_or(t);
            Ok(Some(MessageId(parse_num(digits, "message id")?)))
        }
    }
}

fn parse_timeout(args: &[&str], i: usize) -> Result<Duration, String> {
    match args.get(i).copied() {
        None | Some("") => Ok(Duration::Ticks(0)),
        Some(t) => t.parse().map_err(|e: UnknownToken| e.to_string()),
    }
}

impl Request {
    pub fn service(&self) -> ServiceName {
        use Request as R;
        use ServiceName as S;
        match self {
            R::GetPartitionStatus => S::GetPartitionStatus,
            R::SetPartitionMode { .. } => S::SetPartitionMode,
            R::CreateProcess { .. } => S::CreateProcess,
            R::SetPriority { .. } => S::SetPriority,
            R::SuspendSelf { .. } => S::SuspendSelf,
            R::Suspend { .. } => S::Suspend,
            R::Resume { .. } => S::Resume,
            R::StopSelf => S::StopSelf,
            R::Stop { .. } => S::Stop,
            R::Start { .. } => S::Start,
            R::DelayedStart { .. } => S::DelayedStart,
            R::LockPreemption => S::LockPreemption,
            R::UnlockPreemption => S::UnlockPreemption,
            R::GetMyId => S::GetMyId,
            R::GetProcessId { .. } => S::GetProcessId,
            R::GetProcessStatus { .. } => S::GetProcessStatus,
            R::TimedWait { .. } => S::TimedWait,
            R::PeriodicWait => S::PeriodicWait,
            R::GetTime => S::GetTime,
            R::Replenish { .. } => S::Replenish,
            R::CreateSamplingPort { .. } => S::CreateSamplingPort,
            R::WriteSamplingMessage { .. } => S::WriteSamplingMessage,
            R::ReadSamplingMessage { .. } => S::ReadSamplingMessage,
            R::GetSamplingPortId { .. } => S::GetSamplingPortId,
            R::GetSamplingPortStatus { .. } => S::GetSamplingPortStatus,
            R::CreateQueuingPort { .. } => S::CreateQueuingPort,
            R::SendQueuingMessage { .. } => S::SendQueuingMessage,
            R::ReceiveQueuingMessage { .. } => S::ReceiveQueuingMessage,
            R::GetQueuingPortId { .. } => S::GetQueuingPortId,
            R::GetQueuingPortStatus { .. } => S::GetQueuingPortStatus,
            R::ClearQueuingPort { .. } => S::ClearQueuingPort,
            R::CreateBuffer { .. } => S::CreateBuffer,
            R::SendBuffer { .. } => S::SendBuffer,
            R::ReceiveBuffer { .. } => S::ReceiveBuffer,
            R::GetBufferId { .. } => S::GetBufferId,
            R::GetBufferStatus { .. } => S::GetBufferStatus,
            R::CreateBlackboard { .. } => S::CreateBlackboard,
            R::DisplayBlackboard { .. } => S::DisplayBlackboard,
            R::ReadBlackboard { .. } => S::ReadBlackboard,
            R::ClearBlackboard { .. } => S::ClearBlackboard,
            R::GetBlackboardId { .. } => S::GetBlackboardId,
            R::GetBlackboardStatus { .. } => S::GetBlackboardStatus,
            R::CreateSemaphore { .. } => S::CreateSemaphore,
            R::WaitSemaphore { .. } => S::WaitSemaphore,
            R::SignalSemaphore { .. } => S::SignalSemaphore,
            R::GetSemaphoreId { .. } => S::GetSemaphoreId,
            R::GetSemaphoreStatus { .. } => S::GetSemaphoreStatus,
            R::CreateEvent { .. } => S::CreateEvent,
            R::SetEvent { .. } => S::SetEvent,
            R::ResetEvent { .. } => S::ResetEvent,
            R::WaitEvent { .. } => S::WaitEvent,
            R::GetEventId { .. } => S::GetEventId,
            R::GetEventStatus { .. } => S::GetEventStatus,
            R::ReportApplicationMessage { .. } => S::ReportApplicationMessage,
            R::CreateErrorHandler => S::CreateErrorHandler,
            R::GetErrorStatus => S::GetErrorStatus,
            R::RaiseApplicationError { .. } => S::RaiseApplicationError,
        }
    }

    /// The process a request targets, if any.
    pub fn target(&self) -> Option<ProcessId> {
        match self {
            Request::CreateProcess { proc }
            | Request::SetPriority { proc, .. }
            | Request::Suspend { proc }
            | Request::Resume { proc }
            | Request::Stop { proc }
            | Request::Start { proc }
            | Request::DelayedStart { proc, .. }
            | Request::GetProcessStatus { proc } => Some(*proc),
            _ => None,
        }
    }

    /// Builds a request from script arguments. Objects are named as in the
    /// scenario; messages are `m<k>`, `<k>` or `fresh`; timeouts are ticks
    /// or `inf`.
    pub fn parse(scn: &Scenario, service: ServiceName, args: &[&str]) -> Result<Request, String> {
        use ServiceName as S;
        let proc = |i| -> Result<ProcessId, String> {
            let n = arg(args, i, "process")?;
            lookup(scn.process_id(n), "process", n)
        };
        let port = |i| -> Result<PortId, String> {
            let n = arg(args, i, "port")?;
            lookup(scn.port_id(n), "port", n)
        };
        let buffer = |i| -> Result<BufferId, String> {
            let n = arg(args, i, "buffer")?;
            lookup(scn.buffer_id(n), "buffer", n)
        };
        let bb = |i| -> Result<BlackboardId, String> {
            let n = arg(args, i, "blackboard")?;
            lookup(scn.blackboard_id(n), "blackboard", n)
        };
        let sem = |i| -> Result<SemaphoreId, String> {
            let n = arg(args, i, "semaphore")?;
            lookup(scn.semaphore_id(n), "semaphore", n)
        };
        let event = |i| -> Result<EventId, String> {
            let n = arg(args, i, "event")?;
            lookup(scn.event_id(n), "event", n)
        };
        let name = |i| arg(args, i, "name").map(str::to_string);
        Ok(match service {
            S::GetPartitionStatus => Request::GetPartitionStatus,
            S::SetPartitionMode => Request::SetPartitionMode {
                mode: arg(args, 0, "mode")?.parse().map_err(|e: UnknownToken| e.to_string())?,
            },
            S::CreateProcess => Request::CreateProcess { proc: proc(0)? },
            S::SetPriority => Request::SetPriority {
                proc: proc(0)?,
                priority: parse_num(arg(args, 1, "priority")?, "priority")?,
            },
            S::SuspendSelf => Request::SuspendSelf {
                timeout: parse_timeout(args, 0)?,
            },
            S::Suspend => Request::Suspend { proc: proc(0)? },
            S::Resume => Request::Resume { proc: proc(0)? },
            S::StopSelf => Request::StopSelf,
            S::Stop => Request::Stop { proc: proc(0)? },
            S::Start => Request::Start { proc: proc(0)? },
            S::DelayedStart => Request::DelayedStart {
                proc: proc(0)?,
                delay: parse_num(arg(args, 1, "delay")?, "delay")?,
            },
            S::LockPreemption => Request::LockPreemption,
            S::UnlockPreemption => Request::UnlockPreemption,
            S::GetMyId => Request::GetMyId,
            S::GetProcessId => Request::GetProcessId { name: name(0)? },
            S::GetProcessStatus => Request::GetProcessStatus { proc: proc(0)? },
            S::TimedWait => Request::TimedWait {
                delay: parse_timeout(args, 0)?,
            },
            S::PeriodicWait => Request::PeriodicWait,
            S::GetTime => Request::GetTime,
            S::Replenish => Request::Replenish {
                budget: parse_timeout(args, 0)?,
            },
            S::CreateSamplingPort => Request::CreateSamplingPort { port: port(0)? },
            S::WriteSamplingMessage => Request::WriteSamplingMessage {
                port: port(0)?,
                msg: parse_msg(args, 1)?,
            },
            S::ReadSamplingMessage => Request::ReadSamplingMessage { port: port(0)? },
            S::GetSamplingPortId => Request::GetSamplingPortId { name: name(0)? },
            S::GetSamplingPortStatus => Request::GetSamplingPortStatus { port: port(0)? },
            S::CreateQueuingPort => Request::CreateQueuingPort { port: port(0)? },
            S::SendQueuingMessage => Request::SendQueuingMessage {
                port: port(0)?,
                msg: parse_msg(args, 2)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::ReceiveQueuingMessage => Request::ReceiveQueuingMessage {
                port: port(0)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::GetQueuingPortId => Request::GetQueuingPortId { name: name(0)? },
            S::GetQueuingPortStatus => Request::GetQueuingPortStatus { port: port(0)? },
            S::ClearQueuingPort => Request::ClearQueuingPort { port: port(0)? },
            S::CreateBuffer => Request::CreateBuffer { buffer: buffer(0)? },
            S::SendBuffer => Request::SendBuffer {
                buffer: buffer(0)?,
                msg: parse_msg(args, 2)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::ReceiveBuffer => Request::ReceiveBuffer {
                buffer: buffer(0)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::GetBufferId => Request::GetBufferId { name: name(0)? },
            S::GetBufferStatus => Request::GetBufferStatus { buffer: buffer(0)? },
            S::CreateBlackboard => Request::CreateBlackboard { bb: bb(0)? },
            S::DisplayBlackboard => Request::DisplayBlackboard {
                bb: bb(0)?,
                msg: parse_msg(args, 1)?,
            },
            S::ReadBlackboard => Request::ReadBlackboard {
                bb: bb(0)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::ClearBlackboard => Request::ClearBlackboard { bb: bb(0)? },
            S::GetBlackboardId => Request::GetBlackboardId { name: name(0)? },
            S::GetBlackboardStatus => Request::GetBlackboardStatus { bb: bb(0)? },
            S::CreateSemaphore => Request::CreateSemaphore { sem: sem(0)? },
            S::WaitSemaphore => Request::WaitSemaphore {
                sem: sem(0)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::SignalSemaphore => Request::SignalSemaphore { sem: sem(0)? },
            S::GetSemaphoreId => Request::GetSemaphoreId { name: name(0)? },
            S::GetSemaphoreStatus => Request::GetSemaphoreStatus { sem: sem(0)? },
            S::CreateEvent => Request::CreateEvent { event: event(0)? },
            S::SetEvent => Request::SetEvent { event: event(0)? },
            S::ResetEvent => Request::ResetEvent { event: event(0)? },
            S::WaitEvent => Request::WaitEvent {
                event: event(0)?,
                timeout: parse_timeout(args, 1)?,
            },
            S::GetEventId => Request::GetEventId { name: name(0)? },
            S::GetEventStatus => Request::GetEventStatus { event: event(0)? },
            S::ReportApplicationMessage => Request::ReportApplicationMessage {
                length: match args.first() {
                    Some(t) if !t.is_empty() => parse_num(t, "length")?,
                    _ => 1,
                },
            },
            S::CreateErrorHandler => Request::CreateErrorHandler,
            S::GetErrorStatus => Request::GetErrorStatus,
            S::RaiseApplicationError => Request::RaiseApplicationError {
                code: match args.first() {
                    Some(t) if !t.is_empty() => t.parse().map_err(|e: UnknownToken| e.to_string())?,
                    _ => ErrorCode::ApplicationError,
                },
            },
        })
    }

    /// Human-readable form using scenario names, e.g. `STOP(B)`.
    pub fn describe(&self, scn: &Scenario) -> String {
        let mut args: Vec<String> = Vec::new();
        let msg = |m: &Option<MessageId>| m.map_or("fresh".to_string(), |m| m.to_string());
        match self {
            Request::SetPartitionMode { mode } => args.push(mode.to_string()),
            Request::CreateProcess { proc }
            | Request::Suspend { proc }
            | Request::Resume { proc }
            | Request::Stop { proc }
            | Request::Start { proc }
            | Request::GetProcessStatus { proc } => args.push(scn.process_name(*proc).into()),
            Request::SetPriority { proc, priority } => {
                args.push(scn.process_name(*proc).into());
                args.push(priority.to_string());
            }
            Request::DelayedStart { proc, delay } => {
                args.push(scn.process_name(*proc).into());
                args.push(delay.to_string());
            }
            Request::SuspendSelf { timeout: d } | Request::TimedWait { delay: d } | Request::Replenish { budget: d } => {
                args.push(d.to_string())
            }
            Request::GetProcessId { name }
            | Request::GetSamplingPortId { name }
            | Request::GetQueuingPortId { name }
            | Request::GetBufferId { name }
            | Request::GetBlackboardId { name }
            | Request::GetSemaphoreId { name }
            | Request::GetEventId { name } => args.push(name.clone()),
            Request::CreateSamplingPort { port }
            | Request::ReadSamplingMessage { port }
            | Request::GetSamplingPortStatus { port }
            | Request::CreateQueuingPort { port }
            | Request::GetQueuingPortStatus { port }
            | Request::ClearQueuingPort { port } => args.push(scn.port(*port).name.clone()),
            Request::WriteSamplingMessage { port, msg: m } => {
                args.push(scn.port(*port).name.clone());
                args.push(msg(m));
            }
            Request::SendQueuingMessage { port, msg: m, timeout } => {
                args.push(scn.port(*port).name.clone());
                args.push(timeout.to_string());
                args.push(msg(m));
            }
            Request::ReceiveQueuingMessage { port, timeout } => {
                args.push(scn.port(*port).name.clone());
                args.push(timeout.to_string());
            }
            Request::CreateBuffer { buffer } | Request::GetBufferStatus { buffer } => {
                args.push(scn.buffers[buffer.index()].name.clone())
            }
            Request::SendBuffer { buffer, msg: m, timeout } => {
                args.push(scn.buffers[buffer.index()].name.clone());
                args.push(timeout.to_string());
                args.push(msg(m));
            }
            Request::ReceiveBuffer { buffer, timeout } => {
                args.push(scn.buffers[buffer.index()].name.clone());
                args.push(timeout.to_string());
            }
            Request::CreateBlackboard { bb } | Request::ClearBlackboard { bb } | Request::GetBlackboardStatus { bb } => {
                args.push(scn.blackboards[bb.index()].name.clone())
            }
            Request::DisplayBlackboard { bb, msg: m } => {
                args.push(scn.blackboards[bb.index()].name.clone());
                args.push(msg(m));
            }
            Request::ReadBlackboard { bb, timeout } => {
                args.push(scn.blackboards[bb.index()].name.clone());
                args.push(timeout.to_string());
            }
            Request::CreateSemaphore { sem } | Request::SignalSemaphore { sem } | Request::GetSemaphoreStatus { sem } => {
                args.push(scn.semaphores[sem.index()].name.clone())
            }
            Request::WaitSemaphore { sem, timeout } => {
                args.push(scn.semaphores[sem.index()].name.clone());
                args.push(timeout.to_string());
            }
            Request::CreateEvent { event }
            | Request::SetEvent { event }
            | Request::ResetEvent { event }
            | Request::GetEventStatus { event } => args.push(scn.events[event.index()].name.clone()),
            Request::WaitEvent { event, timeout } => {
                args.push(scn.events[event.index()].name.clone());
                args.push(timeout.to_string());
            }
            Request::ReportApplicationMessage { length } => args.push(length.to_string()),
            Request::RaiseApplicationError { code } => args.push(code.to_string()),
            _ => {}
        }
        format!("{}({})", self.service(), args.join(","))
    }
}

/// A service request together with its caller.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ServiceCall {
    pub caller: Caller,
    pub request: Request,
}

impl ServiceCall {
    /// Whether the request targets the calling process itself.
    pub fn current_process_flag(&self) -> bool {
        matches!(self.caller, Caller::Process(p) if self.request.target() == Some(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutValue {
    Num(u64),
    Msg(MessageId),
    Process(ProcessId),
    Text(String),
}

impl fmt::Display for OutValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutValue::Num(n) => write!(f, "{n}"),
            OutValue::Msg(m) => write!(f, "{m}"),
            OutValue::Process(p) => write!(f, "{p}"),
            OutValue::Text(t) => f.write_str(t),
        }
    }
}

impl OutValue {
    /// Like `Display`, with processes printed by scenario name.
    pub fn render(&self, scn: &Scenario) -> String {
        match self {
            OutValue::Process(p) => scn.process_name(*p).to_string(),
            other => other.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ServiceResult {
    pub state: SystemState,
    pub return_code: ReturnCode,
    pub out_values: Vec<(&'static str, OutValue)>,
    /// Set when the caller blocked; the return code is then decided later.
    pub blocked: Option<PendingCall>,
    pub notes: Vec<Note>,
}

impl ServiceResult {
    pub fn out(&self, name: &str) -> Option<&OutValue> {
        self.out_values.iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    pub fn out_msg(&self) -> Option<MessageId> {
        self.out_values.iter().find_map(|(_, v)| match v {
            OutValue::Msg(m) => Some(*m),
            _ => None,
        })
    }

    /// `code out=value ...` for traces.
    pub fn summary(&self) -> String {
        let mut s = match &self.blocked {
            Some(_) => "BLOCKED".to_string(),
            None => self.return_code.to_string(),
        };
        for (n, v) in &self.out_values {
            let _ = write!(s, " {n}={v}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("module is shut down")]
    ModuleDown,
    #[error("caller is not running")]
    CallerNotRunning,
}

/// Looks a service up by its catalog name.
pub fn service_by_name(name: &str) -> Result<ServiceName, ServiceError> {
    name.parse().map_err(|_| ServiceError::UnknownService(name.to_string()))
}

/// Whether `caller` may invoke a service in `s` at all.
pub fn caller_active(s: &SystemState, caller: Caller) -> bool {
    match caller {
        Caller::Process(pid) => {
            s.current_process == Some(pid) && s.process(pid).is_some_and(|p| p.state == ProcessState::Running)
        }
        Caller::Main(part) => s.current_partition == Some(part) && s.partition(part).mode.is_start(),
    }
}

/// Execution context of one service call.
pub(crate) struct Svc<'a> {
    pub ctx: Ctx<'a>,
    pub caller: Caller,
    pub part: PartitionId,
    pub out: Vec<(&'static str, OutValue)>,
}

impl Svc<'_> {
    pub fn caller_pid(&self) -> Option<ProcessId> {
        match self.caller {
            Caller::Process(p) => Some(p),
            Caller::Main(_) => None,
        }
    }

    pub fn mode(&self) -> PartitionMode {
        self.ctx.s.partition(self.part).mode
    }

    pub fn caller_is_handler(&self) -> bool {
        self.caller_pid()
            .is_some_and(|p| self.ctx.s.process(p).is_some_and(|r| r.is_error_handler))
    }

    /// A created, non-handler process of the caller's partition.
    pub fn addressable(&self, pid: ProcessId) -> Option<&ProcessRec> {
        self.ctx
            .s
            .process(pid)
            .filter(|p| p.partition == self.part && !p.is_error_handler)
    }

    /// Whether a call that would block must fail instead: the main flow,
    /// an error handler or a process holding the preemption lock cannot
    /// wait.
    pub fn cannot_block(&self) -> bool {
        self.caller_pid().is_none() || self.caller_is_handler() || self.ctx.s.partition(self.part).lock_level > 0
    }

    /// The message a send uses: the given one if it is fresh.
    pub fn fresh(&self, msg: Option<MessageId>) -> Option<MessageId> {
        match msg {
            None => Some(self.ctx.s.fresh_message()),
            Some(m) if !self.ctx.s.used_messages.contains(&m) => Some(m),
            Some(_) => None,
        }
    }

    pub fn put(&mut self, name: &'static str, v: OutValue) {
        self.out.push((name, v));
    }
}

/// Invokes a service. Error returns leave the state unchanged.
pub fn invoke(
    scn: &Scenario,
    s: &SystemState,
    call: &ServiceCall,
    toggles: VariantToggles,
) -> Result<ServiceResult, ServiceError> {
    if s.module_shutdown {
        return Err(ServiceError::ModuleDown);
    }
    if !caller_active(s, call.caller) {
        return Err(ServiceError::CallerNotRunning);
    }
    let part = match call.caller {
        Caller::Process(pid) => s.process(pid).expect("active caller exists").partition,
        Caller::Main(part) => part,
    };
    let mut ctx = Ctx::new(scn, s);
    ctx.toggles = toggles;
    let mut svc = Svc {
        ctx,
        caller: call.caller,
        part,
        out: Vec::new(),
    };
    let code = dispatch(&mut svc, &call.request);
    let blocked = svc.caller_pid().and_then(|p| {
        (!s.pending.contains_key(&p)).then(|| svc.ctx.s.pending.get(&p).copied()).flatten()
    });
    if code != ReturnCode::NoError && blocked.is_none() {
        return Ok(ServiceResult {
            state: s.clone(),
            return_code: code,
            out_values: Vec::new(),
            blocked: None,
            notes: Vec::new(),
        });
    }
    Ok(ServiceResult {
        state: svc.ctx.s,
        return_code: code,
        out_values: svc.out,
        blocked,
        notes: svc.ctx.notes,
    })
}

fn dispatch(svc: &mut Svc, r: &Request) -> ReturnCode {
    use Request as R;
    match r {
        R::GetPartitionStatus => partition::get_partition_status(svc),
        R::SetPartitionMode { mode } => partition::set_partition_mode(svc, *mode),
        R::CreateProcess { proc } => process::create_process(svc, *proc),
        R::SetPriority { proc, priority } => process::set_priority(svc, *proc, *priority),
        R::SuspendSelf { timeout } => process::suspend_self(svc, *timeout),
        R::Suspend { proc } => process::suspend(svc, *proc),
        R::Resume { proc } => process::resume(svc, *proc),
        R::StopSelf => process::stop_self(svc),
        R::Stop { proc } => process::stop(svc, *proc),
        R::Start { proc } => process::start(svc, *proc),
        R::DelayedStart { proc, delay } => process::delayed_start(svc, *proc, *delay),
        R::LockPreemption => process::lock_preemption(svc),
        R::UnlockPreemption => process::unlock_preemption(svc),
        R::GetMyId => process::get_my_id(svc),
        R::GetProcessId { name } => process::get_process_id(svc, name),
        R::GetProcessStatus { proc } => process::get_process_status(svc, *proc),
        R::TimedWait { delay } => time::timed_wait(svc, *delay),
        R::PeriodicWait => time::periodic_wait(svc),
        R::GetTime => time::get_time(svc),
        R::Replenish { budget } => time::replenish(svc, *budget),
        R::CreateSamplingPort { port } => comm::create_port(svc, *port, crate::config::PortKind::Sampling),
        R::WriteSamplingMessage { port, msg } => comm::write_sampling_message(svc, *port, *msg),
        R::ReadSamplingMessage { port } => comm::read_sampling_message(svc, *port),
        R::GetSamplingPortId { name } => comm::get_port_id(svc, name, crate::config::PortKind::Sampling),
        R::GetSamplingPortStatus { port } => comm::get_sampling_port_status(svc, *port),
        R::CreateQueuingPort { port } => comm::create_port(svc, *port, crate::config::PortKind::Queuing),
        R::SendQueuingMessage { port, msg, timeout } => comm::send_queuing_message(svc, *port, *msg, *timeout),
        R::ReceiveQueuingMessage { port, timeout } => comm::receive_queuing_message(svc, *port, *timeout),
        R::GetQueuingPortId { name } => comm::get_port_id(svc, name, crate::config::PortKind::Queuing),
        R::GetQueuingPortStatus { port } => comm::get_queuing_port_status(svc, *port),
        R::ClearQueuingPort { port } => comm::clear_queuing_port(svc, *port),
        R::CreateBuffer { buffer } => comm::create_buffer(svc, *buffer),
        R::SendBuffer { buffer, msg, timeout } => comm::send_buffer(svc, *buffer, *msg, *timeout),
        R::ReceiveBuffer { buffer, timeout } => comm::receive_buffer(svc, *buffer, *timeout),
        R::GetBufferId { name } => comm::get_buffer_id(svc, name),
        R::GetBufferStatus { buffer } => comm::get_buffer_status(svc, *buffer),
        R::CreateBlackboard { bb } => comm::create_blackboard(svc, *bb),
        R::DisplayBlackboard { bb, msg } => comm::display_blackboard(svc, *bb, *msg),
        R::ReadBlackboard { bb, timeout } => comm::read_blackboard(svc, *bb, *timeout),
        R::ClearBlackboard { bb } => comm::clear_blackboard(svc, *bb),
        R::GetBlackboardId { name } => comm::get_blackboard_id(svc, name),
        R::GetBlackboardStatus { bb } => comm::get_blackboard_status(svc, *bb),
        R::CreateSemaphore { sem } => comm::create_semaphore(svc, *sem),
        R::WaitSemaphore { sem, timeout } => comm::wait_semaphore(svc, *sem, *timeout),
        R::SignalSemaphore { sem } => comm::signal_semaphore(svc, *sem),
        R::GetSemaphoreId { name } => comm::get_semaphore_id(svc, name),
        R::GetSemaphoreStatus { sem } => comm::get_semaphore_status(svc, *sem),
        R::CreateEvent { event } => comm::create_event(svc, *event),
        R::SetEvent { event } => comm::set_event(svc, *event),
        R::ResetEvent { event } => comm::reset_event(svc, *event),
        R::WaitEvent { event, timeout } => comm::wait_event(svc, *event, *timeout),
        R::GetEventId { name } => comm::get_event_id(svc, name),
        R::GetEventStatus { event } => comm::get_event_status(svc, *event),
        R::ReportApplicationMessage { length } => health::report_application_message(svc, *length),
        R::CreateErrorHandler => health::create_error_handler(svc),
        R::GetErrorStatus => health::get_error_status(svc),
        R::RaiseApplicationError { code } => health::raise_application_error(svc, *code),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_57_services() {
        assert_eq!(ServiceName::ALL.len(), 57);
        for s in ServiceName::ALL {
            assert_eq!(s.as_str().parse::<ServiceName>().unwrap(), *s);
        }
        assert!(matches!(service_by_name("FLY"), Err(ServiceError::UnknownService(_))));
    }
}
