//! Finite request menus for free exploration: every service a caller may
//! try, instantiated over the scenario's objects and the parameter domains
//! of `explore.*`.

use super::{Request, ServiceName};
use crate::config::{PortKind, Scenario};
use crate::ids::*;
use crate::state::SystemState;
use crate::types::*;

/// Services a running process tries when no menu is configured: every
/// service that can change the state after initialization.
pub fn default_menu() -> Vec<ServiceName> {
    use ServiceName as S;
    S::ALL
        .iter()
        .copied()
        .filter(|s| {
            let name = s.as_str();
            !(name.starts_with("GET_") || name.starts_with("CREATE_") || *s == S::ReportApplicationMessage)
        })
        .collect()
}

fn instantiate(scn: &Scenario, s: &SystemState, part: PartitionId, me: Option<ProcessId>, service: ServiceName, out: &mut Vec<Request>) {
    use ServiceName as S;
    let ex = &scn.explore;
    let targets: Vec<ProcessId> = scn.processes_of(part).filter(|p| Some(*p) != me).collect();
    let may_send = (s.used_messages.len() as u32) < ex.messages;
    let ports = |kind: PortKind, dir: Direction| -> Vec<PortId> {
        (0..scn.ports.len() as u16)
            .map(PortId)
            .filter(|p| {
                let c = scn.port(*p);
                c.partition == part && c.kind == kind && c.direction == dir
            })
            .collect()
    };
    let buffers = (0..scn.buffers.len() as u16).map(BufferId).filter(|b| scn.buffers[b.index()].partition == part);
    let bbs = (0..scn.blackboards.len() as u16)
        .map(BlackboardId)
        .filter(|b| scn.blackboards[b.index()].partition == part);
    let sems = (0..scn.semaphores.len() as u16)
        .map(SemaphoreId)
        .filter(|x| scn.semaphores[x.index()].partition == part);
    let events = (0..scn.events.len() as u16).map(EventId).filter(|e| scn.events[e.index()].partition == part);
    match service {
        S::SetPartitionMode => out.extend(PartitionMode::ALL.iter().map(|&mode| Request::SetPartitionMode { mode })),
        S::CreateProcess => out.extend(scn.processes_of(part).map(|proc| Request::CreateProcess { proc })),
        S::SetPriority => {
            for &proc in targets.iter().chain(me.as_ref()) {
                out.extend(ex.priorities.iter().map(|&priority| Request::SetPriority { proc, priority }));
            }
        }
        S::SuspendSelf => out.extend(
            ex.timeouts
                .iter()
                .filter(|t| !t.is_zero())
                .map(|&timeout| Request::SuspendSelf { timeout }),
        ),
        S::Suspend => out.extend(targets.iter().map(|&proc| Request::Suspend { proc })),
        S::Resume => out.extend(targets.iter().map(|&proc| Request::Resume { proc })),
        S::StopSelf => out.push(Request::StopSelf),
        S::Stop => out.extend(targets.iter().map(|&proc| Request::Stop { proc })),
        S::Start => out.extend(targets.iter().map(|&proc| Request::Start { proc })),
        S::DelayedStart => {
            for &proc in &targets {
                out.extend(ex.delays.iter().map(|&delay| Request::DelayedStart { proc, delay }));
            }
        }
        S::LockPreemption => out.push(Request::LockPreemption),
        S::UnlockPreemption => out.push(Request::UnlockPreemption),
        S::GetMyId => out.push(Request::GetMyId),
        S::GetProcessId => out.extend(scn.processes_of(part).map(|p| Request::GetProcessId {
            name: scn.process_name(p).to_string(),
        })),
        S::GetProcessStatus => out.extend(scn.processes_of(part).map(|proc| Request::GetProcessStatus { proc })),
        S::TimedWait => out.extend(ex.timeouts.iter().map(|&delay| Request::TimedWait { delay })),
        S::PeriodicWait => out.push(Request::PeriodicWait),
        S::GetTime => out.push(Request::GetTime),
        S::Replenish => out.extend(
            ex.timeouts
                .iter()
                .filter(|t| !t.is_zero())
                .map(|&budget| Request::Replenish { budget }),
        ),
        S::CreateSamplingPort => {
            for dir in Direction::ALL {
                out.extend(ports(PortKind::Sampling, *dir).into_iter().map(|port| Request::CreateSamplingPort { port }));
            }
        }
        S::WriteSamplingMessage if may_send => out.extend(
            ports(PortKind::Sampling, Direction::Source)
                .into_iter()
                .map(|port| Request::WriteSamplingMessage { port, msg: None }),
        ),
        S::ReadSamplingMessage => out.extend(
            ports(PortKind::Sampling, Direction::Destination)
                .into_iter()
                .map(|port| Request::ReadSamplingMessage { port }),
        ),
        S::GetSamplingPortStatus => {
            for dir in Direction::ALL {
                out.extend(ports(PortKind::Sampling, *dir).into_iter().map(|port| Request::GetSamplingPortStatus { port }));
            }
        }
        S::CreateQueuingPort => {
            for dir in Direction::ALL {
                out.extend(ports(PortKind::Queuing, *dir).into_iter().map(|port| Request::CreateQueuingPort { port }));
            }
        }
        S::SendQueuingMessage if may_send => {
            for port in ports(PortKind::Queuing, Direction::Source) {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::SendQueuingMessage { port, msg: None, timeout }));
            }
        }
        S::ReceiveQueuingMessage => {
            for port in ports(PortKind::Queuing, Direction::Destination) {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::ReceiveQueuingMessage { port, timeout }));
            }
        }
        S::GetQueuingPortStatus => {
            for dir in Direction::ALL {
                out.extend(ports(PortKind::Queuing, *dir).into_iter().map(|port| Request::GetQueuingPortStatus { port }));
            }
        }
        S::ClearQueuingPort => out.extend(
            ports(PortKind::Queuing, Direction::Destination)
                .into_iter()
                .map(|port| Request::ClearQueuingPort { port }),
        ),
        S::CreateBuffer => out.extend(buffers.map(|buffer| Request::CreateBuffer { buffer })),
        S::SendBuffer if may_send => {
            for buffer in buffers {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::SendBuffer { buffer, msg: None, timeout }));
            }
        }
        S::ReceiveBuffer => {
            for buffer in buffers {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::ReceiveBuffer { buffer, timeout }));
            }
        }
        S::GetBufferStatus => out.extend(buffers.map(|buffer| Request::GetBufferStatus { buffer })),
        S::CreateBlackboard => out.extend(bbs.map(|bb| Request::CreateBlackboard { bb })),
        S::DisplayBlackboard if may_send => out.extend(bbs.map(|bb| Request::DisplayBlackboard { bb, msg: None })),
        S::ReadBlackboard => {
            for bb in bbs {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::ReadBlackboard { bb, timeout }));
            }
        }
        S::ClearBlackboard => out.extend(bbs.map(|bb| Request::ClearBlackboard { bb })),
        S::GetBlackboardStatus => out.extend(bbs.map(|bb| Request::GetBlackboardStatus { bb })),
        S::CreateSemaphore => out.extend(sems.map(|sem| Request::CreateSemaphore { sem })),
        S::WaitSemaphore => {
            for sem in sems {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::WaitSemaphore { sem, timeout }));
            }
        }
        S::SignalSemaphore => out.extend(sems.map(|sem| Request::SignalSemaphore { sem })),
        S::GetSemaphoreStatus => out.extend(sems.map(|sem| Request::GetSemaphoreStatus { sem })),
        S::CreateEvent => out.extend(events.map(|event| Request::CreateEvent { event })),
        S::SetEvent => out.extend(events.map(|event| Request::SetEvent { event })),
        S::ResetEvent => out.extend(events.map(|event| Request::ResetEvent { event })),
        S::WaitEvent => {
            for event in events {
                out.extend(ex.timeouts.iter().map(|&timeout| Request::WaitEvent { event, timeout }));
            }
        }
        S::GetEventStatus => out.extend(events.map(|event| Request::GetEventStatus { event })),
        S::GetPartitionStatus => out.push(Request::GetPartitionStatus),
        S::ReportApplicationMessage => out.push(Request::ReportApplicationMessage { length: 1 }),
        S::CreateErrorHandler => out.push(Request::CreateErrorHandler),
        S::GetErrorStatus => out.push(Request::GetErrorStatus),
        S::RaiseApplicationError => out.push(Request::RaiseApplicationError {
            code: ErrorCode::ApplicationError,
        }),
        S::GetSamplingPortId | S::GetQueuingPortId | S::GetBufferId | S::GetBlackboardId | S::GetSemaphoreId | S::GetEventId => {}
        S::WriteSamplingMessage | S::SendQueuingMessage | S::SendBuffer | S::DisplayBlackboard => {}
    }
}

/// Requests the running process `pid` may issue.
pub fn process_candidates(scn: &Scenario, s: &SystemState, pid: ProcessId) -> Vec<Request> {
    let part = scn.process(pid).partition;
    let menu = scn.explore.menu.get(&pid).cloned().unwrap_or_else(default_menu);
    let mut out = Vec::new();
    for service in menu {
        instantiate(scn, s, part, Some(pid), service, &mut out);
    }
    out
}

/// Requests the initialization flow of `part` may issue once every object
/// has been created.
pub fn main_candidates(scn: &Scenario, s: &SystemState, part: PartitionId) -> Vec<Request> {
    let mut out = Vec::new();
    for &service in &scn.explore.main_ops {
        instantiate(scn, s, part, None, service, &mut out);
    }
    out
}
