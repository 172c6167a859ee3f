//! Process management services (ARINC 653 P1, process management).

use super::{OutValue, ServiceName, Svc};
use crate::ids::ProcessId;
use crate::kernel;
use crate::sched;
use crate::state::*;
use crate::types::*;

/// CREATE_PROCESS.
pub(super) fn create_process(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let scn = svc.ctx.scn;
    if proc.index() >= scn.processes.len() || scn.process(proc).partition != svc.part || scn.process(proc).is_handler {
        return ReturnCode::InvalidConfig;
    }
    if svc.ctx.s.processes.contains_key(&proc) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    kernel::insert_process(&mut svc.ctx, proc, svc.part);
    svc.put("PROCESS_ID", OutValue::Process(proc));
    ReturnCode::NoError
}

/// SET_PRIORITY. The process goes to the back of its new priority level.
pub(super) fn set_priority(svc: &mut Svc, proc: ProcessId, priority: u32) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if priority > svc.ctx.scn.max_priority {
        return ReturnCode::InvalidParam;
    }
    if p.state == ProcessState::Dormant {
        return ReturnCode::InvalidMode;
    }
    let clock = svc.ctx.s.clock_tick;
    let p = svc.ctx.proc_mut(proc);
    p.current_priority = priority;
    if matches!(p.state, ProcessState::Ready | ProcessState::Running) {
        p.ready_since = Some(clock);
    }
    svc.ctx.s.need_procresch = true;
    ReturnCode::NoError
}

/// SUSPEND_SELF.
pub(super) fn suspend_self(svc: &mut Svc, timeout: Duration) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if svc.ctx.s.partition(svc.part).lock_level > 0 || svc.caller_is_handler() {
        return ReturnCode::InvalidMode;
    }
    if svc.ctx.proc(me).periodicity.is_periodic() {
        return ReturnCode::InvalidMode;
    }
    if timeout.is_zero() {
        return ReturnCode::NoError;
    }
    let clock = svc.ctx.s.clock_tick;
    svc.ctx.set_state(me, ProcessState::Suspend, Cause::Suspend);
    if let Duration::Ticks(t) = timeout {
        svc.ctx.s.timeout_trigger.insert(me, (ProcessState::Ready, clock + t));
    }
    svc.ctx.s.pending.insert(
        me,
        PendingCall {
            service: ServiceName::SuspendSelf,
            resource: None,
        },
    );
    svc.ctx.s.need_procresch = true;
    ReturnCode::NoError
}

/// SUSPEND.
pub(super) fn suspend(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if svc.caller_pid() == Some(proc) {
        return ReturnCode::InvalidParam;
    }
    if p.periodicity.is_periodic() || p.state == ProcessState::Dormant {
        return ReturnCode::InvalidMode;
    }
    let holds_lock = svc.ctx.s.partition(svc.part).lock_holder == Some(LockHolder::Process(proc));
    if holds_lock {
        return ReturnCode::InvalidMode;
    }
    if p.state.is_suspended() {
        return ReturnCode::NoAction;
    }
    let to = match p.state {
        ProcessState::Waiting => ProcessState::WaitandSuspend,
        _ => ProcessState::Suspend,
    };
    svc.ctx.set_state(proc, to, Cause::Suspend);
    if let Some((ps, _)) = svc.ctx.s.timeout_trigger.get_mut(&proc) {
        if *ps == ProcessState::Ready {
            *ps = ProcessState::Suspend;
        }
    }
    svc.ctx.s.need_procresch = true;
    ReturnCode::NoError
}

/// RESUME. The AS_WRITTEN text readies a suspended process unless it waits
/// on a process queue or a TIMED_WAIT delay, which wrongly covers a
/// delayed start whose delay is still running.
pub(super) fn resume(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if svc.caller_pid() == Some(proc) {
        return ReturnCode::InvalidParam;
    }
    if p.periodicity.is_periodic() || p.state == ProcessState::Dormant {
        return ReturnCode::InvalidMode;
    }
    if !p.state.is_suspended() {
        return ReturnCode::NoAction;
    }
    let (state, wait) = (p.state, p.wait);
    if state == ProcessState::Suspend {
        svc.ctx.set_state(proc, ProcessState::Ready, Cause::Resume);
        svc.ctx.s.timeout_trigger.remove(&proc);
        if svc.ctx.s.pending.remove(&proc).is_some() {
            svc.ctx.notes.push(Note::Completed {
                pid: proc,
                code: ReturnCode::NoError,
                msg: None,
            });
        }
    } else if svc.mode() == PartitionMode::Normal
        && svc.ctx.toggles.resume == Variant::AsWritten
        && wait == Some(WaitReason::DelayedStart)
    {
        svc.ctx.set_state(proc, ProcessState::Ready, Cause::Resume);
        svc.ctx.s.timeout_trigger.remove(&proc);
    } else {
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::Resume);
        if let Some((ps, _)) = svc.ctx.s.timeout_trigger.get_mut(&proc) {
            if *ps == ProcessState::Suspend {
                *ps = ProcessState::Ready;
            }
        }
    }
    svc.ctx.s.need_procresch = true;
    ReturnCode::NoError
}

fn stop_effects(svc: &mut Svc, proc: ProcessId) {
    crate::ipc::purge_process(&mut svc.ctx, proc);
    svc.ctx.set_state(proc, ProcessState::Dormant, Cause::Stop);
    let p = svc.ctx.proc_mut(proc);
    p.deadline_time = None;
    p.release_point = None;
    p.delay_time = None;
    p.delayed_started = false;
    p.preempted_process = None;
    p.current_priority = p.base_priority;
    let rec = svc.ctx.s.partition_mut(svc.part);
    if rec.lock_holder == Some(LockHolder::Process(proc)) {
        rec.lock_level = 0;
        rec.lock_holder = None;
    }
    svc.ctx.s.need_procresch = true;
}

/// STOP_SELF.
pub(super) fn stop_self(svc: &mut Svc) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    stop_effects(svc, me);
    ReturnCode::NoError
}

/// STOP.
pub(super) fn stop(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if svc.caller_pid() == Some(proc) {
        return ReturnCode::InvalidParam;
    }
    if p.state == ProcessState::Dormant {
        return ReturnCode::NoAction;
    }
    if let Some(me) = svc.caller_pid().filter(|_| svc.caller_is_handler()) {
        if svc.ctx.proc(me).preempted_process == Some(proc) {
            let rec = svc.ctx.s.partition_mut(svc.part);
            rec.lock_level = 0;
            rec.lock_holder = None;
            svc.ctx.proc_mut(me).preempted_process = None;
        }
    }
    stop_effects(svc, proc);
    ReturnCode::NoError
}

/// START.
pub(super) fn start(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if p.state != ProcessState::Dormant {
        return ReturnCode::NoAction;
    }
    let (periodic, cap) = (p.periodicity.is_periodic(), p.time_capacity);
    let clock = svc.ctx.s.clock_tick;
    {
        let p = svc.ctx.proc_mut(proc);
        p.current_priority = p.base_priority;
        p.delayed_started = false;
        p.delay_time = None;
    }
    if svc.mode() != PartitionMode::Normal {
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::Start);
        svc.ctx.proc_mut(proc).wait = Some(WaitReason::Normal);
    } else if periodic {
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::Start);
        sched::start_periodic_timing(&mut svc.ctx, proc, 0);
    } else {
        svc.ctx.proc_mut(proc).deadline_time = cap.ticks().map(|c| clock + c);
        svc.ctx.set_state(proc, ProcessState::Ready, Cause::Start);
        svc.ctx.s.need_procresch = true;
    }
    ReturnCode::NoError
}

/// DELAYED_START.
pub(super) fn delayed_start(svc: &mut Svc, proc: ProcessId, delay: u64) -> ReturnCode {
    let Some(p) = svc.addressable(proc) else {
        return ReturnCode::InvalidParam;
    };
    if p.state != ProcessState::Dormant {
        return ReturnCode::NoAction;
    }
    if let Periodicity::Periodic { period } = p.periodicity {
        if delay >= period {
            return ReturnCode::InvalidParam;
        }
    }
    let (periodic, cap) = (p.periodicity.is_periodic(), p.time_capacity);
    let clock = svc.ctx.s.clock_tick;
    {
        let p = svc.ctx.proc_mut(proc);
        p.current_priority = p.base_priority;
        p.delayed_started = true;
        p.delay_time = Some(delay);
    }
    if svc.mode() != PartitionMode::Normal {
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::DelayedStart);
        svc.ctx.proc_mut(proc).wait = Some(WaitReason::DelayedStart);
    } else if periodic {
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::DelayedStart);
        sched::start_periodic_timing(&mut svc.ctx, proc, delay);
    } else if delay == 0 {
        svc.ctx.proc_mut(proc).deadline_time = cap.ticks().map(|c| clock + c);
        svc.ctx.set_state(proc, ProcessState::Ready, Cause::DelayedStart);
        svc.ctx.s.need_procresch = true;
    } else {
        svc.ctx.proc_mut(proc).deadline_time = cap.ticks().map(|c| clock + delay + c);
        svc.ctx.set_state(proc, ProcessState::Waiting, Cause::DelayedStart);
        svc.ctx.proc_mut(proc).wait = Some(WaitReason::DelayedStart);
        svc.ctx.s.timeout_trigger.insert(proc, (ProcessState::Ready, clock + delay));
    }
    ReturnCode::NoError
}

/// LOCK_PREEMPTION. Returns the previous lock level.
pub(super) fn lock_preemption(svc: &mut Svc) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::NoAction;
    };
    if svc.mode() != PartitionMode::Normal || svc.caller_is_handler() {
        return ReturnCode::NoAction;
    }
    let max = svc.ctx.scn.max_lock_level;
    let rec = svc.ctx.s.partition_mut(svc.part);
    if rec.lock_level >= max {
        return ReturnCode::InvalidConfig;
    }
    let previous = rec.lock_level;
    rec.lock_level += 1;
    rec.lock_holder = Some(LockHolder::Process(me));
    svc.put("LOCK_LEVEL", OutValue::Num(previous as u64));
    ReturnCode::NoError
}

/// UNLOCK_PREEMPTION. Returns the previous lock level.
pub(super) fn unlock_preemption(svc: &mut Svc) -> ReturnCode {
    if svc.caller_pid().is_none() || svc.mode() != PartitionMode::Normal || svc.caller_is_handler() {
        return ReturnCode::NoAction;
    }
    let rec = svc.ctx.s.partition_mut(svc.part);
    if rec.lock_level == 0 {
        return ReturnCode::NoAction;
    }
    let previous = rec.lock_level;
    rec.lock_level -= 1;
    if rec.lock_level == 0 {
        rec.lock_holder = None;
        svc.ctx.s.need_procresch = true;
    }
    svc.put("LOCK_LEVEL", OutValue::Num(previous as u64));
    ReturnCode::NoError
}

/// GET_MY_ID. The main flow and the error handler have no identifier.
pub(super) fn get_my_id(svc: &mut Svc) -> ReturnCode {
    match svc.caller_pid() {
        Some(me) if !svc.caller_is_handler() => {
            svc.put("PROCESS_ID", OutValue::Process(me));
            ReturnCode::NoError
        }
        _ => ReturnCode::InvalidMode,
    }
}

/// GET_PROCESS_ID.
pub(super) fn get_process_id(svc: &mut Svc, name: &str) -> ReturnCode {
    match svc.ctx.scn.process_id(name).filter(|p| svc.addressable(*p).is_some()) {
        Some(p) => {
            svc.put("PROCESS_ID", OutValue::Process(p));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// GET_PROCESS_STATUS.
pub(super) fn get_process_status(svc: &mut Svc, proc: ProcessId) -> ReturnCode {
    let Some(p) = svc.addressable(proc).cloned() else {
        return ReturnCode::InvalidParam;
    };
    svc.put("PROCESS_STATE", OutValue::Text(p.state.standard().to_string()));
    svc.put("CURRENT_PRIORITY", OutValue::Num(p.current_priority as u64));
    svc.put(
        "DEADLINE_TIME",
        OutValue::Text(p.deadline_time.map_or("inf".into(), |d| d.to_string())),
    );
    ReturnCode::NoError
}
