//! Clock, two-level scheduling and the timing model of processes.
//!
//! Partitions are scheduled cyclically over the major time frame; inside the
//! current partition the Ready process with the highest current priority
//! runs, ties going to the process that has been Ready longest and then to
//! the lowest id. Periodic processes are released at multiples of their
//! period counted from a major-frame boundary.

use crate::config::Scenario;
use crate::ids::*;
use crate::state::*;
use crate::types::*;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("module is shut down")]
    ModuleDown,
}

/// Advances the clock by one tick.
pub fn ticktock(scn: &Scenario, s: &SystemState) -> Result<SystemState, SchedError> {
    let mut ctx = Ctx::new(scn, s);
    ticktock_ctx(&mut ctx)?;
    Ok(ctx.s)
}

pub(crate) fn ticktock_ctx(ctx: &mut Ctx) -> Result<(), SchedError> {
    if ctx.s.module_shutdown {
        return Err(SchedError::ModuleDown);
    }
    ctx.s.clock_tick += 1;
    if ctx.scn.schedule.is_boundary(ctx.s.clock_tick) {
        ctx.s.need_reschedule = true;
    }
    Ok(())
}

/// Partition the schedule selects at the current tick, if it may run.
pub fn scheduled_partition(scn: &Scenario, s: &SystemState) -> Option<PartitionId> {
    scn.schedule
        .active_window(s.clock_tick)
        .map(|w| w.partition)
        .filter(|p| s.partition(*p).mode != PartitionMode::Idle)
}

/// Switches to the partition owning the active window. A no-op unless a
/// reschedule is pending.
pub fn partition_schedule(scn: &Scenario, s: &SystemState) -> SystemState {
    let mut ctx = Ctx::new(scn, s);
    partition_schedule_ctx(&mut ctx);
    ctx.s
}

pub(crate) fn partition_schedule_ctx(ctx: &mut Ctx) {
    if !ctx.s.need_reschedule {
        return;
    }
    ctx.s.need_reschedule = false;
    let target = scheduled_partition(ctx.scn, &ctx.s);
    if target == ctx.s.current_partition {
        return;
    }
    if let Some(pid) = ctx.s.current_process {
        ctx.set_state(pid, ProcessState::Ready, Cause::Preempt);
    }
    ctx.s.current_process = None;
    ctx.s.current_partition = target;
    ctx.s.need_procresch = true;
}

/// The process that should run in `part`: an active error handler first,
/// then the holder of the preemption lock, then the best Ready process.
pub fn choose_process(s: &SystemState, part: PartitionId) -> Option<ProcessId> {
    let rec = s.partition(part);
    let runnable = |pid: ProcessId| {
        s.process(pid)
            .is_some_and(|p| matches!(p.state, ProcessState::Ready | ProcessState::Running))
    };
    if let Some(h) = rec.error_handler.filter(|&h| runnable(h)) {
        return Some(h);
    }
    if rec.lock_level > 0 {
        if let Some(LockHolder::Process(pid)) = rec.lock_holder {
            if runnable(pid) {
                return Some(pid);
            }
        }
    }
    s.processes_of(part)
        .filter(|p| runnable(p.id))
        .min_by_key(|p| (std::cmp::Reverse(p.current_priority), p.ready_since, p.id))
        .map(|p| p.id)
}

/// Chooses the running process of the current partition.
pub fn process_schedule(scn: &Scenario, s: &SystemState) -> SystemState {
    let mut ctx = Ctx::new(scn, s);
    process_schedule_ctx(&mut ctx);
    ctx.s
}

pub(crate) fn process_schedule_ctx(ctx: &mut Ctx) {
    if !ctx.s.need_procresch {
        return;
    }
    ctx.s.need_procresch = false;
    let chosen = match ctx.s.current_partition {
        Some(part) if ctx.s.partition(part).mode == PartitionMode::Normal => choose_process(&ctx.s, part),
        _ => None,
    };
    let previous = ctx.s.current_process;
    if previous != chosen {
        if let Some(prev) = previous {
            if ctx.s.process(prev).is_some_and(|p| p.state == ProcessState::Running) {
                ctx.set_state(prev, ProcessState::Ready, Cause::Preempt);
            }
        }
        if let Some(next) = chosen {
            ctx.set_state(next, ProcessState::Running, Cause::Schedule);
        }
    }
    ctx.s.current_process = chosen;
}

/// First major-frame boundary strictly after `clock + delay`.
pub fn first_release(mtf: u64, clock: u64, delay: u64) -> u64 {
    ((clock + delay) / mtf + 1) * mtf
}

/// Sets the first release point and deadline of a periodic process being
/// started; the process waits for that release point.
pub(crate) fn start_periodic_timing(ctx: &mut Ctx, pid: ProcessId, delay: u64) {
    let release = first_release(ctx.scn.schedule.mtf, ctx.s.clock_tick, delay);
    let p = ctx.proc_mut(pid);
    p.release_point = Some(release);
    p.deadline_time = p.time_capacity.ticks().map(|c| release + c);
    p.wait = Some(WaitReason::ReleasePoint);
}

/// Processes whose release point is the current tick.
pub fn due_releases(s: &SystemState) -> Vec<ProcessId> {
    s.processes
        .values()
        .filter(|p| {
            p.state == ProcessState::Waiting
                && p.wait == Some(WaitReason::ReleasePoint)
                && p.release_point == Some(s.clock_tick)
        })
        .map(|p| p.id)
        .collect()
}

/// Releases a periodic process waiting on its release point.
pub fn periodicproc_reach_releasepoint(scn: &Scenario, s: &SystemState, pid: ProcessId) -> SystemState {
    let mut ctx = Ctx::new(scn, s);
    reach_releasepoint_ctx(&mut ctx, pid);
    ctx.s
}

pub(crate) fn reach_releasepoint_ctx(ctx: &mut Ctx, pid: ProcessId) {
    if !due_releases(&ctx.s).contains(&pid) {
        return;
    }
    let p = ctx.proc(pid);
    let reached = p.release_point.expect("due release");
    let period = p.periodicity.period().ticks().expect("periodic");
    let deadline = p.time_capacity.ticks().map(|c| reached + c);
    ctx.set_state(pid, ProcessState::Ready, Cause::Release);
    let p = ctx.proc_mut(pid);
    p.release_point = Some(reached + period);
    p.deadline_time = deadline;
    ctx.s.need_procresch = true;
}

/// The running process waits for its next release point.
pub(crate) fn periodic_wait_ctx(ctx: &mut Ctx, pid: ProcessId) {
    let clock = ctx.s.clock_tick;
    let p = ctx.proc(pid);
    let period = p.periodicity.period().ticks().expect("periodic");
    let mut release = p.release_point.unwrap_or_else(|| first_release(ctx.scn.schedule.mtf, clock, 0));
    while release <= clock {
        release += period;
    }
    let deadline = p.time_capacity.ticks().map(|c| release + c);
    ctx.set_state(pid, ProcessState::Waiting, Cause::Block);
    let p = ctx.proc_mut(pid);
    p.wait = Some(WaitReason::ReleasePoint);
    p.release_point = Some(release);
    p.deadline_time = deadline;
    ctx.s.need_procresch = true;
}

/// The running process sleeps for `t` ticks; `t = 0` yields the processor
/// to processes of equal priority.
pub(crate) fn timed_wait_ctx(ctx: &mut Ctx, pid: ProcessId, t: u64) {
    let clock = ctx.s.clock_tick;
    if t == 0 {
        ctx.set_state(pid, ProcessState::Ready, Cause::Preempt);
        ctx.proc_mut(pid).ready_since = Some(clock);
    } else {
        ctx.set_state(pid, ProcessState::Waiting, Cause::Block);
        ctx.proc_mut(pid).wait = Some(WaitReason::TimedWait);
        ctx.s.timeout_trigger.insert(pid, (ProcessState::Ready, clock + t));
    }
    ctx.s.need_procresch = true;
}

pub(crate) fn replenish_ctx(ctx: &mut Ctx, pid: ProcessId, budget: u64) {
    let clock = ctx.s.clock_tick;
    ctx.proc_mut(pid).deadline_time = Some(clock + budget);
}

/// Processes whose time-out expires at the current tick.
pub fn due_timeouts(s: &SystemState) -> Vec<ProcessId> {
    s.timeout_trigger
        .iter()
        .filter(|(_, (_, t))| *t == s.clock_tick)
        .map(|(p, _)| *p)
        .collect()
}

/// Fires every time-out expiring now.
pub fn time_out(scn: &Scenario, s: &SystemState) -> SystemState {
    let mut ctx = Ctx::new(scn, s);
    time_out_ctx(&mut ctx);
    ctx.s
}

pub(crate) fn time_out_ctx(ctx: &mut Ctx) {
    let due = due_timeouts(&ctx.s);
    for pid in &due {
        let (target, _) = ctx.s.timeout_trigger.remove(pid).expect("due trigger");
        let Some(p) = ctx.s.process(*pid) else { continue };
        if !p.state.is_waiting_family() {
            continue;
        }
        let msg = crate::ipc::leave_waiters(ctx, *pid, Fate::Aborted);
        ctx.set_state(*pid, target, Cause::TimeOut);
        if ctx.s.pending.remove(pid).is_some() {
            ctx.notes.push(Note::Completed {
                pid: *pid,
                code: ReturnCode::TimedOut,
                msg,
            });
        }
    }
    if !due.is_empty() {
        ctx.s.need_procresch = true;
    }
}

/// Processes with a deadline strictly in the past.
pub fn detect_deadline_miss(s: &SystemState) -> Vec<ProcessId> {
    s.processes
        .values()
        .filter(|p| p.state != ProcessState::Dormant && p.deadline_time.is_some_and(|d| s.clock_tick > d))
        .map(|p| p.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn release_formula() {
        assert_eq!(first_release(10, 3, 0), 10);
        assert_eq!(first_release(10, 3, 9), 20);
        assert_eq!(first_release(10, 0, 0), 10);
        assert_eq!(first_release(10, 10, 0), 20);
    }
}
