//! Health monitoring: routing of errors through the HM tables and the
//! recovery actions.
//!
//! An error raised by a process is looked up in its partition's table; a
//! PROCESS-level entry activates the partition's error handler when one can
//! run, a PARTITION-level entry restarts or idles the partition, and a
//! MODULE-level entry defers to the multi-partition table. Codes missing
//! from the partition table fall through to the multi-partition table.
//! Errors without a partition use the module table.

use crate::config::{HmEntry, Scenario};
use crate::ids::*;
use crate::kernel;
use crate::state::*;
use crate::types::*;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorSource {
    Process(ProcessId),
    Partition(PartitionId),
    Module,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HmError {
    #[error("module is shut down")]
    ModuleDown,
    #[error("no HM table entry for {0}")]
    Unconfigured(ErrorCode),
}

/// Raises an error and applies the configured recovery.
pub fn raise_error(
    scn: &Scenario,
    s: &SystemState,
    code: ErrorCode,
    source: ErrorSource,
) -> Result<(SystemState, Vec<Note>), HmError> {
    let mut ctx = Ctx::new(scn, s);
    raise_ctx(&mut ctx, code, source)?;
    Ok(ctx.finish())
}

/// The action an error resolves to, without applying it.
pub fn resolve(scn: &Scenario, s: &SystemState, code: ErrorCode, source: ErrorSource) -> Result<Resolved, HmError> {
    let part = match source {
        ErrorSource::Process(pid) => s.process(pid).map(|p| p.partition),
        ErrorSource::Partition(p) => Some(p),
        ErrorSource::Module => None,
    };
    let Some(part) = part else {
        return scn
            .module_hm
            .get(&code)
            .map(|e| Resolved::Module(e.action))
            .ok_or(HmError::Unconfigured(code));
    };
    let cfg = scn.partition(part);
    let module_level = |e: &HmEntry| {
        let action = cfg.multi_hm.get(&code).map_or(e.action, |m| m.action);
        Resolved::at(part, action)
    };
    match cfg.hm.get(&code) {
        Some(e) => match e.level {
            ErrorLevel::Module => Ok(module_level(e)),
            ErrorLevel::Partition => Ok(Resolved::at(part, e.action)),
            ErrorLevel::Process => {
                let handler = s.partition(part).error_handler;
                let source_pid = match source {
                    ErrorSource::Process(pid) => Some(pid),
                    _ => None,
                };
                match handler {
                    Some(h)
                        if s.partition(part).mode == PartitionMode::Normal
                            && s.current_process != Some(h)
                            && source_pid != Some(h) =>
                    {
                        Ok(Resolved::Handler { part, handler: h })
                    }
                    _ => {
                        let fallback = match e.action {
                            RecoveryAction::ProcessErrorHandler => RecoveryAction::PartitionIdle,
                            other => other,
                        };
                        Ok(Resolved::at(part, fallback))
                    }
                }
            }
        },
        None => cfg
            .multi_hm
            .get(&code)
            .map(|e| Resolved::at(part, e.action))
            .ok_or(HmError::Unconfigured(code)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolved {
    Handler { part: PartitionId, handler: ProcessId },
    Partition { part: PartitionId, action: RecoveryAction },
    Module(RecoveryAction),
}

impl Resolved {
    fn at(part: PartitionId, action: RecoveryAction) -> Resolved {
        match action {
            a if a.is_module_level() => Resolved::Module(a),
            RecoveryAction::ProcessErrorHandler => Resolved::Partition {
                part,
                action: RecoveryAction::PartitionIdle,
            },
            a => Resolved::Partition { part, action: a },
        }
    }
}

pub(crate) fn raise_ctx(ctx: &mut Ctx, code: ErrorCode, source: ErrorSource) -> Result<(), HmError> {
    if ctx.s.module_shutdown {
        return Err(HmError::ModuleDown);
    }
    let resolved = resolve(ctx.scn, &ctx.s, code, source)?;
    let pid = match source {
        ErrorSource::Process(p) => Some(p),
        _ => None,
    };
    let (part, action) = match resolved {
        Resolved::Handler { part, .. } => (Some(part), "PROCESS_ERRORHANDLER".to_string()),
        Resolved::Partition { part, action } => (Some(part), action.as_str().to_string()),
        Resolved::Module(a) => (pid.and_then(|p| ctx.s.process(p)).map(|p| p.partition), a.as_str().to_string()),
    };
    ctx.notes.push(Note::HmError { code, part, pid, action });
    match resolved {
        Resolved::Handler { part, handler } => activate_handler(ctx, part, handler, code, pid),
        Resolved::Partition { part, action } => partition_action(ctx, part, action),
        Resolved::Module(a) => module_action(ctx, a),
    }
    Ok(())
}

fn activate_handler(ctx: &mut Ctx, part: PartitionId, h: ProcessId, code: ErrorCode, pid: Option<ProcessId>) {
    ctx.s.partition_mut(part).error_status.push((code, pid));
    if ctx.proc(h).state != ProcessState::Dormant {
        return;
    }
    let preempted = ctx
        .s
        .current_process
        .filter(|c| ctx.s.process(*c).is_some_and(|p| p.partition == part))
        .or(match ctx.s.partition(part).lock_holder {
            Some(LockHolder::Process(p)) => Some(p),
            _ => None,
        });
    let max = ctx.scn.max_priority;
    let p = ctx.proc_mut(h);
    p.preempted_process = preempted;
    p.current_priority = max;
    ctx.set_state(h, ProcessState::Ready, Cause::Start);
    ctx.s.need_procresch = true;
}

fn partition_action(ctx: &mut Ctx, part: PartitionId, action: RecoveryAction) {
    let mode = ctx.s.partition(part).mode;
    if mode == PartitionMode::Idle {
        return;
    }
    let target = match action {
        RecoveryAction::PartitionIdle => PartitionMode::Idle,
        RecoveryAction::PartitionColdRestart => PartitionMode::ColdStart,
        RecoveryAction::PartitionWarmRestart => PartitionMode::WarmStart,
        _ => return,
    };
    let target = if kernel::mode_allowed(mode, target) { target } else { mode };
    kernel::enter_mode(ctx, part, target, StartCondition::HmPartitionRestart);
}

fn module_action(ctx: &mut Ctx, action: RecoveryAction) {
    match action {
        RecoveryAction::ModuleShutdown => ctx.s.module_shutdown = true,
        RecoveryAction::ModuleReset => {
            for part in ctx.scn.partition_ids() {
                kernel::enter_mode(ctx, part, PartitionMode::ColdStart, StartCondition::HmModuleRestart);
            }
            ctx.s.current_process = None;
            ctx.s.need_reschedule = true;
        }
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HandlerError {
    #[error("partition has no error handler configured")]
    NotConfigured,
    #[error("error handler already exists")]
    AlreadyExists,
    #[error("error handlers are created in a start mode")]
    InvalidMode,
}

/// Creates the error handler of `part` in Dormant, at the maximum priority.
pub fn create_error_handler(scn: &Scenario, s: &SystemState, part: PartitionId) -> Result<SystemState, HandlerError> {
    let mut ctx = Ctx::new(scn, s);
    create_handler_ctx(&mut ctx, part)?;
    Ok(ctx.s)
}

pub(crate) fn create_handler_ctx(ctx: &mut Ctx, part: PartitionId) -> Result<(), HandlerError> {
    let h = ctx.scn.partition(part).handler.ok_or(HandlerError::NotConfigured)?;
    if ctx.s.partition(part).error_handler.is_some() {
        return Err(HandlerError::AlreadyExists);
    }
    if !ctx.s.partition(part).mode.is_start() {
        return Err(HandlerError::InvalidMode);
    }
    kernel::insert_process(ctx, h, part);
    ctx.s.partition_mut(part).error_handler = Some(h);
    Ok(())
}
