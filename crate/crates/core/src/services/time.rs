//! Time management services (ARINC 653 P1, time management).

use super::{OutValue, Svc};
use crate::sched;
use crate::types::*;

/// TIMED_WAIT. A zero delay yields to processes of the same priority.
pub(super) fn timed_wait(svc: &mut Svc, delay: Duration) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if svc.ctx.s.partition(svc.part).lock_level > 0 || svc.caller_is_handler() {
        return ReturnCode::InvalidMode;
    }
    let Duration::Ticks(t) = delay else {
        return ReturnCode::InvalidParam;
    };
    sched::timed_wait_ctx(&mut svc.ctx, me, t);
    ReturnCode::NoError
}

/// PERIODIC_WAIT.
pub(super) fn periodic_wait(svc: &mut Svc) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if svc.ctx.s.partition(svc.part).lock_level > 0 || svc.caller_is_handler() {
        return ReturnCode::InvalidMode;
    }
    if !svc.ctx.proc(me).periodicity.is_periodic() {
        return ReturnCode::InvalidMode;
    }
    sched::periodic_wait_ctx(&mut svc.ctx, me);
    ReturnCode::NoError
}

/// GET_TIME.
pub(super) fn get_time(svc: &mut Svc) -> ReturnCode {
    let now = svc.ctx.s.clock_tick * svc.ctx.scn.tick_len;
    svc.put("SYSTEM_TIME", OutValue::Num(now));
    ReturnCode::NoError
}

/// REPLENISH. The new deadline may not pass the next release point of a
/// periodic process.
pub(super) fn replenish(svc: &mut Svc, budget: Duration) -> ReturnCode {
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    let Duration::Ticks(b) = budget else {
        return ReturnCode::InvalidParam;
    };
    let p = svc.ctx.proc(me);
    if p.time_capacity == Duration::Infinite {
        return ReturnCode::NoAction;
    }
    let deadline = svc.ctx.s.clock_tick + b;
    if p.release_point.is_some_and(|r| deadline > r) {
        return ReturnCode::InvalidMode;
    }
    sched::replenish_ctx(&mut svc.ctx, me, b);
    ReturnCode::NoError
}
