//! Partition management services (ARINC 653 P1, partition management).

use super::{OutValue, Svc};
use crate::kernel;
use crate::types::*;

/// GET_PARTITION_STATUS.
pub(super) fn get_partition_status(svc: &mut Svc) -> ReturnCode {
    let rec = svc.ctx.s.partition(svc.part).clone();
    svc.put("IDENTIFIER", OutValue::Num(svc.part.0 as u64));
    svc.put("PERIOD", OutValue::Num(svc.ctx.scn.partition(svc.part).period));
    svc.put("OPERATING_MODE", OutValue::Text(rec.mode.to_string()));
    svc.put("LOCK_LEVEL", OutValue::Num(rec.lock_level as u64));
    svc.put("START_CONDITION", OutValue::Text(rec.start_condition.to_string()));
    ReturnCode::NoError
}

/// SET_PARTITION_MODE.
pub(super) fn set_partition_mode(svc: &mut Svc, mode: PartitionMode) -> ReturnCode {
    let current = svc.mode();
    if mode == PartitionMode::Normal && current == PartitionMode::Normal {
        return ReturnCode::NoAction;
    }
    if mode == PartitionMode::WarmStart && current == PartitionMode::ColdStart {
        return ReturnCode::InvalidMode;
    }
    if mode == PartitionMode::Normal && svc.ctx.s.processes_of(svc.part).next().is_none() {
        return ReturnCode::InvalidMode;
    }
    if !kernel::mode_allowed(current, mode) {
        return ReturnCode::InvalidMode;
    }
    kernel::enter_mode(&mut svc.ctx, svc.part, mode, StartCondition::PartitionRestart);
    ReturnCode::NoError
}
