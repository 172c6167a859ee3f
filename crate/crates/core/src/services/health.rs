//! Health monitoring services (ARINC 653 P1, health monitoring).

use super::{OutValue, Svc};
use crate::config::Caller;
use crate::hm::{self, ErrorSource, HmError};
use crate::types::*;

/// REPORT_APPLICATION_MESSAGE.
pub(super) fn report_application_message(svc: &mut Svc, length: u32) -> ReturnCode {
    if length == 0 {
        return ReturnCode::InvalidParam;
    }
    svc.ctx.note(format!("application message of {length} bytes"));
    ReturnCode::NoError
}

/// CREATE_ERROR_HANDLER.
pub(super) fn create_error_handler(svc: &mut Svc) -> ReturnCode {
    match hm::create_handler_ctx(&mut svc.ctx, svc.part) {
        Ok(()) => ReturnCode::NoError,
        Err(hm::HandlerError::NotConfigured) => ReturnCode::InvalidConfig,
        Err(hm::HandlerError::AlreadyExists) => ReturnCode::NoAction,
        Err(hm::HandlerError::InvalidMode) => ReturnCode::InvalidMode,
    }
}

/// GET_ERROR_STATUS. Only the error handler may ask; errors come out
/// oldest first.
pub(super) fn get_error_status(svc: &mut Svc) -> ReturnCode {
    if !svc.caller_is_handler() {
        return ReturnCode::InvalidConfig;
    }
    let rec = svc.ctx.s.partition_mut(svc.part);
    if rec.error_status.is_empty() {
        return ReturnCode::NoAction;
    }
    let (code, pid) = rec.error_status.remove(0);
    svc.put("ERROR_CODE", OutValue::Text(code.to_string()));
    if let Some(p) = pid {
        svc.put("FAILED_PROCESS_ID", OutValue::Process(p));
    }
    ReturnCode::NoError
}

/// RAISE_APPLICATION_ERROR.
pub(super) fn raise_application_error(svc: &mut Svc, code: ErrorCode) -> ReturnCode {
    if code != ErrorCode::ApplicationError {
        return ReturnCode::InvalidParam;
    }
    let source = match svc.caller {
        Caller::Process(p) => ErrorSource::Process(p),
        Caller::Main(part) => ErrorSource::Partition(part),
    };
    match hm::raise_ctx(&mut svc.ctx, code, source) {
        Ok(()) => {}
        Err(HmError::Unconfigured(c)) => svc.ctx.note(format!("{c} not in any HM table")),
        Err(HmError::ModuleDown) => unreachable!("services are rejected once the module is down"),
    }
    ReturnCode::NoError
}
