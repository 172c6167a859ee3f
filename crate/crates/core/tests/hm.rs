mod common;

use a653_core::hm::{self, ErrorSource, HmError, Resolved};
use a653_core::invariants::check_invariants;
use a653_core::sched;
use a653_core::types::*;
use common::*;

#[test]
fn process_level_entry_without_handler_applies_its_action() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    let src = ErrorSource::Process(pid(&scn, "A"));
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::ApplicationError, src),
        Ok(Resolved::Partition {
            part: part(&scn, "P1"),
            action: RecoveryAction::PartitionColdRestart
        })
    );
    let (after, _) = hm::raise_error(&scn, &s, ErrorCode::ApplicationError, src).unwrap();
    let p1 = part(&scn, "P1");
    assert_eq!(after.partition(p1).mode, PartitionMode::ColdStart);
    assert_eq!(after.partition(p1).start_condition, StartCondition::HmPartitionRestart);
    assert_eq!(after.processes_of(p1).count(), 0);
    assert!(check_invariants(&scn, &after).is_empty());
}

#[test]
fn process_level_entry_activates_the_handler() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    let p2 = part(&scn, "P2");
    let h = s.partition(p2).error_handler.unwrap();
    let src = ErrorSource::Process(pid(&scn, "E"));
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::ApplicationError, src),
        Ok(Resolved::Handler { part: p2, handler: h })
    );
    let (after, _) = hm::raise_error(&scn, &s, ErrorCode::ApplicationError, src).unwrap();
    assert_eq!(after.process(h).unwrap().state, ProcessState::Ready);
    assert_eq!(
        after.partition(p2).error_status,
        vec![(ErrorCode::ApplicationError, Some(pid(&scn, "E")))]
    );
}

#[test]
fn error_in_the_handler_falls_back_to_idle() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    let p2 = part(&scn, "P2");
    let h = s.partition(p2).error_handler.unwrap();
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::ApplicationError, ErrorSource::Process(h)),
        Ok(Resolved::Partition {
            part: p2,
            action: RecoveryAction::PartitionIdle
        })
    );
    let (after, _) = hm::raise_error(&scn, &s, ErrorCode::ApplicationError, ErrorSource::Process(h)).unwrap();
    assert_eq!(after.partition(p2).mode, PartitionMode::Idle);
    assert!(check_invariants(&scn, &after).is_empty());
}

#[test]
fn module_error_shuts_the_module_down() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::PowerFail, ErrorSource::Module),
        Ok(Resolved::Module(RecoveryAction::ModuleShutdown))
    );
    let (down, _) = hm::raise_error(&scn, &s, ErrorCode::PowerFail, ErrorSource::Module).unwrap();
    assert!(down.module_shutdown);
    assert!(sched::ticktock(&scn, &down).is_err());
    assert_eq!(
        hm::raise_error(&scn, &down, ErrorCode::PowerFail, ErrorSource::Module).unwrap_err(),
        HmError::ModuleDown
    );
    assert!(a653_core::pipeline::free_events(&scn, &down, 100).is_empty());
}

#[test]
fn unconfigured_codes_are_reported() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::NumericError, ErrorSource::Process(pid(&scn, "A"))),
        Err(HmError::Unconfigured(ErrorCode::NumericError))
    );
}

#[test]
fn multi_partition_table_catches_missing_codes_and_module_levels() {
    let scn = scenario(
        "schedule.mtf = 4\nschedule.window.1 = P1:0:4\nprocess.A = P1:1:aperiodic::inf\n\
         hm.P1.STACK_OVERFLOW = MODULE:PARTITION_IDLE\n\
         hm.multi.P1.STACK_OVERFLOW = PARTITION:PARTITION_WARM_RESTART\n\
         hm.multi.P1.MEMORY_VIOLATION = PARTITION:PARTITION_COLD_RESTART\n",
    );
    let s = state_at(&scn, 1);
    let src = ErrorSource::Process(pid(&scn, "A"));
    let p1 = part(&scn, "P1");
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::StackOverflow, src),
        Ok(Resolved::Partition {
            part: p1,
            action: RecoveryAction::PartitionWarmRestart
        })
    );
    assert_eq!(
        hm::resolve(&scn, &s, ErrorCode::MemoryViolation, src),
        Ok(Resolved::Partition {
            part: p1,
            action: RecoveryAction::PartitionColdRestart
        })
    );
}

#[test]
fn raise_application_error_service_routes_through_hm() {
    let scn = scenario(&format!(
        "{REFERENCE}script.20 = 13:B:RAISE_APPLICATION_ERROR:APPLICATION_ERROR\n"
    ));
    let report = run(&scn, 14);
    assert!(report.violation.is_none());
    let p1 = part(&scn, "P1");
    let first = report
        .steps
        .iter()
        .find(|(_, st)| st.state.partition(p1).start_condition == StartCondition::HmPartitionRestart)
        .map(|(_, st)| st.state.clock_tick);
    assert_eq!(first, Some(13));
}
