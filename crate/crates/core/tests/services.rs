mod common;

use a653_core::config::Caller;
use a653_core::pipeline::{self, Event};
use a653_core::services::{self, OutValue, Request, ServiceCall, ServiceError, ServiceName};
use a653_core::types::*;
use a653_core::Scenario;
use common::*;
use proptest::prelude::*;

fn wide() -> Scenario {
    let text: String = REFERENCE
        .lines()
        .filter(|l| !l.starts_with("explore."))
        .map(|l| format!("{l}\n"))
        .collect();
    scenario(&(text + "explore.messages = 2\nexplore.timeouts = 0, 2\nexplore.delays = 0, 3\nexplore.priorities = 1, 9\n"))
}

fn call(scn: &Scenario, caller: &str, service: ServiceName, args: &[&str]) -> ServiceCall {
    ServiceCall {
        caller: Caller::Process(pid(scn, caller)),
        request: Request::parse(scn, service, args).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// A call that returns an error code leaves the state exactly as it was.
    #[test]
    fn error_returns_leave_state_unchanged(choices in prop::collection::vec(any::<prop::sample::Index>(), 1..500)) {
        let scn = wide();
        let mut s = a653_core::new_state(&scn);
        for c in choices {
            let evs = pipeline::free_events(&scn, &s, 40);
            if evs.is_empty() {
                break;
            }
            let ev = &evs[c.index(evs.len())];
            let step = pipeline::apply(&scn, &s, ev).unwrap();
            if let (Event::Call(_), Some(out)) = (ev, &step.call) {
                if out.blocked.is_none() && out.return_code != ReturnCode::NoError {
                    prop_assert_eq!(&step.state, &s, "{} returned {}", ev.describe(&scn), out.return_code);
                }
            }
            s = step.state;
        }
    }
}

#[test]
fn only_the_running_process_may_call() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    let idle = if s.current_process == Some(pid(&scn, "B")) { "C" } else { "B" };
    let c = call(&scn, idle, ServiceName::GetTime, &[]);
    assert_eq!(
        services::invoke(&scn, &s, &c, scn.variants).unwrap_err(),
        ServiceError::CallerNotRunning
    );
}

#[test]
fn get_process_status_reports_the_record() {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    let me = scn.process_name(s.current_process.unwrap()).to_string();
    let r = services::invoke(&scn, &s, &call(&scn, &me, ServiceName::GetProcessStatus, &["A"]), scn.variants).unwrap();
    assert_eq!(r.return_code, ReturnCode::NoError);
    assert_eq!(r.state, s);
    let a = s.process(pid(&scn, "A")).unwrap();
    assert_eq!(r.out("PROCESS_STATE"), Some(&OutValue::Text(a.state.standard().to_string())));
    assert_eq!(r.out("CURRENT_PRIORITY"), Some(&OutValue::Num(5)));

    // Processes of another partition are not addressable.
    let r = services::invoke(&scn, &s, &call(&scn, &me, ServiceName::GetProcessStatus, &["D"]), scn.variants).unwrap();
    assert_eq!(r.return_code, ReturnCode::InvalidParam);
    assert_eq!(r.state, s);
}

#[test]
fn stop_then_start_an_aperiodic_process() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:10\nmax_priority = 10\n\
         process.M = P1:5:aperiodic::inf\nprocess.W = P1:3:aperiodic::inf\n\
         script.1 = 1:M:STOP:W\nscript.2 = 2:M:STOP:W\nscript.3 = 3:M:START:W\nscript.4 = 3:M:START:W\n",
    );
    let report = run(&scn, 4);
    let codes: Vec<(String, ReturnCode)> = report
        .steps
        .iter()
        .filter_map(|(ev, st)| match (ev, &st.call) {
            (Event::Call(c), Some(o)) => Some((c.request.service().to_string(), o.return_code)),
            _ => None,
        })
        .collect();
    assert_eq!(
        codes,
        vec![
            ("STOP".into(), ReturnCode::NoError),
            ("STOP".into(), ReturnCode::NoAction),
            ("START".into(), ReturnCode::NoError),
            ("START".into(), ReturnCode::NoAction),
        ]
    );
    assert_eq!(
        report.final_state.process(pid(&scn, "W")).unwrap().state,
        ProcessState::Ready
    );
}

#[test]
fn raising_priority_preempts_the_caller() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:10\nmax_priority = 10\n\
         process.M = P1:5:aperiodic::inf\nprocess.W = P1:3:aperiodic::inf\n\
         script.1 = 1:M:SET_PRIORITY:W:8\n",
    );
    let report = run(&scn, 2);
    assert_eq!(report.final_state.current_process, Some(pid(&scn, "W")));
}

#[test]
fn preemption_lock_holds_off_a_higher_priority_process() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:10\nmax_priority = 10\n\
         process.M = P1:5:aperiodic::inf\nprocess.W = P1:3:aperiodic::inf\n\
         script.1 = 1:M:TIMED_WAIT:2\n\
         script.2 = 2:W:LOCK_PREEMPTION\n\
         script.3 = 5:W:UNLOCK_PREEMPTION\n",
    );
    let report = run(&scn, 6);
    let m = pid(&scn, "M");
    let w = pid(&scn, "W");
    for (_, st) in &report.steps {
        let t = st.state.clock_tick;
        if (3..5).contains(&t) {
            assert_eq!(st.state.current_process, Some(w), "tick {t}");
        }
    }
    assert_eq!(report.final_state.current_process, Some(m));
}

#[test]
fn catalog_names_round_trip() {
    assert_eq!(ServiceName::ALL.len(), 57);
    for s in ServiceName::ALL {
        assert_eq!(services::service_by_name(s.as_str()).unwrap(), *s);
    }
}
