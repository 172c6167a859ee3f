mod common;
mod sched_oracle;

use a653_core::pipeline::Event;
use a653_core::sched::{self, first_release};
use a653_core::types::*;
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn first_release_is_the_next_frame_after_the_delay() {
    assert_eq!(first_release(10, 0, 0), 10);
    assert_eq!(first_release(10, 3, 0), 10);
    assert_eq!(first_release(10, 3, 7), 20);
    assert_eq!(first_release(10, 9, 0), 10);
    assert_eq!(first_release(10, 10, 0), 20);
    assert_eq!(first_release(4, 5, 2), 8);
}

#[test]
fn windows_follow_the_schedule_table() {
    let scn = scenario(REFERENCE);
    for s in sched_oracle::settled_states(&scn) {
        let expect = if s.clock_tick % 10 < 5 { "P1" } else { "P2" };
        assert_eq!(s.current_partition, Some(part(&scn, expect)), "tick {}", s.clock_tick);
    }
}

#[test]
fn periodic_process_is_released_every_period() {
    let scn = scenario(REFERENCE);
    let report = run(&scn, 40);
    let a = pid(&scn, "A");
    let releases: Vec<u64> = report
        .steps
        .iter()
        .filter(|(ev, _)| *ev == Event::Release(a))
        .map(|(_, st)| st.state.clock_tick)
        .collect();
    // A stops waiting for its period after tick 20; its deadline at 30
    // passes, P1 restarts and the restarted A is next released at 40.
    assert_eq!(releases, vec![10, 20, 40]);
}

#[test]
fn higher_priority_runs_first_then_fifo_then_id() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:10\nmax_priority = 9\n\
         process.L = P1:2:aperiodic::inf\nprocess.H = P1:7:aperiodic::inf\nprocess.M = P1:7:aperiodic::inf\n",
    );
    let mut s = state_at(&scn, 1);
    let (h, m, l) = (pid(&scn, "H"), pid(&scn, "M"), pid(&scn, "L"));
    assert_eq!(s.current_process, Some(h));
    let p1 = part(&scn, "P1");
    assert_eq!(sched::choose_process(&s, p1), Some(h));

    // Equal priority: the longer-ready process wins.
    s.processes.get_mut(&h).unwrap().ready_since = Some(5);
    s.processes.get_mut(&m).unwrap().ready_since = Some(4);
    assert_eq!(sched::choose_process(&s, p1), Some(m));
    s.processes.get_mut(&m).unwrap().ready_since = Some(5);
    assert_eq!(sched::choose_process(&s, p1), Some(h));

    s.processes.get_mut(&h).unwrap().state = ProcessState::Waiting;
    s.processes.get_mut(&m).unwrap().state = ProcessState::Dormant;
    assert_eq!(sched::choose_process(&s, p1), Some(l));
}

#[test]
fn deadline_miss_routes_to_the_error_handler() {
    let scn = scenario(REFERENCE);
    let report = run(&scn, 40);
    let d = pid(&scn, "D");
    // D never waits for its next period after tick 16, so its deadline at
    // tick 30 passes.
    let miss = report
        .steps
        .iter()
        .find(|(ev, _)| *ev == Event::DeadlineMiss(d))
        .expect("D misses a deadline");
    let p2 = part(&scn, "P2");
    let h = miss.1.state.partitions[p2.index()].error_handler.unwrap();
    assert_eq!(
        miss.1.state.partitions[p2.index()].error_status.first().map(|e| e.0),
        Some(ErrorCode::DeadlineMissed)
    );
    assert_eq!(miss.1.state.process(h).unwrap().state, ProcessState::Ready);
}

#[test]
fn oracle_agrees_on_seeded_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(653);
    for i in 0..40 {
        let text = sched_oracle::random_config(&mut rng);
        let scn = scenario(&text);
        if let Err(e) = sched_oracle::check(&scn) {
            panic!("config {i}: {e}\n{text}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_agrees_on_random_configs(seed in any::<u64>()) {
        let text = sched_oracle::random_config(&mut ChaCha8Rng::seed_from_u64(seed));
        let scn = scenario(&text);
        let checked = sched_oracle::check(&scn).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(checked as u64, 3 * scn.schedule.mtf + 1);
    }
}
