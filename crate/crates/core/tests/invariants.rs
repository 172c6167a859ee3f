mod common;

use a653_core::ids::*;
use a653_core::invariants::{self, check_conservation, check_invariants, holds, INVARIANT_COUNT};
use a653_core::state::*;
use a653_core::types::*;
use a653_core::{Scenario, SystemState};
use common::*;
use proptest::prelude::*;

fn base() -> (Scenario, SystemState) {
    let scn = scenario(REFERENCE);
    let s = state_at(&scn, 12);
    assert!(check_invariants(&scn, &s).is_empty());
    (scn, s)
}

fn running(s: &SystemState) -> ProcessId {
    s.current_process.expect("a process runs at tick 12")
}

/// One targeted corruption per invariant.
fn corrupt(scn: &Scenario, s: &mut SystemState, n: u8) {
    let p1 = part(scn, "P1");
    let p2 = part(scn, "P2");
    let a = pid(scn, "A");
    let d = pid(scn, "D");
    match n {
        1 => s.processes.get_mut(&a).unwrap().partition = p2,
        2 | 3 => {
            s.partitions[p1.index()].mode = PartitionMode::ColdStart;
            s.partitions[p1.index()].lock_level = 1;
            s.partitions[p1.index()].lock_holder = Some(LockHolder::MainFlow);
        }
        4 => {
            let ids: Vec<_> = s.processes_of(p2).map(|p| p.id).collect();
            for id in ids {
                s.processes.remove(&id);
            }
        }
        5 => s.partitions[p2.index()].mode = PartitionMode::Idle,
        6 => {
            let r = running(s);
            let other = if r == a { pid(scn, "B") } else { a };
            s.processes.get_mut(&other).unwrap().state = ProcessState::Running;
        }
        7 | 10 => s.partitions[p1.index()].mode = PartitionMode::WarmStart,
        8 => s.partitions[p1.index()].lock_level = 1,
        9 => s.partitions[p1.index()].lock_holder = Some(LockHolder::Process(a)),
        11 => s.current_process = Some(d),
        12 => s.partitions[s.current_partition.unwrap().index()].mode = PartitionMode::Idle,
        13 => {
            let r = running(s);
            s.processes.get_mut(&r).unwrap().state = ProcessState::Ready;
        }
        14 => {
            let p = s.processes.get_mut(&pid(scn, "B")).unwrap();
            p.delayed_started = true;
            p.delay_time = None;
        }
        15 => s.processes.get_mut(&pid(scn, "B")).unwrap().release_point = Some(20),
        16 => s.processes.get_mut(&a).unwrap().periodicity = Periodicity::Periodic { period: 0 },
        17 => s.queuing_ports.values_mut().next().unwrap().max_msg_num += 1,
        18 => {
            let q = s.queuing_ports.values_mut().next().unwrap();
            for i in 0..=q.max_msg_num {
                q.queue.push((MessageId(90 + i), 0));
            }
        }
        19 => s.buffers.values_mut().next().unwrap().max_msg_num += 1,
        20 => {
            let b = s.buffers.values_mut().next().unwrap();
            for i in 0..=b.max_msg_num {
                b.queue.push((MessageId(90 + i), 0));
            }
        }
        21 => {
            let bb = s.blackboards.values_mut().next().unwrap();
            bb.empty_indicator = EmptyIndicator::Occupied;
            bb.msgspace = None;
        }
        22 => {
            let sem = s.semaphores.values_mut().next().unwrap();
            sem.value = sem.max_value + 1;
        }
        23 => {
            let b = s.buffers.values_mut().next().unwrap();
            let outsider = if b.partition == p1 { d } else { a };
            b.waiting.push(Waiter {
                pid: outsider,
                since: 0,
                msg: None,
            });
        }
        24 => {
            let r = running(s);
            s.buffers.values_mut().next().unwrap().waiting.push(Waiter {
                pid: r,
                since: 0,
                msg: None,
            });
        }
        25 => {
            let h = s.partitions[p2.index()].error_handler.unwrap();
            s.processes.get_mut(&h).unwrap().current_priority -= 1;
        }
        26 => s.partitions[p2.index()].error_handler = Some(d),
        27 => {
            let h = s.partitions[p2.index()].error_handler.unwrap();
            s.processes.get_mut(&h).unwrap().created_by = p1;
        }
        _ => unreachable!(),
    }
}

#[test]
fn reference_run_keeps_every_invariant() {
    let scn = scenario(REFERENCE);
    let report = run(&scn, 40);
    assert!(report.violation.is_none(), "{:?}", report.violation);
    for (_, step) in &report.steps {
        assert!(check_invariants(&scn, &step.state).is_empty());
        assert_eq!(check_conservation(&step.state), None);
    }
}

#[test]
fn each_invariant_detects_its_corruption() {
    let (scn, s) = base();
    for n in 1..=INVARIANT_COUNT {
        let mut bad = s.clone();
        corrupt(&scn, &mut bad, n);
        assert!(!holds(&scn, &bad, n), "invariant {n} missed: {}", invariants::describe(n));
        assert!(check_invariants(&scn, &bad).contains(&n));
    }
}

#[test]
fn conservation_detects_a_lost_message() {
    let (_, mut s) = base();
    s.used_messages.insert(MessageId(7));
    s.fates.insert(MessageId(7), Fate::Queued);
    assert!(check_conservation(&s).is_some());
    s.fates.insert(MessageId(7), Fate::Delivered);
    assert_eq!(check_conservation(&s), None);
}

#[test]
fn conservation_detects_a_duplicated_message() {
    let (_, mut s) = base();
    s.fates.insert(MessageId(7), Fate::Queued);
    for b in s.buffers.values_mut() {
        b.queue.push((MessageId(7), 0));
    }
    for q in s.queuing_ports.values_mut() {
        q.queue.push((MessageId(7), 0));
    }
    assert!(check_conservation(&s).is_some());
}

#[test]
fn validate_reports_violations_in_order() {
    let (scn, mut s) = base();
    corrupt(&scn, &mut s, 22);
    corrupt(&scn, &mut s, 16);
    let v = invariants::validate(&scn, &s).unwrap_err();
    assert_eq!(
        v,
        vec![invariants::Violation::Invariant(16), invariants::Violation::Invariant(22)]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random walks over the enabled events of the reference scenario never
    /// leave the invariant set.
    #[test]
    fn random_walks_keep_invariants(choices in prop::collection::vec(any::<prop::sample::Index>(), 1..400)) {
        let scn = scenario(REFERENCE);
        let mut s = a653_core::new_state(&scn);
        for c in choices {
            let evs = a653_core::pipeline::free_events(&scn, &s, 30);
            if evs.is_empty() {
                break;
            }
            let ev = &evs[c.index(evs.len())];
            let step = a653_core::pipeline::apply(&scn, &s, ev).expect("enabled event applies");
            prop_assert_eq!(check_invariants(&scn, &step.state), Vec::<u8>::new(), "after {}", ev.describe(&scn));
            prop_assert_eq!(check_conservation(&step.state), None);
            s = step.state;
        }
    }
}

/// The reference module with every process offered the default service menu.
fn wide() -> Scenario {
    let text: String = REFERENCE
        .lines()
        .filter(|l| !l.starts_with("explore.menu") && !l.starts_with("explore.messages"))
        .map(|l| format!("{l}\n"))
        .collect();
    scenario(&(text + "explore.messages = 3\nexplore.timeouts = 0, 2, inf\nexplore.delays = 0, 3\nexplore.priorities = 1, 6\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_walks_with_default_menus_keep_invariants(
        choices in prop::collection::vec(any::<prop::sample::Index>(), 1..600),
    ) {
        let scn = wide();
        let mut s = a653_core::new_state(&scn);
        for c in choices {
            let evs = a653_core::pipeline::free_events(&scn, &s, 60);
            if evs.is_empty() {
                break;
            }
            let ev = &evs[c.index(evs.len())];
            let step = a653_core::pipeline::apply(&scn, &s, ev).expect("enabled event applies");
            prop_assert_eq!(check_invariants(&scn, &step.state), Vec::<u8>::new(), "after {}", ev.describe(&scn));
            prop_assert_eq!(check_conservation(&step.state), None, "after {}", ev.describe(&scn));
            s = step.state;
        }
    }
}
