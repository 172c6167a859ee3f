mod common;

use a653_core::ids::MessageId;
use a653_core::invariants::check_conservation;
use a653_core::pipeline::{Event, RunReport};
use a653_core::services::OutValue;
use a653_core::state::{Fate, Note};
use a653_core::types::*;
use common::*;

/// `(tick, service, return code, message out)` of every finished call,
/// including blocked calls that completed later.
fn outcomes(report: &RunReport) -> Vec<(u64, String, ReturnCode, Option<MessageId>)> {
    let mut out = Vec::new();
    for (ev, step) in &report.steps {
        let tick = step.state.clock_tick;
        if let (Event::Call(c), Some(call)) = (ev, &step.call) {
            if call.blocked.is_none() {
                let msg = call.out_values.iter().find_map(|(_, v)| match v {
                    OutValue::Msg(m) => Some(*m),
                    _ => None,
                });
                out.push((tick, c.request.service().to_string(), call.return_code, msg));
            }
        }
        for n in &step.notes {
            if let Note::Completed { code, msg, .. } = n {
                out.push((tick, "completed".to_string(), *code, *msg));
            }
        }
    }
    out
}

const ONE_PARTITION: &str = "schedule.mtf = 10\nschedule.window.1 = P1:0:10\nmax_priority = 10\n\
    process.S = P1:5:aperiodic::inf\nprocess.R = P1:3:aperiodic::inf\n";

fn buffer_scenario(variant: &str) -> a653_core::Scenario {
    scenario(&format!(
        "{ONE_PARTITION}buffer.BUF = P1:2:fifo\nvariant.receive_buffer = {variant}\n\
         script.1 = 1:S:SEND_BUFFER:BUF:0:fresh\n\
         script.2 = 2:S:SEND_BUFFER:BUF:0:fresh\n\
         script.3 = 2:S:SUSPEND_SELF:inf\n\
         script.4 = 3:R:RECEIVE_BUFFER:BUF:0\n\
         script.5 = 4:R:RECEIVE_BUFFER:BUF:0\n"
    ))
}

fn buffer_lengths(report: &RunReport) -> Vec<usize> {
    let mut by_tick = std::collections::BTreeMap::new();
    for (_, step) in &report.steps {
        let len = step.state.buffers.values().next().map_or(0, |b| b.queue.len());
        by_tick.insert(step.state.clock_tick, len);
    }
    by_tick.into_values().collect()
}

#[test]
fn buffer_receives_in_fifo_order_and_dequeues() {
    let scn = buffer_scenario("corrected");
    let report = run(&scn, 20);
    assert!(report.violation.is_none());
    let recv: Vec<_> = outcomes(&report)
        .into_iter()
        .filter(|o| o.1 == "RECEIVE_BUFFER")
        .collect();
    assert_eq!(recv.len(), 2);
    assert_eq!(recv[0].3, Some(MessageId(0)));
    assert_eq!(recv[1].3, Some(MessageId(1)));
    let lens = buffer_lengths(&report);
    assert_eq!(lens[2], 2);
    assert_eq!(lens[3], 1);
    assert_eq!(lens[4], 0);
}

#[test]
fn as_written_receive_buffer_never_dequeues() {
    let scn = buffer_scenario("as_written");
    let report = run(&scn, 20);
    let recv: Vec<_> = outcomes(&report)
        .into_iter()
        .filter(|o| o.1 == "RECEIVE_BUFFER")
        .collect();
    assert_eq!(recv[0].3, recv[1].3);
    let lens = buffer_lengths(&report);
    assert!(lens.windows(2).skip(2).all(|w| w[1] >= w[0]), "{lens:?}");
    assert!(report.violation.is_some());
}

fn channel_scenario(variant: &str) -> a653_core::Scenario {
    scenario(&format!(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:5\nschedule.window.2 = P2:5:10\n\
         process.S = P1:3:aperiodic::inf\nprocess.R = P2:3:aperiodic::inf\n\
         port.QS = queuing:src:1:fifo\nport.QS.partition = P1\n\
         port.QD = queuing:dst:1:fifo\nport.QD.partition = P2\nchannel.QCH = QS->QD\n\
         variant.send_queuing = {variant}\n\
         script.1 = 11:S:SEND_QUEUING_MESSAGE:QS:0:fresh\n\
         script.2 = 12:S:SEND_QUEUING_MESSAGE:QS:0:fresh\n\
         script.3 = 13:S:SEND_QUEUING_MESSAGE:QS:10:fresh\n\
         script.4 = 16:R:RECEIVE_QUEUING_MESSAGE:QD:0\n"
    ))
}

#[test]
fn blocked_sender_message_enters_the_queue_when_space_frees() {
    let scn = channel_scenario("corrected");
    let report = run(&scn, 20);
    assert!(report.violation.is_none());
    let s = &report.final_state;
    let mut queued: Vec<MessageId> = s.queuing_ports.values().flat_map(|p| p.queue.iter().map(|q| q.0)).collect();
    queued.sort();
    assert_eq!(queued, vec![MessageId(1), MessageId(2)]);
    assert!(outcomes(&report).contains(&(16, "completed".into(), ReturnCode::NoError, Some(MessageId(2)))));
}

#[test]
fn as_written_send_queuing_loses_the_blocked_message() {
    let scn = channel_scenario("as_written");
    let report = run(&scn, 20);
    let s = &report.final_state;
    assert!(s.queuing_ports.values().all(|p| p.queue.iter().all(|q| q.0 != MessageId(2))));
    assert_eq!(s.fates.get(&MessageId(2)), Some(&Fate::Queued));
    assert!(check_conservation(s).is_some());
    let (tick, _, v) = report.violation.expect("conservation fails");
    assert_eq!(tick, 16);
    assert!(v[0].to_string().contains("m2"));
}

#[test]
fn full_queue_without_timeout_is_not_available() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:5\nschedule.window.2 = P2:5:10\n\
         process.S = P1:3:aperiodic::inf\nprocess.R = P2:3:aperiodic::inf\n\
         port.QS = queuing:src:1:fifo\nport.QS.partition = P1\n\
         port.QD = queuing:dst:1:fifo\nport.QD.partition = P2\nchannel.QCH = QS->QD\n\
         script.1 = 11:S:SEND_QUEUING_MESSAGE:QS:0:fresh\n\
         script.2 = 11:S:SEND_QUEUING_MESSAGE:QS:0:fresh\n\
         script.3 = 11:S:SEND_QUEUING_MESSAGE:QS:0:fresh\n",
    );
    let codes: Vec<ReturnCode> = outcomes(&run(&scn, 12)).into_iter().map(|o| o.2).collect();
    assert_eq!(codes, vec![ReturnCode::NoError, ReturnCode::NoError, ReturnCode::NotAvailable]);
}

#[test]
fn waiting_receiver_gets_the_next_message_directly() {
    let scn = scenario(&format!(
        "{ONE_PARTITION}buffer.BUF = P1:1:fifo\n\
         script.1 = 1:S:SUSPEND_SELF:3\n\
         script.2 = 1:R:RECEIVE_BUFFER:BUF:inf\n\
         script.3 = 5:S:SEND_BUFFER:BUF:0:fresh\n"
    ));
    let report = run(&scn, 8);
    assert!(report.violation.is_none());
    assert!(outcomes(&report).contains(&(5, "completed".into(), ReturnCode::NoError, Some(MessageId(0)))));
    let s = &report.final_state;
    assert_eq!(s.fates.get(&MessageId(0)), Some(&Fate::Delivered));
    assert!(s.buffers.values().all(|b| b.queue.is_empty()));
}

#[test]
fn receive_times_out() {
    let scn = scenario(&format!(
        "{ONE_PARTITION}buffer.BUF = P1:1:fifo\n\
         script.1 = 1:S:RECEIVE_BUFFER:BUF:2\n"
    ));
    let report = run(&scn, 6);
    assert!(outcomes(&report).contains(&(3, "completed".into(), ReturnCode::TimedOut, None)));
    let s = report.final_state;
    assert!(s.buffers.values().all(|b| b.waiting.is_empty()));
}

#[test]
fn blackboard_display_read_clear() {
    let scn = scenario(&format!(
        "{ONE_PARTITION}blackboard.BB = P1\n\
         script.1 = 1:S:DISPLAY_BLACKBOARD:BB:fresh\n\
         script.2 = 1:S:READ_BLACKBOARD:BB:0\n\
         script.3 = 1:S:READ_BLACKBOARD:BB:0\n\
         script.4 = 2:S:CLEAR_BLACKBOARD:BB\n\
         script.5 = 2:S:READ_BLACKBOARD:BB:0\n"
    ));
    let o = outcomes(&run(&scn, 3));
    let got: Vec<_> = o.iter().map(|x| (x.1.as_str(), x.2, x.3)).collect();
    assert_eq!(
        got,
        vec![
            ("DISPLAY_BLACKBOARD", ReturnCode::NoError, None),
            ("READ_BLACKBOARD", ReturnCode::NoError, Some(MessageId(0))),
            ("READ_BLACKBOARD", ReturnCode::NoError, Some(MessageId(0))),
            ("CLEAR_BLACKBOARD", ReturnCode::NoError, None),
            ("READ_BLACKBOARD", ReturnCode::NotAvailable, None),
        ]
    );
}

#[test]
fn semaphore_wait_blocks_until_signal() {
    let scn = scenario(&format!(
        "{ONE_PARTITION}semaphore.SEM = P1:0:1:fifo\n\
         script.1 = 1:S:WAIT_SEMAPHORE:SEM:inf\n\
         script.2 = 3:R:SIGNAL_SEMAPHORE:SEM\n\
         script.3 = 4:S:SIGNAL_SEMAPHORE:SEM\n\
         script.4 = 4:S:SIGNAL_SEMAPHORE:SEM\n"
    ));
    let report = run(&scn, 5);
    let o = outcomes(&report);
    assert!(o.contains(&(3, "completed".into(), ReturnCode::NoError, None)));
    let signals: Vec<ReturnCode> = o.iter().filter(|x| x.1 == "SIGNAL_SEMAPHORE").map(|x| x.2).collect();
    // The first signal hands the unit to S directly; the value then goes
    // to its maximum of 1 and the last signal has no room.
    assert_eq!(signals, vec![ReturnCode::NoError, ReturnCode::NoError, ReturnCode::NoAction]);
    assert_eq!(report.final_state.semaphores.values().next().unwrap().value, 1);
}

#[test]
fn sampling_message_crosses_partitions() {
    let scn = scenario(
        "schedule.mtf = 10\nschedule.window.1 = P1:0:5\nschedule.window.2 = P2:5:10\n\
         process.W = P1:3:aperiodic::inf\nprocess.R = P2:3:aperiodic::inf\n\
         port.SS = sampling:src\nport.SS.partition = P1\n\
         port.SD = sampling:dst\nport.SD.partition = P2\nchannel.SCH = SS->SD\n\
         script.1 = 1:W:WRITE_SAMPLING_MESSAGE:SS:fresh\n\
         script.2 = 6:R:READ_SAMPLING_MESSAGE:SD\n",
    );
    let o = outcomes(&run(&scn, 8));
    assert_eq!(o.last().map(|x| (x.2, x.3)), Some((ReturnCode::NoError, Some(MessageId(0)))));
}
