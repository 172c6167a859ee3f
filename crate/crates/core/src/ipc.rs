//! Message movement and waiter bookkeeping for ports, buffers, blackboards,
//! semaphores and events.
//!
//! A queuing channel connects one source port to one destination port.
//! Messages wait in the source queue until the destination has room, so the
//! channel as a whole holds at most the sum of both bounds.

use crate::config::PortKind;
use crate::ids::*;
use crate::services::ServiceName;
use crate::state::*;
use crate::types::*;

/// Removes `pid` from every waiter list. A message held by a blocked sender
/// gets `fate`; it is returned.
pub(crate) fn leave_waiters(ctx: &mut Ctx, pid: ProcessId, fate: Fate) -> Option<MessageId> {
    let mut held = None;
    for r in ctx.s.resources() {
        let ws = ctx.s.waiters_mut(r).expect("resource exists");
        if let Some(i) = ws.iter().position(|w| w.pid == pid) {
            held = held.or(ws.remove(i).msg);
        }
    }
    if let Some(m) = held {
        ctx.set_fate(m, fate);
    }
    held
}

/// Drops every trace of a blocked call of `pid`.
pub(crate) fn purge_process(ctx: &mut Ctx, pid: ProcessId) {
    leave_waiters(ctx, pid, Fate::Aborted);
    ctx.s.pending.remove(&pid);
    ctx.s.timeout_trigger.remove(&pid);
}

/// Deletes the intra-partition objects of `part`. Ports are configured
/// statically and survive; queued messages of deleted buffers are aborted.
pub(crate) fn delete_partition_objects(ctx: &mut Ctx, part: PartitionId) {
    let doomed: Vec<BufferId> = ctx
        .s
        .buffers
        .values()
        .filter(|b| b.partition == part)
        .map(|b| b.id)
        .collect();
    for b in doomed {
        let rec = ctx.s.buffers.remove(&b).expect("listed");
        for (m, _) in rec.queue {
            ctx.set_fate(m, Fate::Aborted);
        }
        for w in rec.waiting {
            if let Some(m) = w.msg {
                ctx.set_fate(m, Fate::Aborted);
            }
        }
    }
    ctx.s.blackboards.retain(|_, b| b.partition != part);
    ctx.s.semaphores.retain(|_, x| x.partition != part);
    ctx.s.event_objs.retain(|_, e| e.partition != part);
}

/// Index of the waiter served next.
pub(crate) fn pick_waiter(s: &SystemState, ws: &[Waiter], discipline: Discipline) -> Option<usize> {
    if ws.is_empty() {
        return None;
    }
    match discipline {
        Discipline::Fifo => Some(0),
        Discipline::Priority => {
            let prio = |w: &Waiter| s.process(w.pid).map_or(0, |p| p.current_priority);
            let best = ws.iter().map(prio).max().expect("non-empty");
            ws.iter().position(|w| prio(w) == best)
        }
    }
}

/// Completes the blocked call of `pid`: Waiting goes to Ready and
/// WaitandSuspend to Suspend.
pub(crate) fn wake(ctx: &mut Ctx, pid: ProcessId, code: ReturnCode, msg: Option<MessageId>) {
    let to = match ctx.proc(pid).state {
        ProcessState::Waiting => ProcessState::Ready,
        ProcessState::WaitandSuspend => ProcessState::Suspend,
        _ => return,
    };
    ctx.set_state(pid, to, Cause::Unblock);
    ctx.s.timeout_trigger.remove(&pid);
    ctx.s.pending.remove(&pid);
    ctx.notes.push(Note::Completed { pid, code, msg });
    ctx.s.need_procresch = true;
}

/// Blocks the running process `pid` on a resource.
pub(crate) fn block(
    ctx: &mut Ctx,
    pid: ProcessId,
    resource: Resource,
    msg: Option<MessageId>,
    timeout: Duration,
    service: ServiceName,
) {
    let clock = ctx.s.clock_tick;
    ctx.set_state(pid, ProcessState::Waiting, Cause::Block);
    ctx.proc_mut(pid).wait = Some(WaitReason::Resource(resource));
    if let Some(m) = msg {
        ctx.consume_message(m, true);
    }
    ctx.s
        .waiters_mut(resource)
        .expect("resource exists")
        .push(Waiter { pid, since: clock, msg });
    if let Duration::Ticks(t) = timeout {
        ctx.s.timeout_trigger.insert(pid, (ProcessState::Ready, clock + t));
    }
    ctx.s.pending.insert(
        pid,
        PendingCall {
            service,
            resource: Some(resource),
        },
    );
    ctx.s.need_procresch = true;
}

fn take_waiter(ctx: &mut Ctx, r: Resource, discipline: Discipline) -> Option<Waiter> {
    let ws = ctx.s.waiters(r)?.clone();
    let i = pick_waiter(&ctx.s, &ws, discipline)?;
    Some(ctx.s.waiters_mut(r).expect("exists").remove(i))
}

// ---- queuing ports ----

/// Puts a fresh message into a source queue that has room.
pub(crate) fn send_queuing(ctx: &mut Ctx, port: PortId, msg: MessageId, by: ProcessId) {
    let clock = ctx.s.clock_tick;
    ctx.consume_message(msg, true);
    ctx.s.queuing_ports.get_mut(&port).expect("created").queue.push((msg, clock));
    let mech = ctx.mechanism_of_port(port);
    ctx.notes.push(Note::Sent { mech, msg, by });
    flush(ctx, port);
}

fn channel_ends(ctx: &Ctx, port: PortId) -> (Option<PortId>, Option<PortId>) {
    match ctx.scn.channel_of(port) {
        Some(ch) if ctx.scn.port(port).kind == PortKind::Queuing => (Some(ch.source), ch.dests.first().copied()),
        _ => match ctx.scn.port(port).direction {
            Direction::Source => (Some(port), None),
            Direction::Destination => (None, Some(port)),
        },
    }
}

/// Moves messages along the channel of `port` until nothing changes:
/// waiting receivers are served, the source drains into the destination,
/// and blocked senders refill the source.
pub(crate) fn flush(ctx: &mut Ctx, port: PortId) {
    let (src, dst) = channel_ends(ctx, port);
    let src = src.filter(|p| ctx.s.queuing_ports.contains_key(p));
    let dst = dst.filter(|p| ctx.s.queuing_ports.contains_key(p));
    loop {
        let mut changed = false;
        if let Some(d) = dst {
            while !ctx.s.queuing_ports[&d].queue.is_empty() {
                let disc = ctx.s.queuing_ports[&d].discipline;
                let Some(w) = take_waiter(ctx, Resource::QueuingPort(d), disc) else { break };
                let (m, _) = ctx.s.queuing_ports.get_mut(&d).expect("created").queue.remove(0);
                ctx.set_fate(m, Fate::Delivered);
                let mech = ctx.mechanism_of_port(d);
                ctx.notes.push(Note::Received { mech, msg: m, by: w.pid });
                wake(ctx, w.pid, ReturnCode::NoError, Some(m));
                changed = true;
            }
        }
        if let (Some(sp), Some(d)) = (src, dst) {
            let room = {
                let dr = &ctx.s.queuing_ports[&d];
                dr.queue.len() < dr.max_msg_num as usize
            };
            if room && !ctx.s.queuing_ports[&sp].queue.is_empty() {
                let item = ctx.s.queuing_ports.get_mut(&sp).expect("created").queue.remove(0);
                ctx.s.queuing_ports.get_mut(&d).expect("created").queue.push(item);
                changed = true;
            }
        }
        if let Some(sp) = src {
            let (room, disc) = {
                let sr = &ctx.s.queuing_ports[&sp];
                (sr.queue.len() < sr.max_msg_num as usize, sr.discipline)
            };
            if room {
                if let Some(w) = take_waiter(ctx, Resource::QueuingPort(sp), disc) {
                    let m = w.msg.expect("senders carry a message");
                    match ctx.toggles.send_queuing {
                        Variant::Corrected => {
                            let clock = ctx.s.clock_tick;
                            ctx.s.queuing_ports.get_mut(&sp).expect("created").queue.push((m, clock));
                            let mech = ctx.mechanism_of_port(sp);
                            ctx.notes.push(Note::Sent { mech, msg: m, by: w.pid });
                        }
                        Variant::AsWritten => ctx.note(format!("{m} of unblocked sender {} not enqueued", ctx.scn.process_name(w.pid))),
                    }
                    wake(ctx, w.pid, ReturnCode::NoError, Some(m));
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Takes the head of a non-empty destination queue.
pub(crate) fn receive_queuing(ctx: &mut Ctx, port: PortId, by: ProcessId) -> MessageId {
    let (m, _) = ctx.s.queuing_ports.get_mut(&port).expect("created").queue.remove(0);
    ctx.set_fate(m, Fate::Delivered);
    let mech = ctx.mechanism_of_port(port);
    ctx.notes.push(Note::Received { mech, msg: m, by });
    flush(ctx, port);
    m
}

pub(crate) fn clear_queuing(ctx: &mut Ctx, port: PortId) {
    let drained = std::mem::take(&mut ctx.s.queuing_ports.get_mut(&port).expect("created").queue);
    for (m, _) in drained {
        ctx.set_fate(m, Fate::Aborted);
    }
    flush(ctx, port);
}

// ---- sampling ports ----

pub(crate) fn write_sampling(ctx: &mut Ctx, port: PortId, msg: MessageId) {
    let clock = ctx.s.clock_tick;
    ctx.consume_message(msg, false);
    ctx.s.sampling_ports.get_mut(&port).expect("created").msgspace = Some((msg, clock));
    if let Some(ch) = ctx.scn.channel_of(port) {
        for d in ch.dests.clone() {
            if let Some(rec) = ctx.s.sampling_ports.get_mut(&d) {
                rec.msgspace = Some((msg, clock));
            }
        }
    }
}

// ---- buffers ----

/// Sends a fresh message: handed to a waiting receiver, else queued if
/// there is room. Returns false when the buffer is full.
pub(crate) fn send_buffer(ctx: &mut Ctx, buf: BufferId, msg: MessageId, by: ProcessId) -> bool {
    let (full, disc) = {
        let b = &ctx.s.buffers[&buf];
        (b.queue.len() >= b.max_msg_num as usize, b.discipline)
    };
    let receiver_waiting = ctx.s.buffers[&buf].waiting.iter().any(|w| w.msg.is_none());
    if full && !receiver_waiting {
        return false;
    }
    ctx.consume_message(msg, true);
    ctx.notes.push(Note::Sent {
        mech: Mechanism::Buffer(buf),
        msg,
        by,
    });
    if receiver_waiting {
        let w = take_waiter(ctx, Resource::Buffer(buf), disc).expect("receiver waiting");
        ctx.set_fate(msg, Fate::Delivered);
        ctx.notes.push(Note::Received {
            mech: Mechanism::Buffer(buf),
            msg,
            by: w.pid,
        });
        wake(ctx, w.pid, ReturnCode::NoError, Some(msg));
    } else {
        let clock = ctx.s.clock_tick;
        ctx.s.buffers.get_mut(&buf).expect("created").queue.push((msg, clock));
    }
    true
}

/// Receives from a non-empty buffer.
pub(crate) fn receive_buffer(ctx: &mut Ctx, buf: BufferId, by: ProcessId) -> MessageId {
    let m = match ctx.toggles.receive_buffer {
        Variant::Corrected => ctx.s.buffers.get_mut(&buf).expect("created").queue.remove(0).0,
        Variant::AsWritten => ctx.s.buffers[&buf].queue[0].0,
    };
    ctx.set_fate(m, Fate::Delivered);
    ctx.notes.push(Note::Received {
        mech: Mechanism::Buffer(buf),
        msg: m,
        by,
    });
    let (room, disc) = {
        let b = &ctx.s.buffers[&buf];
        (b.queue.len() < b.max_msg_num as usize, b.discipline)
    };
    if room {
        if let Some(w) = take_waiter(ctx, Resource::Buffer(buf), disc) {
            let sent = w.msg.expect("senders carry a message");
            let clock = ctx.s.clock_tick;
            ctx.s.buffers.get_mut(&buf).expect("created").queue.push((sent, clock));
            ctx.notes.push(Note::Sent {
                mech: Mechanism::Buffer(buf),
                msg: sent,
                by: w.pid,
            });
            wake(ctx, w.pid, ReturnCode::NoError, Some(sent));
        }
    }
    m
}

// ---- blackboards ----

pub(crate) fn display_blackboard(ctx: &mut Ctx, bb: BlackboardId, msg: MessageId) {
    ctx.consume_message(msg, false);
    let rec = ctx.s.blackboards.get_mut(&bb).expect("created");
    rec.msgspace = Some(msg);
    rec.empty_indicator = EmptyIndicator::Occupied;
    let readers = std::mem::take(&mut rec.waiting);
    ctx.notes.push(Note::Displayed { bb, msg });
    for w in readers {
        wake(ctx, w.pid, ReturnCode::NoError, Some(msg));
    }
}

pub(crate) fn clear_blackboard(ctx: &mut Ctx, bb: BlackboardId) {
    let rec = ctx.s.blackboards.get_mut(&bb).expect("created");
    rec.msgspace = None;
    rec.empty_indicator = EmptyIndicator::Empty;
}

// ---- semaphores ----

/// Takes one unit if available.
pub(crate) fn try_wait_semaphore(ctx: &mut Ctx, sem: SemaphoreId) -> bool {
    let rec = ctx.s.semaphores.get_mut(&sem).expect("created");
    if rec.value > 0 {
        rec.value -= 1;
        true
    } else {
        false
    }
}

/// Wakes one waiter, else increments; NO_ACTION at the maximum.
pub(crate) fn signal_semaphore(ctx: &mut Ctx, sem: SemaphoreId) -> ReturnCode {
    let disc = ctx.s.semaphores[&sem].discipline;
    if let Some(w) = take_waiter(ctx, Resource::Semaphore(sem), disc) {
        wake(ctx, w.pid, ReturnCode::NoError, None);
        return ReturnCode::NoError;
    }
    let rec = ctx.s.semaphores.get_mut(&sem).expect("created");
    if rec.value >= rec.max_value {
        return ReturnCode::NoAction;
    }
    rec.value += 1;
    ReturnCode::NoError
}

// ---- events ----

pub(crate) fn set_event(ctx: &mut Ctx, ev: EventId) {
    let rec = ctx.s.event_objs.get_mut(&ev).expect("created");
    rec.flag = EventFlag::Up;
    let waiters = std::mem::take(&mut rec.waiting);
    for w in waiters {
        wake(ctx, w.pid, ReturnCode::NoError, None);
    }
}

pub(crate) fn reset_event(ctx: &mut Ctx, ev: EventId) {
    ctx.s.event_objs.get_mut(&ev).expect("created").flag = EventFlag::Down;
}
