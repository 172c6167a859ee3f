//! Inter-partition (sampling and queuing ports) and intra-partition
//! (buffers, blackboards, semaphores, events) communication services
//! (ARINC 653 P1, inter-partition and intra-partition communication).
//!
//! Queued mechanisms are used by processes only; the initialization flow
//! gets INVALID_MODE from them.

use super::{OutValue, ServiceName, Svc};
use crate::config::{PortCfg, PortKind};
use crate::ids::*;
use crate::ipc;
use crate::state::*;
use crate::types::*;

fn own_port<'a>(svc: &Svc<'a>, port: PortId, kind: PortKind) -> Option<&'a PortCfg> {
    let scn = svc.ctx.scn;
    (port.index() < scn.ports.len())
        .then(|| scn.port(port))
        .filter(|c| c.partition == svc.part && c.kind == kind)
}

fn created_port<'a>(svc: &Svc<'a>, port: PortId, kind: PortKind) -> Option<&'a PortCfg> {
    own_port(svc, port, kind).filter(|_| svc.ctx.s.port_created(port))
}

fn blocked_outcome(svc: &mut Svc, timeout: Duration, resource: Resource, msg: Option<MessageId>, service: ServiceName) -> ReturnCode {
    if timeout.is_zero() {
        return ReturnCode::NotAvailable;
    }
    if svc.cannot_block() {
        return ReturnCode::InvalidMode;
    }
    let me = svc.caller_pid().expect("checked by cannot_block");
    ipc::block(&mut svc.ctx, me, resource, msg, timeout, service);
    ReturnCode::NoError
}

/// CREATE_SAMPLING_PORT and CREATE_QUEUING_PORT.
pub(super) fn create_port(svc: &mut Svc, port: PortId, kind: PortKind) -> ReturnCode {
    let Some(cfg) = own_port(svc, port, kind) else {
        return ReturnCode::InvalidConfig;
    };
    if svc.ctx.s.port_created(port) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    match kind {
        PortKind::Sampling => {
            // A destination created late still sees the channel's latest message.
            let msgspace = match (cfg.direction, svc.ctx.scn.channel_of(port)) {
                (Direction::Destination, Some(ch)) => {
                    svc.ctx.s.sampling_ports.get(&ch.source).and_then(|s| s.msgspace)
                }
                _ => None,
            };
            svc.ctx.s.sampling_ports.insert(
                port,
                SamplingPortRec {
                    id: port,
                    direction: cfg.direction,
                    msgspace,
                },
            );
        }
        PortKind::Queuing => {
            svc.ctx.s.queuing_ports.insert(
                port,
                QueuingPortRec {
                    id: port,
                    direction: cfg.direction,
                    max_msg_num: cfg.max_msg,
                    discipline: cfg.discipline,
                    queue: Vec::new(),
                    waiting: Vec::new(),
                },
            );
            ipc::flush(&mut svc.ctx, port);
        }
    }
    svc.put("PORT_ID", OutValue::Num(port.0 as u64));
    ReturnCode::NoError
}

/// GET_SAMPLING_PORT_ID and GET_QUEUING_PORT_ID.
pub(super) fn get_port_id(svc: &mut Svc, name: &str, kind: PortKind) -> ReturnCode {
    match svc.ctx.scn.port_id(name).filter(|p| created_port(svc, *p, kind).is_some()) {
        Some(p) => {
            svc.put("PORT_ID", OutValue::Num(p.0 as u64));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// WRITE_SAMPLING_MESSAGE.
pub(super) fn write_sampling_message(svc: &mut Svc, port: PortId, msg: Option<MessageId>) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Sampling) else {
        return ReturnCode::InvalidParam;
    };
    if cfg.direction != Direction::Source {
        return ReturnCode::InvalidMode;
    }
    let Some(m) = svc.fresh(msg) else {
        return ReturnCode::InvalidParam;
    };
    ipc::write_sampling(&mut svc.ctx, port, m);
    ReturnCode::NoError
}

/// READ_SAMPLING_MESSAGE. Reading does not consume the message.
pub(super) fn read_sampling_message(svc: &mut Svc, port: PortId) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Sampling) else {
        return ReturnCode::InvalidParam;
    };
    if cfg.direction != Direction::Destination {
        return ReturnCode::InvalidMode;
    }
    match svc.ctx.s.sampling_ports[&port].msgspace {
        Some((m, t)) => {
            svc.put("MESSAGE", OutValue::Msg(m));
            svc.put("TIMESTAMP", OutValue::Num(t));
            ReturnCode::NoError
        }
        None => ReturnCode::NotAvailable,
    }
}

/// GET_SAMPLING_PORT_STATUS.
pub(super) fn get_sampling_port_status(svc: &mut Svc, port: PortId) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Sampling) else {
        return ReturnCode::InvalidParam;
    };
    let empty = svc.ctx.s.sampling_ports[&port].msgspace.is_none();
    svc.put("PORT_DIRECTION", OutValue::Text(cfg.direction.to_string()));
    svc.put("EMPTY", OutValue::Text(empty.to_string()));
    ReturnCode::NoError
}

/// SEND_QUEUING_MESSAGE. A full queue blocks the sender for `timeout`;
/// what happens to its message when it is unblocked depends on the
/// `send_queuing` variant.
pub(super) fn send_queuing_message(svc: &mut Svc, port: PortId, msg: Option<MessageId>, timeout: Duration) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Queuing) else {
        return ReturnCode::InvalidParam;
    };
    if cfg.direction != Direction::Source {
        return ReturnCode::InvalidMode;
    }
    let Some(m) = svc.fresh(msg) else {
        return ReturnCode::InvalidParam;
    };
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    let rec = &svc.ctx.s.queuing_ports[&port];
    if rec.queue.len() < rec.max_msg_num as usize && rec.waiting.is_empty() {
        ipc::send_queuing(&mut svc.ctx, port, m, me);
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::QueuingPort(port), Some(m), ServiceName::SendQueuingMessage)
}

/// RECEIVE_QUEUING_MESSAGE.
pub(super) fn receive_queuing_message(svc: &mut Svc, port: PortId, timeout: Duration) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Queuing) else {
        return ReturnCode::InvalidParam;
    };
    if cfg.direction != Direction::Destination {
        return ReturnCode::InvalidMode;
    }
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if !svc.ctx.s.queuing_ports[&port].queue.is_empty() {
        let m = ipc::receive_queuing(&mut svc.ctx, port, me);
        svc.put("MESSAGE", OutValue::Msg(m));
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::QueuingPort(port), None, ServiceName::ReceiveQueuingMessage)
}

/// GET_QUEUING_PORT_STATUS.
pub(super) fn get_queuing_port_status(svc: &mut Svc, port: PortId) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Queuing) else {
        return ReturnCode::InvalidParam;
    };
    let rec = svc.ctx.s.queuing_ports[&port].clone();
    svc.put("NB_MESSAGE", OutValue::Num(rec.queue.len() as u64));
    svc.put("MAX_NB_MESSAGE", OutValue::Num(rec.max_msg_num as u64));
    svc.put("PORT_DIRECTION", OutValue::Text(cfg.direction.to_string()));
    svc.put("WAITING_PROCESSES", OutValue::Num(rec.waiting.len() as u64));
    ReturnCode::NoError
}

/// CLEAR_QUEUING_PORT. Discards the messages of a destination port.
pub(super) fn clear_queuing_port(svc: &mut Svc, port: PortId) -> ReturnCode {
    let Some(cfg) = created_port(svc, port, PortKind::Queuing) else {
        return ReturnCode::InvalidParam;
    };
    if cfg.direction != Direction::Destination {
        return ReturnCode::InvalidMode;
    }
    ipc::clear_queuing(&mut svc.ctx, port);
    ReturnCode::NoError
}

// ---- buffers ----

fn own_buffer(svc: &Svc, b: BufferId) -> bool {
    b.index() < svc.ctx.scn.buffers.len() && svc.ctx.scn.buffers[b.index()].partition == svc.part
}

/// CREATE_BUFFER.
pub(super) fn create_buffer(svc: &mut Svc, b: BufferId) -> ReturnCode {
    if !own_buffer(svc, b) {
        return ReturnCode::InvalidConfig;
    }
    if svc.ctx.s.buffers.contains_key(&b) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    let cfg = &svc.ctx.scn.buffers[b.index()];
    svc.ctx.s.buffers.insert(
        b,
        BufferRec {
            id: b,
            partition: svc.part,
            max_msg_num: cfg.max_msg,
            discipline: cfg.discipline,
            queue: Vec::new(),
            waiting: Vec::new(),
        },
    );
    svc.put("BUFFER_ID", OutValue::Num(b.0 as u64));
    ReturnCode::NoError
}

fn buffer_ok(svc: &Svc, b: BufferId) -> bool {
    own_buffer(svc, b) && svc.ctx.s.buffers.contains_key(&b)
}

/// SEND_BUFFER.
pub(super) fn send_buffer(svc: &mut Svc, b: BufferId, msg: Option<MessageId>, timeout: Duration) -> ReturnCode {
    if !buffer_ok(svc, b) {
        return ReturnCode::InvalidParam;
    }
    let Some(m) = svc.fresh(msg) else {
        return ReturnCode::InvalidParam;
    };
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if ipc::send_buffer(&mut svc.ctx, b, m, me) {
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::Buffer(b), Some(m), ServiceName::SendBuffer)
}

/// RECEIVE_BUFFER. Whether the head is removed depends on the
/// `receive_buffer` variant.
pub(super) fn receive_buffer(svc: &mut Svc, b: BufferId, timeout: Duration) -> ReturnCode {
    if !buffer_ok(svc, b) {
        return ReturnCode::InvalidParam;
    }
    let Some(me) = svc.caller_pid() else {
        return ReturnCode::InvalidMode;
    };
    if !svc.ctx.s.buffers[&b].queue.is_empty() {
        let m = ipc::receive_buffer(&mut svc.ctx, b, me);
        svc.put("MESSAGE", OutValue::Msg(m));
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::Buffer(b), None, ServiceName::ReceiveBuffer)
}

/// GET_BUFFER_ID.
pub(super) fn get_buffer_id(svc: &mut Svc, name: &str) -> ReturnCode {
    match svc.ctx.scn.buffer_id(name).filter(|b| buffer_ok(svc, *b)) {
        Some(b) => {
            svc.put("BUFFER_ID", OutValue::Num(b.0 as u64));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// GET_BUFFER_STATUS.
pub(super) fn get_buffer_status(svc: &mut Svc, b: BufferId) -> ReturnCode {
    if !buffer_ok(svc, b) {
        return ReturnCode::InvalidParam;
    }
    let rec = svc.ctx.s.buffers[&b].clone();
    svc.put("NB_MESSAGE", OutValue::Num(rec.queue.len() as u64));
    svc.put("MAX_NB_MESSAGE", OutValue::Num(rec.max_msg_num as u64));
    svc.put("WAITING_PROCESSES", OutValue::Num(rec.waiting.len() as u64));
    ReturnCode::NoError
}

// ---- blackboards ----

fn own_blackboard(svc: &Svc, bb: BlackboardId) -> bool {
    bb.index() < svc.ctx.scn.blackboards.len() && svc.ctx.scn.blackboards[bb.index()].partition == svc.part
}

fn blackboard_ok(svc: &Svc, bb: BlackboardId) -> bool {
    own_blackboard(svc, bb) && svc.ctx.s.blackboards.contains_key(&bb)
}

/// CREATE_BLACKBOARD.
pub(super) fn create_blackboard(svc: &mut Svc, bb: BlackboardId) -> ReturnCode {
    if !own_blackboard(svc, bb) {
        return ReturnCode::InvalidConfig;
    }
    if svc.ctx.s.blackboards.contains_key(&bb) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    svc.ctx.s.blackboards.insert(
        bb,
        BlackboardRec {
            id: bb,
            partition: svc.part,
            msgspace: None,
            empty_indicator: EmptyIndicator::Empty,
            waiting: Vec::new(),
        },
    );
    svc.put("BLACKBOARD_ID", OutValue::Num(bb.0 as u64));
    ReturnCode::NoError
}

/// DISPLAY_BLACKBOARD. Wakes every waiting reader.
pub(super) fn display_blackboard(svc: &mut Svc, bb: BlackboardId, msg: Option<MessageId>) -> ReturnCode {
    if !blackboard_ok(svc, bb) {
        return ReturnCode::InvalidParam;
    }
    let Some(m) = svc.fresh(msg) else {
        return ReturnCode::InvalidParam;
    };
    ipc::display_blackboard(&mut svc.ctx, bb, m);
    ReturnCode::NoError
}

/// READ_BLACKBOARD.
pub(super) fn read_blackboard(svc: &mut Svc, bb: BlackboardId, timeout: Duration) -> ReturnCode {
    if !blackboard_ok(svc, bb) {
        return ReturnCode::InvalidParam;
    }
    if let Some(m) = svc.ctx.s.blackboards[&bb].msgspace {
        svc.put("MESSAGE", OutValue::Msg(m));
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::Blackboard(bb), None, ServiceName::ReadBlackboard)
}

/// CLEAR_BLACKBOARD.
pub(super) fn clear_blackboard(svc: &mut Svc, bb: BlackboardId) -> ReturnCode {
    if !blackboard_ok(svc, bb) {
        return ReturnCode::InvalidParam;
    }
    ipc::clear_blackboard(&mut svc.ctx, bb);
    ReturnCode::NoError
}

/// GET_BLACKBOARD_ID.
pub(super) fn get_blackboard_id(svc: &mut Svc, name: &str) -> ReturnCode {
    match svc.ctx.scn.blackboard_id(name).filter(|b| blackboard_ok(svc, *b)) {
        Some(b) => {
            svc.put("BLACKBOARD_ID", OutValue::Num(b.0 as u64));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// GET_BLACKBOARD_STATUS.
pub(super) fn get_blackboard_status(svc: &mut Svc, bb: BlackboardId) -> ReturnCode {
    if !blackboard_ok(svc, bb) {
        return ReturnCode::InvalidParam;
    }
    let rec = svc.ctx.s.blackboards[&bb].clone();
    let indicator = match rec.empty_indicator {
        EmptyIndicator::Empty => "EMPTY",
        EmptyIndicator::Occupied => "OCCUPIED",
    };
    svc.put("EMPTY_INDICATOR", OutValue::Text(indicator.into()));
    svc.put("WAITING_PROCESSES", OutValue::Num(rec.waiting.len() as u64));
    ReturnCode::NoError
}

// ---- semaphores ----

fn own_semaphore(svc: &Svc, sem: SemaphoreId) -> bool {
    sem.index() < svc.ctx.scn.semaphores.len() && svc.ctx.scn.semaphores[sem.index()].partition == svc.part
}

fn semaphore_ok(svc: &Svc, sem: SemaphoreId) -> bool {
    own_semaphore(svc, sem) && svc.ctx.s.semaphores.contains_key(&sem)
}

/// CREATE_SEMAPHORE.
pub(super) fn create_semaphore(svc: &mut Svc, sem: SemaphoreId) -> ReturnCode {
    if !own_semaphore(svc, sem) {
        return ReturnCode::InvalidConfig;
    }
    if svc.ctx.s.semaphores.contains_key(&sem) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    let cfg = &svc.ctx.scn.semaphores[sem.index()];
    svc.ctx.s.semaphores.insert(
        sem,
        SemaphoreRec {
            id: sem,
            partition: svc.part,
            value: cfg.initial,
            max_value: cfg.max,
            discipline: cfg.discipline,
            waiting: Vec::new(),
        },
    );
    svc.put("SEMAPHORE_ID", OutValue::Num(sem.0 as u64));
    ReturnCode::NoError
}

/// WAIT_SEMAPHORE.
pub(super) fn wait_semaphore(svc: &mut Svc, sem: SemaphoreId, timeout: Duration) -> ReturnCode {
    if !semaphore_ok(svc, sem) {
        return ReturnCode::InvalidParam;
    }
    if ipc::try_wait_semaphore(&mut svc.ctx, sem) {
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::Semaphore(sem), None, ServiceName::WaitSemaphore)
}

/// SIGNAL_SEMAPHORE.
pub(super) fn signal_semaphore(svc: &mut Svc, sem: SemaphoreId) -> ReturnCode {
    if !semaphore_ok(svc, sem) {
        return ReturnCode::InvalidParam;
    }
    ipc::signal_semaphore(&mut svc.ctx, sem)
}

/// GET_SEMAPHORE_ID.
pub(super) fn get_semaphore_id(svc: &mut Svc, name: &str) -> ReturnCode {
    match svc.ctx.scn.semaphore_id(name).filter(|x| semaphore_ok(svc, *x)) {
        Some(x) => {
            svc.put("SEMAPHORE_ID", OutValue::Num(x.0 as u64));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// GET_SEMAPHORE_STATUS.
pub(super) fn get_semaphore_status(svc: &mut Svc, sem: SemaphoreId) -> ReturnCode {
    if !semaphore_ok(svc, sem) {
        return ReturnCode::InvalidParam;
    }
    let rec = svc.ctx.s.semaphores[&sem].clone();
    svc.put("CURRENT_VALUE", OutValue::Num(rec.value as u64));
    svc.put("MAXIMUM_VALUE", OutValue::Num(rec.max_value as u64));
    svc.put("WAITING_PROCESSES", OutValue::Num(rec.waiting.len() as u64));
    ReturnCode::NoError
}

// ---- events ----

fn own_event(svc: &Svc, ev: EventId) -> bool {
    ev.index() < svc.ctx.scn.events.len() && svc.ctx.scn.events[ev.index()].partition == svc.part
}

fn event_ok(svc: &Svc, ev: EventId) -> bool {
    own_event(svc, ev) && svc.ctx.s.event_objs.contains_key(&ev)
}

/// CREATE_EVENT. Events are created DOWN.
pub(super) fn create_event(svc: &mut Svc, ev: EventId) -> ReturnCode {
    if !own_event(svc, ev) {
        return ReturnCode::InvalidConfig;
    }
    if svc.ctx.s.event_objs.contains_key(&ev) {
        return ReturnCode::NoAction;
    }
    if svc.mode() == PartitionMode::Normal {
        return ReturnCode::InvalidMode;
    }
    svc.ctx.s.event_objs.insert(
        ev,
        EventObjRec {
            id: ev,
            partition: svc.part,
            flag: EventFlag::Down,
            waiting: Vec::new(),
        },
    );
    svc.put("EVENT_ID", OutValue::Num(ev.0 as u64));
    ReturnCode::NoError
}

/// SET_EVENT. Wakes every waiter.
pub(super) fn set_event(svc: &mut Svc, ev: EventId) -> ReturnCode {
    if !event_ok(svc, ev) {
        return ReturnCode::InvalidParam;
    }
    ipc::set_event(&mut svc.ctx, ev);
    ReturnCode::NoError
}

/// RESET_EVENT.
pub(super) fn reset_event(svc: &mut Svc, ev: EventId) -> ReturnCode {
    if !event_ok(svc, ev) {
        return ReturnCode::InvalidParam;
    }
    ipc::reset_event(&mut svc.ctx, ev);
    ReturnCode::NoError
}

/// WAIT_EVENT.
pub(super) fn wait_event(svc: &mut Svc, ev: EventId, timeout: Duration) -> ReturnCode {
    if !event_ok(svc, ev) {
        return ReturnCode::InvalidParam;
    }
    if svc.ctx.s.event_objs[&ev].flag == EventFlag::Up {
        return ReturnCode::NoError;
    }
    blocked_outcome(svc, timeout, Resource::Event(ev), None, ServiceName::WaitEvent)
}

/// GET_EVENT_ID.
pub(super) fn get_event_id(svc: &mut Svc, name: &str) -> ReturnCode {
    match svc.ctx.scn.event_id(name).filter(|e| event_ok(svc, *e)) {
        Some(e) => {
            svc.put("EVENT_ID", OutValue::Num(e.0 as u64));
            ReturnCode::NoError
        }
        None => ReturnCode::InvalidConfig,
    }
}

/// GET_EVENT_STATUS.
pub(super) fn get_event_status(svc: &mut Svc, ev: EventId) -> ReturnCode {
    if !event_ok(svc, ev) {
        return ReturnCode::InvalidParam;
    }
    let rec = svc.ctx.s.event_objs[&ev].clone();
    let state = match rec.flag {
        EventFlag::Up => "UP",
        EventFlag::Down => "DOWN",
    };
    svc.put("EVENT_STATE", OutValue::Text(state.into()));
    svc.put("WAITING_PROCESSES", OutValue::Num(rec.waiting.len() as u64));
    ReturnCode::NoError
}
