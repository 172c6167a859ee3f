//! The executable model as a labelled transition system.
//!
//! [`Event`] names every step the module can take. In free interleaving any
//! enabled event may fire; the canonical tick pipeline fires them in a fixed
//! order:
//!
//! ```text
//! ticktock -> time_out -> release points -> deadline misses / HM
//!          -> partition_schedule -> process_schedule -> init -> scripted calls
//! ```
//!
//! Service calls and the clock tick are only enabled once the kernel has
//! settled, that is when no time-out, release, deadline miss, reschedule or
//! pending initialization is outstanding.

use crate::config::{Caller, InitPolicy, PortKind, Scenario, StartPolicy};
use crate::hm::{self, ErrorSource, HmError};
use crate::ids::*;
use crate::invariants::{violations, Violation};
use crate::sched;
use crate::services::{self, OutValue, Request, ServiceCall};
use crate::state::*;
use crate::trace::TraceLine;
use crate::types::*;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Tick,
    TimeOut,
    Release(ProcessId),
    DeadlineMiss(ProcessId),
    PartitionSchedule,
    ProcessSchedule,
    /// The whole initialization flow of a partition as one step.
    InitAuto(PartitionId),
    /// One creation of the initialization flow.
    InitStep(PartitionId),
    Call(ServiceCall),
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Tick => "ticktock",
            Event::TimeOut => "time_out",
            Event::Release(_) => "periodicproc_reach_releasepoint",
            Event::DeadlineMiss(_) => "deadline_miss",
            Event::PartitionSchedule => "partition_schedule",
            Event::ProcessSchedule => "process_schedule",
            Event::InitAuto(_) => "init",
            Event::InitStep(_) => "init_step",
            Event::Call(_) => "service",
        }
    }

    /// Scenario-named rendering, e.g. `service B:STOP(C)`.
    pub fn describe(&self, scn: &Scenario) -> String {
        match self {
            Event::Release(p) | Event::DeadlineMiss(p) => format!("{} {}", self.name(), scn.process_name(*p)),
            Event::InitAuto(p) | Event::InitStep(p) => format!("{} {}", self.name(), scn.partition_name(*p)),
            Event::Call(c) => format!("service {}:{}", caller_name(scn, c.caller), c.request.describe(scn)),
            _ => self.name().to_string(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn caller_name(scn: &Scenario, c: Caller) -> String {
    match c {
        Caller::Process(p) => scn.process_name(p).to_string(),
        Caller::Main(part) => format!("@{}", scn.partition_name(part)),
    }
}

/// Outcome of a service call step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallOutcome {
    pub return_code: ReturnCode,
    pub blocked: Option<PendingCall>,
    pub out_values: Vec<(&'static str, OutValue)>,
}

#[derive(Clone, Debug)]
pub struct Step {
    pub state: SystemState,
    pub notes: Vec<Note>,
    pub call: Option<CallOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("module is shut down")]
    ModuleDown,
    #[error("event not enabled: {0}")]
    NotEnabled(String),
    #[error(transparent)]
    Service(#[from] services::ServiceError),
}

/// Creation requests of a partition's initialization flow, in order.
pub fn init_requests(scn: &Scenario, part: PartitionId) -> Vec<Request> {
    let mut out: Vec<Request> = scn.processes_of(part).map(|proc| Request::CreateProcess { proc }).collect();
    if scn.partition(part).handler.is_some() {
        out.push(Request::CreateErrorHandler);
    }
    for (i, p) in scn.ports.iter().enumerate() {
        if p.partition == part {
            let port = PortId(i as u16);
            out.push(match p.kind {
                PortKind::Sampling => Request::CreateSamplingPort { port },
                PortKind::Queuing => Request::CreateQueuingPort { port },
            });
        }
    }
    for (i, b) in scn.buffers.iter().enumerate() {
        if b.partition == part {
            out.push(Request::CreateBuffer { buffer: BufferId(i as u16) });
        }
    }
    for (i, b) in scn.blackboards.iter().enumerate() {
        if b.partition == part {
            out.push(Request::CreateBlackboard { bb: BlackboardId(i as u16) });
        }
    }
    for (i, x) in scn.semaphores.iter().enumerate() {
        if x.partition == part {
            out.push(Request::CreateSemaphore { sem: SemaphoreId(i as u16) });
        }
    }
    for (i, e) in scn.events.iter().enumerate() {
        if e.partition == part {
            out.push(Request::CreateEvent { event: EventId(i as u16) });
        }
    }
    out
}

/// Start requests implied by the configured start policies.
pub fn start_requests(scn: &Scenario, part: PartitionId) -> Vec<Request> {
    scn.processes_of(part)
        .filter_map(|proc| match scn.process(proc).start {
            StartPolicy::Start => Some(Request::Start { proc }),
            StartPolicy::Delayed(delay) => Some(Request::DelayedStart { proc, delay }),
            StartPolicy::None => None,
        })
        .collect()
}

/// Whether the script drives the initialization flow of `part`.
pub fn scripted_init(scn: &Scenario, part: PartitionId) -> bool {
    scn.script.iter().any(|c| c.caller == Caller::Main(part))
}

fn init_pending_part(scn: &Scenario, s: &SystemState) -> Option<PartitionId> {
    let part = s.current_partition?;
    let rec = s.partition(part);
    if !rec.mode.is_start() {
        return None;
    }
    let pending = match scn.explore.init {
        InitPolicy::Auto => rec.init_step == 0,
        InitPolicy::Free => (rec.init_step as usize) < init_requests(scn, part).len(),
    };
    pending.then_some(part)
}

/// Kernel events enabled in `s`, in canonical order.
pub fn internal_events(scn: &Scenario, s: &SystemState) -> Vec<Event> {
    let mut out = Vec::new();
    if s.module_shutdown {
        return out;
    }
    if !sched::due_timeouts(s).is_empty() {
        out.push(Event::TimeOut);
    }
    out.extend(sched::due_releases(s).into_iter().map(Event::Release));
    out.extend(sched::detect_deadline_miss(s).into_iter().map(Event::DeadlineMiss));
    if s.need_reschedule {
        out.push(Event::PartitionSchedule);
    }
    if s.need_procresch {
        out.push(Event::ProcessSchedule);
    }
    if let Some(part) = init_pending_part(scn, s) {
        out.push(match scn.explore.init {
            InitPolicy::Auto => Event::InitAuto(part),
            InitPolicy::Free => Event::InitStep(part),
        });
    }
    out
}

pub fn settled(scn: &Scenario, s: &SystemState) -> bool {
    !s.module_shutdown && internal_events(scn, s).is_empty()
}

/// Who may call a service now, if anyone.
pub fn active_caller(scn: &Scenario, s: &SystemState) -> Option<Caller> {
    if let Some(pid) = s.current_process {
        return Some(Caller::Process(pid));
    }
    let part = s.current_partition?;
    let rec = s.partition(part);
    let init_done = match scn.explore.init {
        InitPolicy::Auto => rec.init_step > 0,
        InitPolicy::Free => rec.init_step as usize >= init_requests(scn, part).len(),
    };
    (rec.mode.is_start() && init_done).then_some(Caller::Main(part))
}

/// Events enabled under free interleaving with the clock bounded by
/// `max_tick`. Service calls come from the exploration menus.
pub fn free_events(scn: &Scenario, s: &SystemState, max_tick: u64) -> Vec<Event> {
    let mut out = internal_events(scn, s);
    if !out.is_empty() || s.module_shutdown {
        return out;
    }
    match active_caller(scn, s) {
        Some(Caller::Process(pid)) => out.extend(services::process_candidates(scn, s, pid).into_iter().map(|request| {
            Event::Call(ServiceCall {
                caller: Caller::Process(pid),
                request,
            })
        })),
        Some(Caller::Main(part)) if scn.explore.init == InitPolicy::Free => {
            out.extend(services::main_candidates(scn, s, part).into_iter().map(|request| {
                Event::Call(ServiceCall {
                    caller: Caller::Main(part),
                    request,
                })
            }))
        }
        _ => {}
    }
    if s.clock_tick < max_tick {
        out.push(Event::Tick);
    }
    out
}

fn call_main(ctx_state: &mut SystemState, notes: &mut Vec<Note>, scn: &Scenario, part: PartitionId, request: Request) -> Option<ReturnCode> {
    let call = ServiceCall {
        caller: Caller::Main(part),
        request,
    };
    let r = services::invoke(scn, ctx_state, &call, scn.variants).ok()?;
    *ctx_state = r.state;
    notes.extend(r.notes);
    Some(r.return_code)
}

/// Fires one event.
pub fn apply(scn: &Scenario, s: &SystemState, ev: &Event) -> Result<Step, StepError> {
    if s.module_shutdown {
        return Err(StepError::ModuleDown);
    }
    let plain = |ctx: Ctx| {
        let (state, notes) = ctx.finish();
        Ok(Step { state, notes, call: None })
    };
    let not_enabled = || StepError::NotEnabled(ev.name().to_string());
    match ev {
        Event::Tick => {
            let mut ctx = Ctx::new(scn, s);
            sched::ticktock_ctx(&mut ctx).map_err(|_| StepError::ModuleDown)?;
            plain(ctx)
        }
        Event::TimeOut => {
            let mut ctx = Ctx::new(scn, s);
            sched::time_out_ctx(&mut ctx);
            plain(ctx)
        }
        Event::Release(pid) => {
            if !sched::due_releases(s).contains(pid) {
                return Err(not_enabled());
            }
            let mut ctx = Ctx::new(scn, s);
            sched::reach_releasepoint_ctx(&mut ctx, *pid);
            plain(ctx)
        }
        Event::DeadlineMiss(pid) => {
            if !sched::detect_deadline_miss(s).contains(pid) {
                return Err(not_enabled());
            }
            let mut ctx = Ctx::new(scn, s);
            ctx.proc_mut(*pid).deadline_time = None;
            match hm::raise_ctx(&mut ctx, ErrorCode::DeadlineMissed, ErrorSource::Process(*pid)) {
                Ok(()) => {}
                Err(HmError::Unconfigured(c)) => ctx.note(format!("{c} of {} not in any HM table", scn.process_name(*pid))),
                Err(HmError::ModuleDown) => return Err(StepError::ModuleDown),
            }
            plain(ctx)
        }
        Event::PartitionSchedule => {
            let mut ctx = Ctx::new(scn, s);
            sched::partition_schedule_ctx(&mut ctx);
            plain(ctx)
        }
        Event::ProcessSchedule => {
            let mut ctx = Ctx::new(scn, s);
            sched::process_schedule_ctx(&mut ctx);
            plain(ctx)
        }
        Event::InitAuto(part) => {
            if init_pending_part(scn, s) != Some(*part) {
                return Err(not_enabled());
            }
            let mut state = s.clone();
            let mut notes = Vec::new();
            for r in init_requests(scn, *part) {
                call_main(&mut state, &mut notes, scn, *part, r);
            }
            state.partition_mut(*part).init_step = 1;
            if !scripted_init(scn, *part) {
                for r in start_requests(scn, *part) {
                    call_main(&mut state, &mut notes, scn, *part, r);
                }
                call_main(
                    &mut state,
                    &mut notes,
                    scn,
                    *part,
                    Request::SetPartitionMode {
                        mode: PartitionMode::Normal,
                    },
                );
            }
            Ok(Step { state, notes, call: None })
        }
        Event::InitStep(part) => {
            if init_pending_part(scn, s) != Some(*part) {
                return Err(not_enabled());
            }
            let step = s.partition(*part).init_step;
            let request = init_requests(scn, *part)[step as usize].clone();
            let mut state = s.clone();
            let mut notes = Vec::new();
            call_main(&mut state, &mut notes, scn, *part, request);
            state.partition_mut(*part).init_step = step + 1;
            Ok(Step { state, notes, call: None })
        }
        Event::Call(call) => {
            let r = services::invoke(scn, s, call, scn.variants)?;
            Ok(Step {
                state: r.state,
                notes: r.notes,
                call: Some(CallOutcome {
                    return_code: r.return_code,
                    blocked: r.blocked,
                    out_values: r.out_values,
                }),
            })
        }
    }
}

/// Options of a pipeline run.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub ticks: u64,
    /// Stop at the first invariant or conservation violation.
    pub stop_on_violation: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub trace: Vec<TraceLine>,
    pub final_state: SystemState,
    /// First violation found, with the tick and event that produced it.
    pub violation: Option<(u64, String, Vec<Violation>)>,
    /// Every state after a step, paired with the event; for inspection.
    pub steps: Vec<(Event, Step)>,
}

/// Runs the canonical pipeline plus the scenario script for `ticks` ticks.
pub fn run(scn: &Scenario, opts: RunOptions) -> RunReport {
    let mut runner = Runner {
        scn,
        s: new_state(scn),
        trace: Vec::new(),
        violation: None,
        steps: Vec::new(),
        stop: opts.stop_on_violation,
    };
    if let Err(v) = crate::invariants::validate(scn, &runner.s) {
        runner.violation = Some((0, "initial".into(), v));
        return runner.finish();
    }
    if opts.ticks == 0 {
        return runner.finish();
    }
    runner.settle_and_call();
    for _ in 0..opts.ticks {
        if runner.halted() || runner.s.module_shutdown {
            break;
        }
        if !runner.fire(Event::Tick) {
            break;
        }
        runner.settle_and_call();
    }
    runner.finish()
}

struct Runner<'a> {
    scn: &'a Scenario,
    s: SystemState,
    trace: Vec<TraceLine>,
    violation: Option<(u64, String, Vec<Violation>)>,
    steps: Vec<(Event, Step)>,
    stop: bool,
}

impl Runner<'_> {
    fn halted(&self) -> bool {
        self.stop && self.violation.is_some()
    }

    fn fire(&mut self, ev: Event) -> bool {
        if self.halted() {
            return false;
        }
        let step = match apply(self.scn, &self.s, &ev) {
            Ok(step) => step,
            Err(e) => {
                self.trace.push(TraceLine::event(self.scn, &self.s, &ev, format!("rejected: {e}")));
                return false;
            }
        };
        self.trace.push(TraceLine::from_step(self.scn, &self.s, &ev, &step));
        let v = violations(self.scn, &step.state);
        if !v.is_empty() && self.violation.is_none() {
            self.violation = Some((step.state.clock_tick, ev.describe(self.scn), v));
        }
        self.s = step.state.clone();
        self.steps.push((ev, step));
        true
    }

    /// Drains kernel work in canonical order.
    fn settle(&mut self) {
        loop {
            if self.halted() || self.s.module_shutdown {
                return;
            }
            let events = internal_events(self.scn, &self.s);
            let Some(first) = events.into_iter().next() else { return };
            if !self.fire(first) {
                return;
            }
        }
    }

    fn settle_and_call(&mut self) {
        self.settle();
        let tick = self.s.clock_tick;
        let calls: Vec<_> = self.scn.script.iter().filter(|c| c.tick == tick).cloned().collect();
        for c in calls {
            if self.halted() || self.s.module_shutdown {
                return;
            }
            let call = ServiceCall {
                caller: c.caller,
                request: c.request.clone(),
            };
            if !services::caller_active(&self.s, c.caller) {
                let ev = Event::Call(call);
                self.trace
                    .push(TraceLine::event(self.scn, &self.s, &ev, "skipped: caller not running".to_string()));
                continue;
            }
            self.fire(Event::Call(call));
            self.settle();
        }
    }

    fn finish(self) -> RunReport {
        RunReport {
            trace: self.trace,
            final_state: self.s,
            violation: self.violation,
            steps: self.steps,
        }
    }
}
