//! Refinement checks of one concrete step against the abstract model.
//!
//! Guard strengthening: every process state step a concrete event performs
//! must be a row of the abstract relation for the partition's mode class
//! before the step, and every effect must belong to an abstract event the
//! concrete event is paired with.
//!
//! Simulation: the contents of each queued mechanism after the step must be
//! the contents before it plus the messages sent and minus the messages
//! received or aborted, and a sender whose blocked call completes must find
//! its message inserted or delivered.

use super::pairing::{concrete_name, AbstractEvent, Pairing};
use super::{FindingKind, Issue};
use crate::config::{PortKind, Scenario};
use crate::ids::*;
use crate::kernel::{ModeClass, TransitionModelVariant, TransitionRelation};
use crate::pipeline::{Event, Step};
use crate::services::ServiceName;
use crate::state::*;
use crate::trace::mechanism_name;
use crate::types::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct RefinementOptions {
    pub model: TransitionModelVariant,
    pub pairing: Pairing,
    pub guard_strengthening: bool,
    pub simulation: bool,
}

impl RefinementOptions {
    pub fn new(model: TransitionModelVariant) -> Self {
        RefinementOptions {
            model,
            pairing: Pairing::default_table(),
            guard_strengthening: true,
            simulation: true,
        }
    }
}

/// State names as drawn in the ARINC 653 process state diagram, where the
/// suspended-while-waiting state is part of Waiting.
fn figure_state(s: ProcessState) -> ProcessState {
    match s {
        ProcessState::WaitandSuspend => ProcessState::Waiting,
        other => other,
    }
}

/// `(mode class, from->to)` witness class of a process step.
pub fn witness_class(class: ModeClass, from: ProcessState, to: ProcessState) -> String {
    format!("({class}, {}->{})", figure_state(from), figure_state(to))
}

fn describe_process(scn: &Scenario, s: &SystemState, pid: ProcessId) -> String {
    let Some(p) = s.process(pid) else {
        return format!("{} not yet created", scn.process_name(pid));
    };
    let kind = if p.periodicity.is_periodic() { "periodic" } else { "aperiodic" };
    let mut out = format!(
        "{} before the step: state={} {kind} delayed_started={} delay_time={}",
        scn.process_name(pid),
        p.state,
        p.delayed_started,
        p.delay_time.map_or("-".to_string(), |d| d.to_string()),
    );
    if let Some(w) = p.wait {
        out.push_str(&format!(" wait={w:?}"));
    }
    if let Some((to, at)) = s.timeout_trigger.get(&pid) {
        let elapsed = if *at <= s.clock_tick { "yes" } else { "no" };
        out.push_str(&format!(
            "\ntimer: moves to {to} at tick {at}, clock {}; delay elapsed: {elapsed}",
            s.clock_tick
        ));
    }
    out
}

pub(crate) fn guard_issues(
    scn: &Scenario,
    rel: &TransitionRelation,
    model: TransitionModelVariant,
    pairing: &Pairing,
    pre: &SystemState,
    ev: &Event,
    step: &Step,
) -> Vec<Issue> {
    let concrete = concrete_name(ev);
    let mut out = Vec::new();
    let mut unpaired = BTreeSet::new();
    for n in &step.notes {
        if let Some(a) = AbstractEvent::of_note(n) {
            if !pairing.allows(concrete, a) && unpaired.insert(a) {
                out.push(Issue {
                    kind: FindingKind::GuardStrengthening,
                    key: format!("{concrete} unpaired {a}"),
                    message: format!("{} performs {a}, which {concrete} is not paired with", ev.describe(scn)),
                });
            }
        }
        match n {
            Note::Proc { pid, from, to, cause } => {
                let cfg = scn.process(*pid);
                let mode = pre.partition(cfg.partition).mode;
                let allowed = ModeClass::of(mode)
                    .is_some_and(|class| rel.allows(model, class, *from, *to, *cause, cfg.periodicity));
                if allowed {
                    continue;
                }
                let key = match ModeClass::of(mode) {
                    Some(class) => witness_class(class, *from, *to),
                    None => format!("({mode}, {}->{})", figure_state(*from), figure_state(*to)),
                };
                let model_name = match model {
                    TransitionModelVariant::AsFigured => "AS_FIGURED",
                    TransitionModelVariant::Augmented => "AUGMENTED",
                };
                out.push(Issue {
                    kind: FindingKind::GuardStrengthening,
                    key,
                    message: format!(
                        "{} moves {} {from}->{to} (cause {}) in {mode}\nno {model_name} process_state_transition admits it\n{}",
                        ev.describe(scn),
                        scn.process_name(*pid),
                        cause.as_str(),
                        describe_process(scn, pre, *pid),
                    ),
                });
            }
            Note::Mode { part, from, to } if !rel.mode_allowed(*from, *to) => out.push(Issue {
                kind: FindingKind::GuardStrengthening,
                key: format!("(mode {from}->{to})"),
                message: format!(
                    "{} moves {} {from}->{to}, which partition_mode_transition does not admit",
                    ev.describe(scn),
                    scn.partition_name(*part)
                ),
            }),
            _ => {}
        }
    }
    out
}

fn port_mechanism(scn: &Scenario, p: PortId) -> Mechanism {
    let cfg = scn.port(p);
    match cfg.channel {
        Some(c) if cfg.kind == PortKind::Queuing => Mechanism::Channel(c),
        _ => Mechanism::Port(p),
    }
}

fn resource_mechanism(scn: &Scenario, r: Resource) -> Option<Mechanism> {
    match r {
        Resource::QueuingPort(p) => Some(port_mechanism(scn, p)),
        Resource::Buffer(b) => Some(Mechanism::Buffer(b)),
        _ => None,
    }
}

/// Messages held by each queued mechanism, as the abstract IPC events see
/// them: queue contents only, not messages of blocked senders.
pub fn mechanism_contents(scn: &Scenario, s: &SystemState) -> BTreeMap<Mechanism, BTreeMap<MessageId, usize>> {
    let mut out: BTreeMap<Mechanism, BTreeMap<MessageId, usize>> = BTreeMap::new();
    for (id, p) in &s.queuing_ports {
        let m = out.entry(port_mechanism(scn, *id)).or_default();
        for (msg, _) in &p.queue {
            *m.entry(*msg).or_default() += 1;
        }
    }
    for (id, b) in &s.buffers {
        let m = out.entry(Mechanism::Buffer(*id)).or_default();
        for (msg, _) in &b.queue {
            *m.entry(*msg).or_default() += 1;
        }
    }
    out
}

pub(crate) fn simulation_issues(scn: &Scenario, pre: &SystemState, ev: &Event, step: &Step) -> Vec<Issue> {
    let concrete = concrete_name(ev);
    let post = &step.state;
    let after = mechanism_contents(scn, post);
    let mut expected = mechanism_contents(scn, pre);
    let mut received = BTreeSet::new();
    let mut out = Vec::new();
    let issue = |key: String, message: String| Issue {
        kind: FindingKind::Simulation,
        key,
        message,
    };
    for n in &step.notes {
        match n {
            Note::Sent { mech, msg, .. } => *expected.entry(*mech).or_default().entry(*msg).or_default() += 1,
            Note::Received { mech, msg, by } => {
                let c = expected.entry(*mech).or_default().entry(*msg).or_default();
                if *c > 0 {
                    *c -= 1;
                    received.insert((*mech, *msg));
                } else {
                    out.push(issue(
                        format!("{concrete}: received message not held"),
                        format!(
                            "{}: {} received {msg}, which {} did not hold",
                            ev.describe(scn),
                            scn.process_name(*by),
                            mechanism_name(scn, *mech)
                        ),
                    ));
                }
            }
            Note::Displayed { bb, msg } => {
                if post.blackboards.get(bb).and_then(|b| b.msgspace) != Some(*msg) {
                    out.push(issue(
                        format!("{concrete}: display not stored"),
                        format!("{}: {msg} is not the blackboard message", ev.describe(scn)),
                    ));
                }
            }
            Note::Completed {
                pid,
                code: ReturnCode::NoError,
                msg: Some(m),
            } => {
                let Some(pc) = pre.pending.get(pid) else { continue };
                if !matches!(pc.service, ServiceName::SendQueuingMessage | ServiceName::SendBuffer) {
                    continue;
                }
                let Some(mech) = pc.resource.and_then(|r| resource_mechanism(scn, r)) else { continue };
                let inserted = after.get(&mech).is_some_and(|c| c.contains_key(m))
                    || post.fates.get(m) == Some(&Fate::Delivered);
                if !inserted {
                    out.push(issue(
                        format!("{}: sent message not inserted", pc.service),
                        format!(
                            "{}: blocked {} of {} completes NO_ERROR but {m} is not in {} and was not delivered\n{} contents after the step: {}",
                            ev.describe(scn),
                            pc.service,
                            scn.process_name(*pid),
                            mechanism_name(scn, mech),
                            mechanism_name(scn, mech),
                            render_contents(after.get(&mech)),
                        ),
                    ));
                }
            }
            _ => {}
        }
    }
    for counts in expected.values_mut() {
        counts.retain(|m, c| *c > 0 && post.fates.get(m) != Some(&Fate::Aborted));
    }
    let mechs: BTreeSet<Mechanism> = expected.keys().chain(after.keys()).copied().collect();
    let empty = BTreeMap::new();
    for mech in mechs {
        let exp = expected.get(&mech).unwrap_or(&empty);
        let act = after.get(&mech).unwrap_or(&empty);
        let msgs: BTreeSet<MessageId> = exp.keys().chain(act.keys()).copied().collect();
        for m in msgs {
            let (e, a) = (exp.get(&m).copied().unwrap_or(0), act.get(&m).copied().unwrap_or(0));
            if e == a {
                continue;
            }
            let name = mechanism_name(scn, mech);
            let (key, what) = if a > e && received.contains(&(mech, m)) {
                ("received message not removed", format!("{m} was received but is still in {name}"))
            } else if a > e {
                ("message appeared without a send", format!("{m} appeared in {name}"))
            } else {
                ("message lost", format!("{m} left {name} without a receive"))
            };
            out.push(issue(
                format!("{concrete}: {key}"),
                format!(
                    "{}: {what}\n{name} before: {}\n{name} after: {}",
                    ev.describe(scn),
                    render_contents(mechanism_contents(scn, pre).get(&mech)),
                    render_contents(Some(act)),
                ),
            ));
        }
    }
    out
}

fn render_contents(c: Option<&BTreeMap<MessageId, usize>>) -> String {
    match c {
        Some(c) if !c.is_empty() => {
            let items: Vec<String> = c
                .iter()
                .flat_map(|(m, n)| std::iter::repeat_n(m.to_string(), *n))
                .collect();
            format!("[{}]", items.join(", "))
        }
        _ => "[]".to_string(),
    }
}
