//! Breadth-first exploration engine.
//!
//! Levels are expanded in chunks; successors of a chunk may be computed in
//! parallel, but they are merged into the visited set sequentially in
//! frontier order, so node numbering, findings and counts do not depend on
//! the number of threads.

use super::digest::{canonical_bytes, digest, StateDigest};
use super::{CheckReport, Finding, FindingKind, Issue, TraceStep, Verdict};
use crate::config::Scenario;
use crate::invariants::{violations, Violation};
use crate::pipeline::{self, Event, RunOptions, Step, StepError};
use crate::state::{new_state, SystemState};
use rayon::prelude::*;
use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interleave {
    /// Canonical tick pipeline plus the scenario script.
    Pipeline,
    /// Any enabled event, services drawn from the exploration menus.
    Free,
}

impl std::str::FromStr for Interleave {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pipeline" => Ok(Interleave::Pipeline),
            "free" => Ok(Interleave::Free),
            _ => Err(format!("unknown interleaving `{s}` (expected pipeline or free)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_states: usize,
    pub max_time: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_states: 1_000_000,
            max_time: Duration::from_secs(60),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    /// Ticks the clock may advance.
    pub max_tick: u64,
    pub interleave: Interleave,
    pub budget: Budget,
    /// Worker threads; 0 uses the global pool, 1 runs sequentially.
    pub threads: usize,
}

impl ExploreOptions {
    pub fn new(max_tick: u64, interleave: Interleave) -> Self {
        ExploreOptions {
            max_tick,
            interleave,
            budget: Budget::default(),
            threads: 0,
        }
    }
}

/// Per-transition check: pre-state, event, step.
pub(crate) type TransitionCheck<'a> = dyn Fn(&Scenario, &SystemState, &Event, &Step) -> Vec<Issue> + Sync + 'a;

/// Re-executes a counterexample from the initial state, returning every
/// state along the way (initial state first).
pub fn replay(scn: &Scenario, events: &[Event]) -> Result<Vec<SystemState>, StepError> {
    let mut states = vec![new_state(scn)];
    for ev in events {
        let step = pipeline::apply(scn, states.last().expect("non-empty"), ev)?;
        states.push(step.state);
    }
    Ok(states)
}

struct Node {
    parent: Option<u32>,
    event: Option<Event>,
    digest: StateDigest,
    level: usize,
}

struct Succ {
    event: Event,
    state: SystemState,
    bytes: Vec<u8>,
    digest: StateDigest,
    violations: Vec<Violation>,
    issues: Vec<Issue>,
}

struct Search<'a> {
    scn: &'a Scenario,
    halt: bool,
    nodes: Vec<Node>,
    bytes: Vec<Box<[u8]>>,
    index: HashMap<StateDigest, Vec<u32>>,
    findings: Vec<Finding>,
    seen_keys: BTreeSet<String>,
    transitions: usize,
    depth: usize,
    budget: Option<String>,
    halted: bool,
}

impl Search<'_> {
    fn trace_to(&self, mut n: u32) -> (Vec<TraceStep>, Vec<Event>) {
        let mut steps = Vec::new();
        let mut events = Vec::new();
        loop {
            let node = &self.nodes[n as usize];
            let label = match &node.event {
                Some(ev) => ev.describe(self.scn),
                None => "initial".to_string(),
            };
            steps.push(TraceStep {
                digest: node.digest,
                event: label,
            });
            if let Some(ev) = &node.event {
                events.push(ev.clone());
            }
            match node.parent {
                Some(p) => n = p,
                None => break,
            }
        }
        steps.reverse();
        events.reverse();
        (steps, events)
    }

    fn record(&mut self, at: u32, issue: Issue) {
        let key = format!("{} {}", issue.kind.label(), issue.key);
        if !self.seen_keys.insert(key) {
            return;
        }
        let (trace, events) = self.trace_to(at);
        self.findings.push(Finding {
            kind: issue.kind,
            key: issue.key,
            message: issue.message,
            trace,
            events,
        });
    }

    fn violation_issues(&self, v: &[Violation]) -> Vec<Issue> {
        v.iter()
            .map(|v| Issue {
                kind: FindingKind::of(v),
                key: match v {
                    Violation::Invariant(n) => format!("({n})"),
                    Violation::Conservation(_) => "message conservation".into(),
                },
                message: v.to_string(),
            })
            .collect()
    }

    /// Adds a state; returns its node index when new.
    fn insert(&mut self, parent: Option<u32>, event: Option<Event>, bytes: Vec<u8>, d: StateDigest, level: usize) -> Option<u32> {
        if let Some(ids) = self.index.get(&d) {
            if ids.iter().any(|&i| *self.bytes[i as usize] == *bytes) {
                return None;
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            parent,
            event,
            digest: d,
            level,
        });
        self.bytes.push(bytes.into_boxed_slice());
        self.index.entry(d).or_default().push(id);
        self.depth = self.depth.max(level);
        Some(id)
    }

    fn report(self) -> CheckReport {
        let verdict = if !self.findings.is_empty() {
            Verdict::Fail
        } else if self.budget.is_some() {
            Verdict::Budget
        } else {
            Verdict::Pass
        };
        CheckReport {
            verdict,
            findings: self.findings,
            states: self.nodes.len(),
            transitions: self.transitions,
            depth: self.depth,
            budget: self.budget,
        }
    }
}

fn expand(scn: &Scenario, s: &SystemState, max_tick: u64, check: &TransitionCheck) -> Vec<Succ> {
    let mut out = Vec::new();
    for ev in pipeline::free_events(scn, s, max_tick) {
        let Ok(step) = pipeline::apply(scn, s, &ev) else { continue };
        if step.state == *s {
            continue;
        }
        let issues = check(scn, s, &ev, &step);
        let bytes = canonical_bytes(&step.state);
        let d = digest(&bytes);
        let v = violations(scn, &step.state);
        out.push(Succ {
            event: ev,
            state: step.state,
            bytes,
            digest: d,
            violations: v,
            issues,
        });
    }
    out
}

const CHUNK: usize = 2048;

pub(crate) fn run(scn: &Scenario, opts: &ExploreOptions, halt: bool, check: &TransitionCheck) -> CheckReport {
    let mut search = Search {
        scn,
        halt,
        nodes: Vec::new(),
        bytes: Vec::new(),
        index: HashMap::new(),
        findings: Vec::new(),
        seen_keys: BTreeSet::new(),
        transitions: 0,
        depth: 0,
        budget: None,
        halted: false,
    };
    let init = new_state(scn);
    let bytes = canonical_bytes(&init);
    let d = digest(&bytes);
    search.insert(None, None, bytes, d, 0);
    let v = violations(scn, &init);
    if !v.is_empty() {
        for issue in search.violation_issues(&v) {
            search.record(0, issue);
        }
        if halt {
            return search.report();
        }
    }
    match opts.interleave {
        Interleave::Pipeline => run_pipeline(&mut search, opts, init, check),
        Interleave::Free => run_free(&mut search, opts, init, check),
    }
    search.report()
}

fn run_pipeline(search: &mut Search, opts: &ExploreOptions, init: SystemState, check: &TransitionCheck) {
    let scn = search.scn;
    let run = pipeline::run(
        scn,
        RunOptions {
            ticks: opts.max_tick,
            stop_on_violation: search.halt,
        },
    );
    let mut pre = init;
    let mut at = 0u32;
    for (level, (ev, step)) in run.steps.into_iter().enumerate() {
        search.transitions += 1;
        let issues = check(scn, &pre, &ev, &step);
        let bytes = canonical_bytes(&step.state);
        let d = digest(&bytes);
        // Revisited states still extend the path, so nodes are not deduplicated here.
        let id = search.nodes.len() as u32;
        search.nodes.push(Node {
            parent: Some(at),
            event: Some(ev),
            digest: d,
            level: level + 1,
        });
        search.bytes.push(Box::new([]));
        search.depth = level + 1;
        at = id;
        for issue in issues {
            search.record(at, issue);
        }
        let v = violations(scn, &step.state);
        if !v.is_empty() {
            for issue in search.violation_issues(&v) {
                search.record(at, issue);
            }
            if search.halt {
                return;
            }
        }
        pre = step.state;
    }
}

fn run_free(search: &mut Search, opts: &ExploreOptions, init: SystemState, check: &TransitionCheck) {
    let scn = search.scn;
    let started = Instant::now();
    let pool = (opts.threads > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .expect("thread pool")
    });
    let mut frontier: Vec<(u32, SystemState)> = vec![(0, init)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for chunk in frontier.chunks(CHUNK) {
            if started.elapsed() > opts.budget.max_time {
                search.budget = Some(format!("time cap of {}s reached", opts.budget.max_time.as_secs()));
                return;
            }
            let work = |(id, s): &(u32, SystemState)| (*id, expand(scn, s, opts.max_tick, check));
            let expanded: Vec<(u32, Vec<Succ>)> = match (&pool, opts.threads) {
                (_, 1) => chunk.iter().map(work).collect(),
                (Some(p), _) => p.install(|| chunk.par_iter().map(work).collect()),
                (None, _) => chunk.par_iter().map(work).collect(),
            };
            for (parent, succs) in expanded {
                let level = search.nodes[parent as usize].level + 1;
                for succ in succs {
                    search.transitions += 1;
                    let new = search.insert(Some(parent), Some(succ.event.clone()), succ.bytes, succ.digest, level);
                    // Transition findings are attributed to the post-state.
                    let at = match new {
                        Some(id) => id,
                        None if succ.issues.is_empty() => continue,
                        None => {
                            let id = search.nodes.len() as u32;
                            search.nodes.push(Node {
                                parent: Some(parent),
                                event: Some(succ.event.clone()),
                                digest: succ.digest,
                                level,
                            });
                            search.bytes.push(Box::new([]));
                            for issue in succ.issues {
                                search.record(id, issue);
                            }
                            search.nodes.pop();
                            search.bytes.pop();
                            continue;
                        }
                    };
                    for issue in succ.issues {
                        search.record(at, issue);
                    }
                    if !succ.violations.is_empty() {
                        for issue in search.violation_issues(&succ.violations) {
                            search.record(at, issue);
                        }
                        if search.halt {
                            search.halted = true;
                            return;
                        }
                    }
                    if search.nodes.len() >= opts.budget.max_states {
                        search.budget = Some(format!("state cap of {} reached", opts.budget.max_states));
                        return;
                    }
                    next.push((at, succ.state));
                }
            }
        }
        frontier = next;
    }
}
