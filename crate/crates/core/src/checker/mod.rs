//! Bounded checking over the reachable state space.
//!
//! [`explore`] enumerates states breadth-first and checks the invariant
//! catalog plus message conservation; [`check_refinement`] additionally
//! checks every concrete step against the abstract model (guard
//! strengthening and simulation). Reports end with a summary line:
//!
//! ```text
//! verdict=<PASS|FAIL|BUDGET> kind=<...> inv=<n|-> states=<n> depth=<n>
//! ```

mod digest;
mod engine;
mod pairing;
mod refine;

pub use digest::{canonical_bytes, digest, StateDigest};
pub use engine::{replay, Budget, ExploreOptions, Interleave};
pub use pairing::{concrete_name, AbstractEvent, Pairing, PairingError, DEFAULT_PAIRING};
pub use refine::{mechanism_contents, witness_class, RefinementOptions};

use crate::config::Scenario;
use crate::invariants::Violation;
use crate::kernel::TransitionModelVariant;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The state or time cap was hit before the bound was covered.
    Budget,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Budget => "BUDGET",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FindingKind {
    Invariant(u8),
    Conservation,
    GuardStrengthening,
    Simulation,
}

impl FindingKind {
    pub fn label(&self) -> &'static str {
        match self {
            FindingKind::Invariant(_) | FindingKind::Conservation => "INVARIANT",
            FindingKind::GuardStrengthening => "GUARD_STRENGTHENING",
            FindingKind::Simulation => "SIMULATION",
        }
    }

    fn inv(&self) -> String {
        match self {
            FindingKind::Invariant(n) => n.to_string(),
            FindingKind::Conservation => "conservation".into(),
            _ => "-".into(),
        }
    }

    pub(crate) fn of(v: &Violation) -> FindingKind {
        match v {
            Violation::Invariant(n) => FindingKind::Invariant(*n),
            Violation::Conservation(_) => FindingKind::Conservation,
        }
    }
}

/// One step of a counterexample: the event fired and the digest of the
/// state it produced. The first step is the initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub digest: StateDigest,
    pub event: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    /// Deduplication key; findings with equal keys are reported once.
    pub key: String,
    pub message: String,
    pub trace: Vec<TraceStep>,
    /// The events of `trace`, replayable with [`replay`].
    pub events: Vec<crate::pipeline::Event>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    pub states: usize,
    pub transitions: usize,
    /// Longest event sequence explored.
    pub depth: usize,
    /// Why the exploration stopped early, when it did.
    pub budget: Option<String>,
}

impl CheckReport {
    pub fn summary_line(&self) -> String {
        let (kind, inv) = match self.findings.first() {
            Some(f) => (f.kind.label().to_string(), f.kind.inv()),
            None => ("-".to_string(), "-".to_string()),
        };
        format!(
            "verdict={} kind={kind} inv={inv} states={} depth={}",
            self.verdict, self.states, self.depth
        )
    }

    /// Findings of one kind label.
    pub fn count(&self, label: &str) -> usize {
        self.findings.iter().filter(|f| f.kind.label() == label).count()
    }

    /// Structured text: one block per finding, then the summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.findings.iter().enumerate() {
            out.push_str(&format!("finding {}: {} {}\n", i + 1, f.kind.label(), f.key));
            for line in f.message.lines() {
                out.push_str(&format!("  {line}\n"));
            }
            out.push_str("  trace:\n");
            for (n, t) in f.trace.iter().enumerate() {
                out.push_str(&format!("    {n:>3} {} {}\n", t.digest, t.event));
            }
            out.push('\n');
        }
        if let Some(b) = &self.budget {
            out.push_str(&format!("budget exceeded: {b}\n"));
        }
        out.push_str(&format!("transitions={}\n", self.transitions));
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }
}

/// Explores the reachable states and halts at the first invariant or
/// conservation violation, which is reported with a minimal trace.
pub fn explore(scn: &Scenario, opts: &ExploreOptions) -> CheckReport {
    engine::run(scn, opts, true, &|_, _, _, _| Vec::new())
}

/// Checks every reachable concrete step against the abstract model under
/// `pairing`. All distinct witnesses are collected.
pub fn check_refinement(scn: &Scenario, opts: &ExploreOptions, ropts: &RefinementOptions) -> CheckReport {
    let rel = crate::kernel::TransitionRelation::standard();
    engine::run(scn, opts, false, &|scn, pre, ev, step| {
        let mut out = Vec::new();
        if ropts.guard_strengthening {
            out.extend(refine::guard_issues(scn, rel, ropts.model, &ropts.pairing, pre, ev, step));
        }
        if ropts.simulation {
            out.extend(refine::simulation_issues(scn, pre, ev, step));
        }
        out
    })
}

/// Shorthand used by drivers: guard strengthening only.
pub fn check_guard_strengthening(scn: &Scenario, opts: &ExploreOptions, model: TransitionModelVariant, pairing: Pairing) -> CheckReport {
    let ropts = RefinementOptions {
        model,
        pairing,
        guard_strengthening: true,
        simulation: false,
    };
    check_refinement(scn, opts, &ropts)
}

/// Shorthand used by drivers: simulation only.
pub fn check_simulation(scn: &Scenario, opts: &ExploreOptions, pairing: Pairing) -> CheckReport {
    let ropts = RefinementOptions {
        model: TransitionModelVariant::Augmented,
        pairing,
        guard_strengthening: false,
        simulation: true,
    };
    check_refinement(scn, opts, &ropts)
}

/// A finding produced while checking one transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub kind: FindingKind,
    pub key: String,
    pub message: String,
}
