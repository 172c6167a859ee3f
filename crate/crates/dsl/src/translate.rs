//! Structural translation of a service specification into guard-action events.
//!
//! Each `if` splits the current event set in two: one copy takes the
//! condition, the other its negation. Simple statements are appended to every
//! event reached. After the normal part is processed the negation of every
//! error condition is appended to each event's guards, and events that ended
//! up with no actions are removed.

use crate::ast::{ApexServiceSpec, ApexStmt, CondExpr};
use std::collections::BTreeSet;
use std::fmt;

/// A translated event: name, guard conjunction and ordered action list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtoEvent {
    pub name: String,
    pub guards: Vec<CondExpr>,
    pub actions: Vec<String>,
}

impl fmt::Display for ProtoEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "event {}", self.name)?;
        for g in &self.guards {
            writeln!(f, "  guard {g}")?;
        }
        for a in &self.actions {
            writeln!(f, "  action {a}")?;
        }
        Ok(())
    }
}

/// Full translation output, keeping what the final filtering removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    pub events: Vec<ProtoEvent>,
    /// Branch guards of the events dropped for having no actions.
    pub dropped: Vec<Vec<CondExpr>>,
    /// Negated error conditions appended to every surviving event.
    pub error_guards: Vec<CondExpr>,
}

impl Translation {
    /// Guards of a surviving event with the error negations stripped.
    pub fn branch_guards<'a>(&self, event: &'a ProtoEvent) -> &'a [CondExpr] {
        &event.guards[..event.guards.len() - self.error_guards.len()]
    }
}

#[derive(Clone)]
struct Partial {
    guards: Vec<CondExpr>,
    actions: Vec<String>,
}

fn walk(stmt: &ApexStmt, set: Vec<Partial>) -> Vec<Partial> {
    match stmt {
        ApexStmt::Act(text) => set
            .into_iter()
            .map(|mut e| {
                e.actions.push(text.clone());
                e
            })
            .collect(),
        ApexStmt::Seq(first, second) => walk(second, walk(first, set)),
        ApexStmt::If { cond, then } => {
            let (pos, neg) = split(cond, set);
            let mut out = walk(then, pos);
            out.extend(neg);
            out
        }
        ApexStmt::IfElse { cond, then, els } => {
            let (pos, neg) = split(cond, set);
            let mut out = walk(then, pos);
            out.extend(walk(els, neg));
            out
        }
    }
}

fn split(cond: &CondExpr, set: Vec<Partial>) -> (Vec<Partial>, Vec<Partial>) {
    let mut pos = set.clone();
    let mut neg = set;
    for e in &mut pos {
        e.guards.push(cond.clone());
    }
    for e in &mut neg {
        e.guards.push(cond.negated());
    }
    (pos, neg)
}

pub fn translate_detailed(spec: &ApexServiceSpec) -> Translation {
    let start = vec![Partial {
        guards: Vec::new(),
        actions: Vec::new(),
    }];
    let error_guards: Vec<CondExpr> = spec.error_part.iter().map(|c| c.cond.negated()).collect();
    let mut events = Vec::new();
    let mut dropped = Vec::new();
    for partial in walk(&spec.normal_part, start) {
        if partial.actions.is_empty() {
            dropped.push(partial.guards);
            continue;
        }
        let mut guards = partial.guards;
        guards.extend(error_guards.iter().cloned());
        events.push(ProtoEvent {
            name: format!("{}_{}", spec.name, events.len() + 1),
            guards,
            actions: partial.actions,
        });
    }
    Translation {
        events,
        dropped,
        error_guards,
    }
}

pub fn translate(spec: &ApexServiceSpec) -> Vec<ProtoEvent> {
    translate_detailed(spec).events
}

/// Atom texts appearing in the given guard lists, in sorted order.
fn atoms<'a>(guard_lists: impl Iterator<Item = &'a [CondExpr]>) -> Vec<&'a str> {
    let mut set = BTreeSet::new();
    for list in guard_lists {
        for g in list {
            set.insert(g.literal().0);
        }
    }
    set.into_iter().collect()
}

fn holds(guards: &[CondExpr], atoms: &[&str], assignment: u64) -> bool {
    guards.iter().all(|g| {
        let (text, positive) = g.literal();
        let idx = atoms.binary_search(&text).expect("atom collected");
        ((assignment >> idx) & 1 == 1) == positive
    })
}

/// Largest alphabet decided by enumeration.
pub const MAX_ATOMS: usize = 24;

/// True when no truth assignment enables two events at once.
///
/// Decided by enumerating every assignment to the atoms mentioned in the
/// guards. Panics if more than [`MAX_ATOMS`] distinct atoms occur.
pub fn check_disjointness(events: &[ProtoEvent]) -> bool {
    let atoms = atoms(events.iter().map(|e| e.guards.as_slice()));
    assert!(atoms.len() <= MAX_ATOMS, "too many condition atoms");
    (0..1u64 << atoms.len()).all(|a| {
        events
            .iter()
            .filter(|e| holds(&e.guards, &atoms, a))
            .take(2)
            .count()
            <= 1
    })
}

/// True when every assignment of the branch atoms satisfies the branch guards
/// of some surviving or dropped event.
pub fn check_branch_coverage(t: &Translation) -> bool {
    let mut lists: Vec<&[CondExpr]> = t.events.iter().map(|e| t.branch_guards(e)).collect();
    lists.extend(t.dropped.iter().map(|g| g.as_slice()));
    let atoms = atoms(lists.iter().copied());
    assert!(atoms.len() <= MAX_ATOMS, "too many condition atoms");
    (0..1u64 << atoms.len()).all(|a| lists.iter().any(|g| holds(g, &atoms, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ErrorClause;

    fn c(s: &str) -> CondExpr {
        CondExpr::atom(s)
    }

    fn ev(guards: Vec<CondExpr>) -> ProtoEvent {
        ProtoEvent {
            name: "e".into(),
            guards,
            actions: vec!["x".into()],
        }
    }

    #[test]
    fn overlapping_guards_are_not_disjoint() {
        assert!(!check_disjointness(&[ev(vec![c("c")]), ev(vec![c("c")])]));
    }

    #[test]
    fn three_way_split_is_disjoint() {
        let events = [
            ev(vec![c("c"), c("d").negated()]),
            ev(vec![c("c").negated()]),
            ev(vec![c("c"), c("d")]),
        ];
        assert!(check_disjointness(&events));
    }

    #[test]
    fn empty_else_branch_is_dropped() {
        let spec = ApexServiceSpec {
            name: "S".into(),
            params: vec![],
            error_part: vec![],
            normal_part: ApexStmt::if_then(c("p"), ApexStmt::act("a")),
        };
        let t = translate_detailed(&spec);
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.events[0].guards, vec![c("p")]);
        assert_eq!(t.dropped, vec![vec![c("p").negated()]]);
        assert!(check_branch_coverage(&t));
    }

    #[test]
    fn pure_actions_give_one_event() {
        let spec = ApexServiceSpec {
            name: "S".into(),
            params: vec![],
            error_part: vec![ErrorClause {
                cond: c("bad"),
                return_code: "INVALID_PARAM".into(),
            }],
            normal_part: ApexStmt::sequence(vec![ApexStmt::act("a"), ApexStmt::act("b")]),
        };
        let events = translate(&spec);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].name, "S_1");
        assert_eq!(events[0].guards, vec![c("bad").negated()]);
        assert_eq!(events[0].actions, vec!["a", "b"]);
    }
}
