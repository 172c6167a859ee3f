use apex_dsl::*;
use proptest::prelude::*;

const STOP: &str = include_str!("../samples/stop.apex");

#[test]
fn stop_yields_four_disjoint_events() {
    let spec = parse_service(STOP).unwrap();
    let t = translate_detailed(&spec);
    assert_eq!(t.events.len(), 4);
    assert!(t.dropped.is_empty());
    let negs: Vec<CondExpr> = spec.error_part.iter().map(|c| c.cond.negated()).collect();
    for (k, e) in t.events.iter().enumerate() {
        assert_eq!(e.name, format!("STOP_{}", k + 1));
        assert_eq!(e.guards.len(), 4);
        assert_eq!(&e.guards[2..], negs.as_slice());
        assert_eq!(e.actions.first().unwrap(), "set the specified process state to DORMANT");
        assert_eq!(e.actions.last().unwrap(), "RETURN_CODE := NO_ERROR");
    }
    // both branches taken / neither taken
    assert_eq!(t.events[0].actions.len(), 5);
    assert_eq!(t.events[3].actions.len(), 3);
    assert!(check_disjointness(&t.events));
    assert!(check_branch_coverage(&t));
}

#[test]
fn translation_is_deterministic() {
    let spec = parse_service(STOP).unwrap();
    assert_eq!(translate(&spec), translate(&spec));
}

/// Independent count of the leaves of the split tree.
fn leaves(stmt: &ApexStmt, n: usize) -> usize {
    match stmt {
        ApexStmt::Act(_) => n,
        ApexStmt::Seq(a, b) => leaves(b, leaves(a, n)),
        ApexStmt::If { then, .. } => leaves(then, n) + n,
        ApexStmt::IfElse { then, els, .. } => leaves(then, n) + leaves(els, n),
    }
}

/// Pairwise check: two literal conjunctions are disjoint iff one is
/// contradictory or they disagree on some atom.
fn pairwise_disjoint(events: &[ProtoEvent]) -> bool {
    use std::collections::BTreeMap;
    let lits = |e: &ProtoEvent| -> Option<BTreeMap<String, bool>> {
        let mut m = BTreeMap::new();
        for g in &e.guards {
            let (t, p) = g.literal();
            if *m.entry(t.to_string()).or_insert(p) != p {
                return None;
            }
        }
        Some(m)
    };
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            let (Some(a), Some(b)) = (lits(&events[i]), lits(&events[j])) else { continue };
            if !a.iter().any(|(t, p)| b.get(t).is_some_and(|q| q != p)) {
                return false;
            }
        }
    }
    true
}

fn cond() -> impl Strategy<Value = CondExpr> {
    (0..5usize, any::<bool>()).prop_map(|(i, neg)| {
        let c = CondExpr::atom(format!("cond {i} holds"));
        if neg { c.negated() } else { c }
    })
}

fn stmt(ifs: u32) -> BoxedStrategy<ApexStmt> {
    let act = (0..6usize).prop_map(|i| ApexStmt::act(format!("do action {i}"))).boxed();
    if ifs == 0 {
        return prop_oneof![
            act.clone(),
            (act.clone(), act).prop_map(|(a, b)| ApexStmt::seq(a, b)),
        ]
        .boxed();
    }
    let half = ifs / 2;
    let rest = ifs - 1 - half;
    prop_oneof![
        (cond(), stmt(ifs - 1)).prop_map(|(c, t)| ApexStmt::if_then(c, t)),
        (cond(), stmt(half), stmt(rest)).prop_map(|(c, t, e)| ApexStmt::if_else(c, t, e)),
        (stmt(half), stmt(ifs - 1 - half)).prop_map(|(a, b)| ApexStmt::seq(a, b)),
        (cond(), stmt(half), stmt(rest)).prop_map(|(c, t, b)| ApexStmt::seq(ApexStmt::if_then(c, t), b)),
    ]
    .boxed()
}

fn spec() -> impl Strategy<Value = ApexServiceSpec> {
    (0..=6u32, 0..3usize)
        .prop_flat_map(|(ifs, errs)| (stmt(ifs), Just(errs)))
        .prop_map(|(normal_part, errs)| ApexServiceSpec {
            name: "SVC".into(),
            params: vec![],
            error_part: (0..errs)
                .map(|i| ErrorClause {
                    cond: CondExpr::atom(format!("error {i}")),
                    return_code: "INVALID_PARAM".into(),
                })
                .collect(),
            normal_part,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn translation_properties(spec in spec()) {
        let ifs = spec.normal_part.count_ifs();
        prop_assert!(ifs <= 6);
        let t = translate_detailed(&spec);
        prop_assert!(check_disjointness(&t.events));
        prop_assert!(pairwise_disjoint(&t.events));
        prop_assert!(check_branch_coverage(&t));
        prop_assert!(t.events.len() <= 1 << ifs);
        prop_assert_eq!(t.events.len() + t.dropped.len(), leaves(&spec.normal_part, 1));
        for e in &t.events {
            prop_assert!(!e.actions.is_empty());
            prop_assert_eq!(&e.guards[e.guards.len() - t.error_guards.len()..], t.error_guards.as_slice());
        }
        prop_assert_eq!(translate(&spec), t.events.clone());
    }

    #[test]
    fn printer_round_trips(spec in spec()) {
        let printed = print_service(&spec);
        let mut expected = spec.clone();
        expected.normal_part = spec.normal_part.normalized();
        prop_assert_eq!(parse_service(&printed).unwrap(), expected);
    }
}

#[test]
fn sequential_ifs_give_full_power_set() {
    let stmts: Vec<ApexStmt> = (0..4)
        .map(|i| ApexStmt::if_then(CondExpr::atom(format!("c{i}")), ApexStmt::act(format!("a{i}"))))
        .chain([ApexStmt::act("tail")])
        .collect();
    let spec = ApexServiceSpec {
        name: "S".into(),
        params: vec![],
        error_part: vec![],
        normal_part: ApexStmt::sequence(stmts),
    };
    assert_eq!(translate(&spec).len(), 16);
}
