//! Acceptance run: one pass/fail line per criterion.
//!
//! Runs with `cargo test --test acceptance`; exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/sched_oracle/mod.rs"]
mod sched_oracle;

use a653_core::pipeline::{self, Event, RunOptions};
use a653_core::services::OutValue;
use a653_core::Scenario;
use apex_dsl::{
    check_branch_coverage, check_disjointness, translate_detailed, ApexServiceSpec, ApexStmt,
    CondExpr, ErrorClause,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn scenario_path(name: &str) -> String {
    root().join("scenarios").join(name).display().to_string()
}

struct Out {
    code: i32,
    stdout: String,
}

fn a653(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_a653"))
        .args(args)
        .output()
        .expect("a653 runs");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
    }
}

fn summary_field(out: &str, key: &str) -> Option<String> {
    let line = out.lines().rev().find(|l| l.starts_with("verdict="))?;
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")).map(str::to_string))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn load(name: &str) -> Scenario {
    Scenario::from_file(Path::new(&scenario_path(name))).expect("scenario parses")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let out = a653(&[
        "explore",
        &scenario_path("reference.cfg"),
        "--depth",
        "3mtf",
        "--mode",
        "free",
    ]);
    let took = start.elapsed();
    let states: usize = summary_field(&out.stdout, "states")
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    ensure(
        out.code == 0,
        format!(
            "exit {} : {}",
            out.code,
            out.stdout.lines().last().unwrap_or("")
        ),
    )?;
    ensure(
        summary_field(&out.stdout, "verdict").as_deref() == Some("PASS"),
        "verdict not PASS",
    )?;
    ensure(states >= 10_000, format!("only {states} states"))?;
    ensure(took < Duration::from_secs(120), format!("took {took:?}"))?;
    Ok(format!(
        "{states} states, 0 violations, {:.1}s",
        took.as_secs_f64()
    ))
}

fn refinement(cfg: &str, extra: &[&str]) -> Out {
    let path = scenario_path(cfg);
    let mut args = vec![
        "check-refinement",
        path.as_str(),
        "--mode",
        "pipeline",
        "--depth",
        "2mtf",
    ];
    args.extend_from_slice(extra);
    a653(&args)
}

fn finding_keys(out: &str) -> Vec<String> {
    out.lines()
        .filter_map(|l| l.strip_prefix("finding "))
        .filter_map(|l| l.split_once(": ").map(|(_, rest)| rest.to_string()))
        .collect()
}

fn criterion_2() -> Outcome {
    let bad = refinement(
        "resume.cfg",
        &["--model", "augmented", "--variant", "resume=as_written"],
    );
    ensure(bad.code == 1, format!("as_written exit {}", bad.code))?;
    let keys = finding_keys(&bad.stdout);
    ensure(
        keys == ["GUARD_STRENGTHENING (NORMAL, Waiting->Ready)"],
        format!("as_written findings {keys:?}"),
    )?;
    for needle in [
        "WaitandSuspend->Ready",
        "aperiodic delayed_started=true",
        "delay elapsed: no",
    ] {
        ensure(
            bad.stdout.contains(needle),
            format!("witness lacks `{needle}`"),
        )?;
    }
    let good = refinement(
        "resume.cfg",
        &["--model", "augmented", "--variant", "resume=corrected"],
    );
    ensure(good.code == 0, format!("corrected exit {}", good.code))?;

    // Free interleaving over R's menu reaches the same witness unscripted.
    let path = scenario_path("resume.cfg");
    let free = |variant: &str| {
        a653(&[
            "check-refinement",
            &path,
            "--mode",
            "free",
            "--depth",
            "1mtf",
            "--variant",
            variant,
        ])
    };
    let bad = free("resume=as_written");
    ensure(
        bad.code == 1
            && finding_keys(&bad.stdout) == ["GUARD_STRENGTHENING (NORMAL, Waiting->Ready)"],
        format!("free as_written exit {}", bad.code),
    )?;
    let good = free("resume=corrected");
    ensure(good.code == 0, format!("free corrected exit {}", good.code))?;
    Ok("as_written FAIL with (NORMAL, Waiting->Ready) witness in pipeline and free mode, corrected PASS".into())
}

fn criterion_3() -> Outcome {
    let bad = refinement(
        "send_queuing.cfg",
        &["--variant", "send_queuing=as_written"],
    );
    ensure(bad.code == 1, format!("as_written exit {}", bad.code))?;
    let keys = finding_keys(&bad.stdout);
    ensure(
        keys.iter().any(|k| k.starts_with("SIMULATION")),
        format!("no simulation finding in {keys:?}"),
    )?;
    ensure(
        keys.iter().any(|k| k == "INVARIANT message conservation"),
        format!("no conservation finding in {keys:?}"),
    )?;

    let mut scn = load("send_queuing.cfg");
    let opts = RunOptions {
        ticks: 20,
        stop_on_violation: false,
    };
    scn.variants.send_queuing = a653_core::types::Variant::AsWritten;
    let lost = pipeline::run(&scn, opts).final_state;
    let m2 = a653_core::ids::MessageId(2);
    let located = lost.message_locations().iter().any(|(m, _)| *m == m2)
        || lost.fates.get(&m2) == Some(&a653_core::state::Fate::Delivered);
    ensure(!located, "as_written: m2 still located")?;

    let good = refinement("send_queuing.cfg", &["--variant", "send_queuing=corrected"]);
    ensure(good.code == 0, format!("corrected exit {}", good.code))?;
    scn.variants.send_queuing = a653_core::types::Variant::Corrected;
    let kept = pipeline::run(&scn, opts).final_state;
    let in_queue = kept
        .queuing_ports
        .values()
        .any(|p| p.queue.iter().any(|(m, _)| *m == m2));
    ensure(in_queue, "corrected: m2 not in the queue")?;
    Ok(
        "as_written FAIL (simulation + conservation, m2 lost), corrected PASS with m2 queued"
            .into(),
    )
}

/// Message ids returned by RECEIVE_BUFFER and the buffer length after each
/// tick.
fn receive_profile(scn: &Scenario) -> (Vec<a653_core::ids::MessageId>, Vec<usize>) {
    let report = pipeline::run(
        scn,
        RunOptions {
            ticks: 20,
            stop_on_violation: false,
        },
    );
    let mut ids = Vec::new();
    let mut lens = std::collections::BTreeMap::new();
    for (ev, st) in &report.steps {
        if let (Event::Call(c), Some(o)) = (ev, &st.call) {
            if c.request.service() == a653_core::services::ServiceName::ReceiveBuffer {
                ids.extend(o.out_values.iter().filter_map(|(_, v)| match v {
                    OutValue::Msg(m) => Some(*m),
                    _ => None,
                }));
            }
        }
        lens.insert(
            st.state.clock_tick,
            st.state
                .buffers
                .values()
                .next()
                .map_or(0, |b| b.queue.len()),
        );
    }
    (ids, lens.into_values().collect())
}

fn criterion_4() -> Outcome {
    let mut scn = load("receive_buffer.cfg");
    scn.variants.receive_buffer = a653_core::types::Variant::AsWritten;
    let (ids, lens) = receive_profile(&scn);
    ensure(
        ids.len() == 2 && ids[0] == ids[1],
        format!("as_written ids {ids:?}"),
    )?;
    let full = *lens.iter().max().unwrap_or(&0);
    let after_fill: Vec<usize> = lens.iter().copied().skip_while(|&l| l < full).collect();
    ensure(
        after_fill.windows(2).all(|w| w[1] >= w[0]),
        format!("as_written lengths {lens:?}"),
    )?;
    let bad = refinement(
        "receive_buffer.cfg",
        &["--variant", "receive_buffer=as_written"],
    );
    ensure(bad.code == 1, format!("as_written check exit {}", bad.code))?;

    scn.variants.receive_buffer = a653_core::types::Variant::Corrected;
    let (ids, lens) = receive_profile(&scn);
    ensure(
        ids.len() == 2 && ids[0] != ids[1],
        format!("corrected ids {ids:?}"),
    )?;
    // Ticks 3 and 4 each hold one receive.
    ensure(
        lens[2] == 2 && lens[3] == 1 && lens[4] == 0,
        format!("corrected lengths {lens:?}"),
    )?;
    let good = refinement(
        "receive_buffer.cfg",
        &["--variant", "receive_buffer=corrected"],
    );
    ensure(
        good.code == 0,
        format!("corrected check exit {}", good.code),
    )?;
    Ok("as_written repeats the id and never dequeues, corrected dequeues once per receive".into())
}

fn criterion_5() -> Outcome {
    let fig = refinement("start_modes.cfg", &["--model", "as_figured"]);
    ensure(fig.code == 1, format!("as_figured exit {}", fig.code))?;
    let mut keys = finding_keys(&fig.stdout);
    keys.sort();
    let expected = [
        "GUARD_STRENGTHENING (COLD/WARM_START, Waiting->Waiting)",
        "GUARD_STRENGTHENING (NORMAL, Dormant->Ready)",
        "GUARD_STRENGTHENING (NORMAL, Dormant->Waiting)",
    ];
    ensure(keys == expected, format!("as_figured classes {keys:?}"))?;
    let aug = refinement("start_modes.cfg", &["--model", "augmented"]);
    ensure(
        aug.code == 0 && finding_keys(&aug.stdout).is_empty(),
        format!("augmented exit {}", aug.code),
    )?;
    Ok("as_figured FAIL with exactly 3 classes, augmented PASS".into())
}

fn random_stmt(rng: &mut ChaCha8Rng, ifs: u32) -> ApexStmt {
    let act = |rng: &mut ChaCha8Rng| ApexStmt::act(format!("action {}", rng.gen_range(0..8)));
    let cond = |rng: &mut ChaCha8Rng| {
        let c = CondExpr::atom(format!("condition {}", rng.gen_range(0..6)));
        if rng.gen_bool(0.3) {
            c.negated()
        } else {
            c
        }
    };
    if ifs == 0 {
        return if rng.gen_bool(0.5) {
            act(rng)
        } else {
            ApexStmt::seq(act(rng), act(rng))
        };
    }
    let left = rng.gen_range(0..ifs);
    let right = ifs - 1 - left;
    match rng.gen_range(0..3) {
        0 => ApexStmt::seq(
            ApexStmt::if_then(cond(rng), random_stmt(rng, left)),
            random_stmt(rng, right),
        ),
        1 => ApexStmt::if_else(cond(rng), random_stmt(rng, left), random_stmt(rng, right)),
        _ => ApexStmt::seq(random_stmt(rng, left), {
            let c = cond(rng);
            ApexStmt::if_then(c, random_stmt(rng, right))
        }),
    }
}

/// Two events are disjoint when one guard of the first is the negation of a
/// guard of the second.
fn pairwise_disjoint(events: &[apex_dsl::ProtoEvent]) -> bool {
    events.iter().enumerate().all(|(i, a)| {
        events[i + 1..]
            .iter()
            .all(|b| a.guards.iter().any(|g| b.guards.contains(&g.negated())))
    })
}

fn criterion_6() -> Outcome {
    let stop = root()
        .join("../dsl/samples/stop.apex")
        .display()
        .to_string();
    let out = a653(&["translate", &stop, "--check-disjoint", "--check-coverage"]);
    ensure(out.code == 0, format!("translate exit {}", out.code))?;
    ensure(
        out.stdout.contains("events=4\n"),
        "STOP does not give 4 events",
    )?;
    ensure(out.stdout.contains("disjoint=true"), "STOP events overlap")?;
    let text = std::fs::read_to_string(&stop).map_err(|e| e.to_string())?;
    let spec = apex_dsl::parse_service(&text).map_err(|e| e.to_string())?;
    let negs: Vec<CondExpr> = spec.error_part.iter().map(|c| c.cond.negated()).collect();
    let t = translate_detailed(&spec);
    ensure(negs.len() == 2, "STOP has two error clauses")?;
    ensure(
        t.events
            .iter()
            .all(|e| negs.iter().all(|n| e.guards.contains(n))),
        "an event lacks an error negation",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x0653);
    let cases = 1000;
    for i in 0..cases {
        let ifs = rng.gen_range(0..=6);
        let errs = rng.gen_range(0..3);
        let spec = ApexServiceSpec {
            name: "SVC".into(),
            params: Vec::new(),
            error_part: (0..errs)
                .map(|k| ErrorClause {
                    cond: CondExpr::atom(format!("error {k}")),
                    return_code: "INVALID_PARAM".into(),
                })
                .collect(),
            normal_part: random_stmt(&mut rng, ifs),
        };
        ensure(
            spec.normal_part.count_ifs() <= 6,
            "generator exceeded 6 IFs",
        )?;
        let t = translate_detailed(&spec);
        ensure(
            check_disjointness(&t.events),
            format!("case {i}: events overlap"),
        )?;
        ensure(
            pairwise_disjoint(&t.events),
            format!("case {i}: pairwise check finds an overlap"),
        )?;
        ensure(
            check_branch_coverage(&t),
            format!("case {i}: branches not covered"),
        )?;
    }
    Ok(format!(
        "STOP: 4 disjoint events with both negations; {cases} random ASTs: 0 failures"
    ))
}

fn criterion_7() -> Outcome {
    let reference = scenario_path("reference.cfg");
    let resume = scenario_path("resume.cfg");
    let stop = root()
        .join("../dsl/samples/stop.apex")
        .display()
        .to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["run", &reference, "--ticks", "40"],
        vec!["explore", &reference, "--depth", "2mtf"],
        vec!["explore", &reference, "--depth", "20", "--mode", "pipeline"],
        vec![
            "check-refinement",
            &resume,
            "--mode",
            "pipeline",
            "--variant",
            "resume=as_written",
        ],
        vec!["check-refinement", &reference, "--depth", "1mtf"],
        vec!["translate", &stop, "--check-disjoint"],
        vec!["pairings"],
    ];
    for args in &runs {
        let a = a653(args);
        let b = a653(args);
        ensure(
            a.stdout == b.stdout && a.code == b.code,
            format!("`{}` differs between runs", args.join(" ")),
        )?;
    }
    let one = a653(&["explore", &reference, "--depth", "2mtf", "--threads", "1"]);
    let four = a653(&["explore", &reference, "--depth", "2mtf", "--threads", "4"]);
    ensure(one.stdout == four.stdout, "1 and 4 threads disagree")?;
    Ok(format!(
        "{} subcommand runs byte-identical; threads 1 vs 4: {}",
        runs.len(),
        one.stdout.lines().last().unwrap_or("")
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ticks = 0;
    for i in 0..100 {
        let text = sched_oracle::random_config(&mut rng);
        let scn = Scenario::parse(&text).map_err(|e| format!("config {i}: {e}\n{text}"))?;
        ensure(
            scn.partitions.len() <= 2 && scn.processes.len() <= 4 && scn.schedule.mtf <= 12,
            "config too large",
        )?;
        ticks += sched_oracle::check(&scn).map_err(|e| format!("config {i}: {e}"))?;
    }
    Ok(format!("100 configs, {ticks} ticks match the oracle"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("invariant suite on the reference module", criterion_1),
        ("RESUME of a delayed-started process", criterion_2),
        ("SEND_QUEUING_MESSAGE of a blocked sender", criterion_3),
        ("RECEIVE_BUFFER dequeue", criterion_4),
        ("incomplete process state relation", criterion_5),
        ("service translator", criterion_6),
        ("determinism", criterion_7),
        ("scheduler oracle", criterion_8),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
