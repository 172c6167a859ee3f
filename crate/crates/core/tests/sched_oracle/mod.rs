//! Brute-force scheduling oracle over small random modules.
//!
//! The oracle re-derives, at every settled tick, which partition window is
//! active and which process of the active partition must run, and compares
//! with the pipeline's choice.

#![allow(dead_code)]

use a653_core::ids::{PartitionId, ProcessId};
use a653_core::pipeline::{self, Event, RunOptions};
use a653_core::state::LockHolder;
use a653_core::types::{PartitionMode, ProcessState};
use a653_core::{Scenario, SystemState};
use rand::Rng;
use std::fmt::Write;

/// A random module: at most 2 partitions, 4 processes, MTF at most 12,
/// plus a script of blocking calls so the Ready sets change.
pub fn random_config(rng: &mut impl Rng) -> String {
    let mtf = rng.gen_range(2..=12u64);
    let nparts = rng.gen_range(1..=2usize).min(mtf as usize);
    let mut out = String::new();
    writeln!(out, "schedule.mtf = {mtf}").unwrap();
    writeln!(out, "max_priority = 8").unwrap();

    // Windows: cut 0..mtf at random points, leave some slices empty.
    let mut cuts: Vec<u64> = (1..mtf).filter(|_| rng.gen_bool(0.4)).collect();
    cuts.insert(0, 0);
    cuts.push(mtf);
    let mut windows = Vec::new();
    for w in cuts.windows(2) {
        if windows.is_empty() || rng.gen_bool(0.8) {
            windows.push((w[0], w[1]));
        }
    }
    while windows.len() < nparts {
        let (s, e) = windows.pop().unwrap_or((0, mtf));
        if e - s < 2 {
            windows.push((s, e));
            break;
        }
        let mid = rng.gen_range(s + 1..e);
        windows.push((s, mid));
        windows.push((mid, e));
    }
    let nparts = nparts.min(windows.len());
    for (i, (s, e)) in windows.iter().enumerate() {
        let p = if i < nparts {
            i
        } else {
            rng.gen_range(0..nparts)
        };
        writeln!(out, "schedule.window.{} = P{}:{s}:{e}", i + 1, p + 1).unwrap();
    }

    let nprocs = rng.gen_range(1..=4usize);
    let mut procs = Vec::new();
    for i in 0..nprocs {
        let part = if i < nparts {
            i
        } else {
            rng.gen_range(0..nparts)
        };
        let prio = rng.gen_range(1..=4u32);
        let name = format!("T{i}");
        if rng.gen_bool(0.5) {
            let period = mtf * rng.gen_range(1..=2u64);
            writeln!(
                out,
                "process.{name} = P{}:{prio}:periodic:{period}:{period}",
                part + 1
            )
            .unwrap();
            procs.push((name, true));
        } else {
            writeln!(out, "process.{name} = P{}:{prio}:aperiodic::inf", part + 1).unwrap();
            if rng.gen_bool(0.3) {
                writeln!(
                    out,
                    "process.{name}.start = delayed:{}",
                    rng.gen_range(0..mtf)
                )
                .unwrap();
            }
            procs.push((name, false));
        }
    }
    for (i, (name, periodic)) in procs.iter().enumerate() {
        for k in 0..rng.gen_range(0..=4) {
            let tick = rng.gen_range(0..3 * mtf);
            let call = match rng.gen_range(0..4) {
                0 if *periodic => "PERIODIC_WAIT".to_string(),
                0 | 1 => format!("TIMED_WAIT:{}", rng.gen_range(0..=mtf)),
                2 => format!("SUSPEND_SELF:{}", rng.gen_range(1..=mtf)),
                _ => format!("SET_PRIORITY:{name}:{}", rng.gen_range(1..=4)),
            };
            writeln!(out, "script.{} = {tick}:{name}:{call}", i * 10 + k + 1).unwrap();
        }
    }
    out
}

fn expected_partition(scn: &Scenario, s: &SystemState) -> Option<PartitionId> {
    let offset = s.clock_tick % scn.schedule.mtf;
    let mut found = None;
    for w in &scn.schedule.windows {
        if w.start <= offset && offset < w.end {
            found = Some(w.partition);
        }
    }
    found.filter(|p| s.partitions[p.index()].mode != PartitionMode::Idle)
}

fn expected_process(s: &SystemState, part: PartitionId) -> Option<ProcessId> {
    let rec = &s.partitions[part.index()];
    if rec.mode != PartitionMode::Normal {
        return None;
    }
    let runnable: Vec<_> = s
        .processes
        .values()
        .filter(|p| {
            p.partition == part && matches!(p.state, ProcessState::Ready | ProcessState::Running)
        })
        .collect();
    if let Some(h) = rec.error_handler {
        if runnable.iter().any(|p| p.id == h) {
            return Some(h);
        }
    }
    if rec.lock_level > 0 {
        if let Some(LockHolder::Process(h)) = rec.lock_holder {
            if runnable.iter().any(|p| p.id == h) {
                return Some(h);
            }
        }
    }
    let mut best: Option<&&a653_core::state::ProcessRec> = None;
    for p in &runnable {
        best = match best {
            None => Some(p),
            Some(b) => {
                let better = p.current_priority > b.current_priority
                    || (p.current_priority == b.current_priority
                        && (p.ready_since < b.ready_since
                            || (p.ready_since == b.ready_since && p.id < b.id)));
                Some(if better { p } else { b })
            }
        };
    }
    best.map(|p| p.id)
}

/// Settled states at each tick of a 3-MTF run, with the tick they belong to.
pub fn settled_states(scn: &Scenario) -> Vec<SystemState> {
    let report = pipeline::run(
        scn,
        RunOptions {
            ticks: 3 * scn.schedule.mtf,
            stop_on_violation: false,
        },
    );
    let mut out = Vec::new();
    let steps = &report.steps;
    for (i, (_, step)) in steps.iter().enumerate() {
        let next_is_tick = steps.get(i + 1).is_none_or(|(ev, _)| *ev == Event::Tick);
        if next_is_tick {
            out.push(step.state.clone());
        }
    }
    out
}

/// Compares the pipeline with the oracle at every tick.
pub fn check(scn: &Scenario) -> Result<usize, String> {
    let states = settled_states(scn);
    for s in &states {
        let part = expected_partition(scn, s);
        if s.current_partition != part {
            return Err(format!(
                "tick {}: partition {:?}, oracle {:?}",
                s.clock_tick, s.current_partition, part
            ));
        }
        let proc = part.and_then(|p| expected_process(s, p));
        if s.current_process != proc {
            return Err(format!(
                "tick {}: process {:?}, oracle {:?}",
                s.clock_tick, s.current_process, proc
            ));
        }
    }
    Ok(states.len())
}
