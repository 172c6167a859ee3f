#![allow(dead_code)]

use a653_core::pipeline::{self, RunOptions, RunReport};
use a653_core::{Scenario, SystemState};

pub const REFERENCE: &str = include_str!("../../../cli/scenarios/reference.cfg");

pub fn scenario(text: &str) -> Scenario {
    Scenario::parse(text).unwrap_or_else(|e| panic!("scenario does not parse: {e}"))
}

pub fn run(scn: &Scenario, ticks: u64) -> RunReport {
    pipeline::run(
        scn,
        RunOptions {
            ticks,
            stop_on_violation: false,
        },
    )
}

pub fn state_at(scn: &Scenario, ticks: u64) -> SystemState {
    run(scn, ticks).final_state
}

pub fn pid(scn: &Scenario, name: &str) -> a653_core::ids::ProcessId {
    scn.process_id(name).unwrap_or_else(|| panic!("no process {name}"))
}

pub fn part(scn: &Scenario, name: &str) -> a653_core::ids::PartitionId {
    scn.partition_id(name).unwrap_or_else(|| panic!("no partition {name}"))
}
