//! Executable model of an ARINC 653 partitioning kernel and its APEX
//! services, with bounded invariant and refinement checking.
//!
//! The state is a plain value ([`state::SystemState`]); every operation
//! returns a new state. [`pipeline`] turns the operations into a labelled
//! transition system and [`checker`] explores it.

pub mod checker;
pub mod config;
pub mod hm;
pub mod ids;
pub mod invariants;
pub mod ipc;
pub mod kernel;
pub mod pipeline;
pub mod sched;
pub mod services;
pub mod state;
pub mod trace;
pub mod types;

pub use config::Scenario;
pub use state::{new_state, SystemState};
