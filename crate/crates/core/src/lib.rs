//! Liveness enforcement for behavioral programs.

pub mod arbiter;
pub mod cli;
pub mod error;
pub mod event;
pub mod experiment;
pub mod explorer;
pub mod gba;
mod graph;
pub mod mdp;
pub mod models;
pub mod patterns;
pub mod program;
pub mod trace;
pub mod verifier;

pub use arbiter::{Arbiter, Choice, RandomArbiter, SeededRng};
pub use error::{Error, Result};
pub use event::{Event, EventSet, Scalar, STUTTER};
pub use explorer::{enumerate_lassos, explore, find_hot_lassos, ExploreLimits, ExploredLts, Lasso};
pub use gba::{solve, to_gba, GbaArbiter, LivenessGba, WinningSet};
pub use mdp::{value_iteration, LabelMode, MdpArbiter, MdpModel, QTable};
pub use program::{local, BProgram, BThreadDef, CompositeState, LocalState, SyncStatement};
pub use trace::{run, run_until, TerminationReason, Trace};
