//! Experiment runners. Each writes its tables and figures into an
//! [`OutputDir`](crate::output::OutputDir) and returns the computed results.

pub mod common;
pub mod dimension_sweep;
pub mod rate_study;
pub mod single;
pub mod support_recovery;
pub mod verify;
