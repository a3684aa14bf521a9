//! Orchestration behind the `vesselkit` binary: configuration, stage
//! runners, dataset batch evaluation, and run manifests. Kept as a
//! library so the pieces are unit-testable without spawning processes.

pub mod config;
pub mod dataset;
pub mod manifest;
pub mod stages;
