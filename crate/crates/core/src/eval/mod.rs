//! Sim-to-sim evaluation: target sweeps, impact statistics and CSV reports.

mod policy;
mod report;
mod stats;
mod sweep;

pub use policy::{MeanPolicy, Policy, ScriptedThrow};
pub use report::{export_report, outcome_counts, read_records, ReportFiles};
pub use stats::{impact_statistics, DistanceStats};
pub use sweep::{fixed_start, run_episode, run_target_sweep, ImpactRecord, Outcome, SweepConfig};
