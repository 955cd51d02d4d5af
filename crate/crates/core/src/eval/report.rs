//! CSV report of a sweep.
//!
//! `records.csv`: distance, repeat, episode_seed, outcome, target_x/y/z,
//! impact_x/y/z, downrange_error, crossrange_error, release_step. Fields that
//! do not apply to an outcome are empty.
//!
//! `summary.csv`: one row per distance with outcome counts, landing_rate,
//! mean impact, mean and std of the downrange/crossrange errors and the mean
//! 3D error.
//!
//! `scatter.csv`: long format for plotting, one row per landed record and
//! axis: target_distance, repeat, axis (`downrange`|`crossrange`), impact
//! coordinate along that axis.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::stats::DistanceStats;
use super::sweep::{ImpactRecord, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    distance: f64,
    repeat: usize,
    episode_seed: u64,
    outcome: Outcome,
    target_x: f64,
    target_y: f64,
    target_z: f64,
    impact_x: Option<f64>,
    impact_y: Option<f64>,
    impact_z: Option<f64>,
    downrange_error: Option<f64>,
    crossrange_error: Option<f64>,
    release_step: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    distance: f64,
    total: usize,
    landed: usize,
    no_release: usize,
    collided: usize,
    timeout: usize,
    landing_rate: f64,
    mean_impact_x: Option<f64>,
    mean_impact_y: Option<f64>,
    mean_impact_z: Option<f64>,
    mean_downrange_error: Option<f64>,
    mean_crossrange_error: Option<f64>,
    std_downrange: Option<f64>,
    std_crossrange: Option<f64>,
    mean_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ScatterRow {
    target_distance: f64,
    repeat: usize,
    axis: &'static str,
    impact: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub scatter: PathBuf,
}

/// Header-only output needs explicit headers because serde writes them with
/// the first row.
fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Write(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const RECORD_HEADER: [&str; 13] = [
    "distance",
    "repeat",
    "episode_seed",
    "outcome",
    "target_x",
    "target_y",
    "target_z",
    "impact_x",
    "impact_y",
    "impact_z",
    "downrange_error",
    "crossrange_error",
    "release_step",
];

const SUMMARY_HEADER: [&str; 15] = [
    "distance",
    "total",
    "landed",
    "no_release",
    "collided",
    "timeout",
    "landing_rate",
    "mean_impact_x",
    "mean_impact_y",
    "mean_impact_z",
    "mean_downrange_error",
    "mean_crossrange_error",
    "std_downrange",
    "std_crossrange",
    "mean_error",
];

/// Write the three report files into `dir`, creating it if needed.
pub fn export_report(stats: &[DistanceStats], records: &[ImpactRecord], dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        records: dir.join("records.csv"),
        summary: dir.join("summary.csv"),
        scatter: dir.join("scatter.csv"),
    };
    write_rows(
        &files.records,
        &RECORD_HEADER,
        records.iter().map(|r| RecordRow {
            distance: r.distance,
            repeat: r.repeat,
            episode_seed: r.episode_seed,
            outcome: r.outcome,
            target_x: r.target.x,
            target_y: r.target.y,
            target_z: r.target.z,
            impact_x: r.impact.map(|p| p.x),
            impact_y: r.impact.map(|p| p.y),
            impact_z: r.impact.map(|p| p.z),
            downrange_error: r.downrange_error,
            crossrange_error: r.crossrange_error,
            release_step: r.release_step,
        }),
    )?;
    write_rows(
        &files.summary,
        &SUMMARY_HEADER,
        stats.iter().map(|s| SummaryRow {
            distance: s.distance,
            total: s.total,
            landed: s.landed,
            no_release: s.no_release,
            collided: s.collided,
            timeout: s.timeout,
            landing_rate: s.landing_rate,
            mean_impact_x: s.mean_impact.map(|p| p.x),
            mean_impact_y: s.mean_impact.map(|p| p.y),
            mean_impact_z: s.mean_impact.map(|p| p.z),
            mean_downrange_error: s.mean_downrange_error,
            mean_crossrange_error: s.mean_crossrange_error,
            std_downrange: s.std_downrange,
            std_crossrange: s.std_crossrange,
            mean_error: s.mean_error,
        }),
    )?;
    write_rows(
        &files.scatter,
        &["target_distance", "repeat", "axis", "impact"],
        records.iter().filter_map(|r| Some((r, r.downrange_error?, r.crossrange_error?))).flat_map(|(r, d, c)| {
            [
                ScatterRow {
                    target_distance: r.distance,
                    repeat: r.repeat,
                    axis: "downrange",
                    impact: r.distance + d,
                },
                ScatterRow {
                    target_distance: r.distance,
                    repeat: r.repeat,
                    axis: "crossrange",
                    impact: c,
                },
            ]
        }),
    )?;
    Ok(files)
}

/// Parse a `records.csv` written by [`export_report`].
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ImpactRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (k, row) in reader.deserialize::<RecordRow>().enumerate() {
        let r = row.map_err(|e| Error::MalformedLog {
            path: path.to_path_buf(),
            row: k + 2,
            reason: e.to_string(),
        })?;
        let impact = match (r.impact_x, r.impact_y, r.impact_z) {
            (Some(x), Some(y), Some(z)) => Some(Vector3::new(x, y, z)),
            _ => None,
        };
        out.push(ImpactRecord {
            distance: r.distance,
            repeat: r.repeat,
            episode_seed: r.episode_seed,
            outcome: r.outcome,
            target: Vector3::new(r.target_x, r.target_y, r.target_z),
            impact,
            downrange_error: r.downrange_error,
            crossrange_error: r.crossrange_error,
            release_step: r.release_step,
        });
    }
    Ok(out)
}

/// Counts per outcome tag, in [`Outcome::ALL`] order.
pub fn outcome_counts(records: &[ImpactRecord]) -> [usize; 4] {
    Outcome::ALL.map(|o| records.iter().filter(|r| r.outcome == o).count())
}
