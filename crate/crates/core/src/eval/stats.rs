use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::sweep::{ImpactRecord, Outcome};

/// Statistics of one target distance. Accuracy fields cover landed records
/// only and are `None` when nothing landed.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceStats {
    pub distance: f64,
    pub total: usize,
    pub landed: usize,
    pub no_release: usize,
    pub collided: usize,
    pub timeout: usize,
    pub landing_rate: f64,
    pub mean_impact: Option<Vector3<f64>>,
    pub mean_downrange_error: Option<f64>,
    pub mean_crossrange_error: Option<f64>,
    /// Sample standard deviations (`n - 1`), zero for a single landing.
    pub std_downrange: Option<f64>,
    pub std_crossrange: Option<f64>,
    /// Mean 3D distance between impact and target.
    pub mean_error: Option<f64>,
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    fn std(&self) -> Option<f64> {
        match self.n {
            0 => None,
            1 => Some(0.0),
            n => Some((self.m2 / (n - 1) as f64).sqrt()),
        }
    }
}

/// Per-distance statistics in ascending distance order.
pub fn impact_statistics(records: &[ImpactRecord]) -> Vec<DistanceStats> {
    let mut groups: BTreeMap<u64, Vec<&ImpactRecord>> = BTreeMap::new();
    for r in records {
        // Order-preserving key for non-negative floats.
        groups.entry(r.distance.to_bits()).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let count = |o: Outcome| rs.iter().filter(|r| r.outcome == o).count();
            // impact x, y, z, downrange, crossrange, 3D error
            let mut acc = [Running::default(); 6];
            for r in rs.iter().filter(|r| r.outcome == Outcome::Landed) {
                if let (Some(p), Some(d), Some(c)) = (r.impact, r.downrange_error, r.crossrange_error) {
                    for (a, v) in acc.iter_mut().zip([p.x, p.y, p.z, d, c, (p - r.target).norm()]) {
                        a.push(v);
                    }
                }
            }
            let total = rs.len();
            let landed = count(Outcome::Landed);
            DistanceStats {
                distance: rs[0].distance,
                total,
                landed,
                no_release: count(Outcome::NoRelease),
                collided: count(Outcome::Collided),
                timeout: count(Outcome::Timeout),
                landing_rate: landed as f64 / total as f64,
                mean_impact: acc[0].mean().map(|x| Vector3::new(x, acc[1].mean, acc[2].mean)),
                mean_downrange_error: acc[3].mean(),
                mean_crossrange_error: acc[4].mean(),
                std_downrange: acc[3].std(),
                std_crossrange: acc[4].std(),
                mean_error: acc[5].mean(),
            }
        })
        .collect()
}
