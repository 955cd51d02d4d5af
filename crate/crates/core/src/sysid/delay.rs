use super::logs::ReleaseEventLog;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayEstimate {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator, 0 for one trial).
    pub std: f64,
    pub n: usize,
}

pub fn estimate_release_delay(log: &ReleaseEventLog) -> Result<DelayEstimate> {
    let n = log.len();
    if n == 0 {
        return Err(Error::InsufficientData("release log has no trials".into()));
    }
    let mean = log.delays().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (log.delays().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(DelayEstimate { mean, std, n })
}
