//! Operational growth detection on finite runs.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    Growth,
    Bounded,
    Inconclusive,
}

impl StabilityVerdict {
    pub fn name(self) -> &'static str {
        match self {
            StabilityVerdict::Growth => "growth",
            StabilityVerdict::Bounded => "bounded",
            StabilityVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: StabilityVerdict,
    pub checkpoints: Vec<u64>,
    /// Total queued packets at the end of each checkpoint round.
    pub values: Vec<usize>,
    /// Least-squares slope of `values` against the checkpoint index.
    pub slope_per_checkpoint: f64,
    /// Least-squares slope of `values` against the checkpoint round.
    pub slope_per_round: f64,
    pub slope_threshold: f64,
    pub first_half_max: usize,
    pub second_half_max: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Classifies the total-queue series `totals` (indexed by round).
///
/// Growth: values at the checkpoints strictly increase and their fitted
/// slope per checkpoint exceeds `slope_threshold`. Bounded: the largest
/// total in the second half of rounds `0..=last checkpoint` does not exceed
/// the largest in the first half. Anything else is inconclusive.
pub fn detect_instability(totals: &[usize], checkpoints: &[u64], slope_threshold: f64) -> Result<StabilityReport> {
    if checkpoints.len() < 3 {
        return Err(Error::Config(format!("need at least 3 checkpoints, got {}", checkpoints.len())));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    let last = *checkpoints.last().expect("non-empty") as usize;
    if last >= totals.len() {
        return Err(Error::Config(format!("checkpoint {last} beyond the {} recorded rounds", totals.len())));
    }
    let values: Vec<usize> = checkpoints.iter().map(|&c| totals[c as usize]).collect();
    let ys: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let idx: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    let rounds: Vec<f64> = checkpoints.iter().map(|&c| c as f64).collect();
    let slope_per_checkpoint = slope(&idx, &ys);
    let slope_per_round = slope(&rounds, &ys);

    let span = &totals[..=last];
    let mid = span.len() / 2;
    let first_half_max = span[..mid.max(1)].iter().copied().max().unwrap_or(0);
    let second_half_max = span[mid.max(1)..].iter().copied().max().unwrap_or(0);

    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let verdict = if increasing && slope_per_checkpoint > slope_threshold {
        StabilityVerdict::Growth
    } else if second_half_max <= first_half_max {
        StabilityVerdict::Bounded
    } else {
        StabilityVerdict::Inconclusive
    };
    Ok(StabilityReport {
        verdict,
        checkpoints: checkpoints.to_vec(),
        values,
        slope_per_checkpoint,
        slope_per_round,
        slope_threshold,
        first_half_max,
        second_half_max,
    })
}

/// `count` checkpoints spread evenly over `0..horizon`, ending at the last
/// round.
pub fn even_checkpoints(horizon: u64, count: u64) -> Vec<u64> {
    let count = count.max(1).min(horizon.max(1));
    (1..=count).map(|i| i * horizon / count - 1).collect()
}
