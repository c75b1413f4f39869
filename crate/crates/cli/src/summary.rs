//! Per-cell aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (`n − 1`); zero for a single value.
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Stats {
    /// `None` for an empty slice. Quartiles interpolate linearly between
    /// order statistics at position `p · (n − 1)`.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        // Summing in sorted order makes the result independent of input order.
        let mean = sorted.iter().sum::<f64>() / n;
        let std = if sorted.len() > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
        })
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub nmse: Stats,
    pub corr: Stats,
    pub block_hit_rate: Stats,
    pub support_size: Stats,
    pub iterations: Stats,
    pub elapsed_ms: Stats,
    pub success_rate: f64,
    pub converged_rate: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    let stats = |f: &dyn Fn(&TrialRecord) -> f64| {
        Stats::of(&records.iter().map(f).collect::<Vec<_>>()).ok_or(Error::NoRecords)
    };
    let rate = |f: &dyn Fn(&TrialRecord) -> bool| {
        records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64
    };
    Ok(Summary {
        trials: records.len(),
        nmse: stats(&|r| r.metrics.nmse)?,
        corr: stats(&|r| r.metrics.corr)?,
        block_hit_rate: stats(&|r| r.metrics.block_hit_rate)?,
        support_size: stats(&|r| r.metrics.support_size as f64)?,
        iterations: stats(&|r| r.iterations as f64)?,
        elapsed_ms: stats(&|r| r.elapsed_ms)?,
        success_rate: rate(&|r| r.metrics.success),
        converged_rate: rate(&|r| r.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_values_use_sample_std() {
        let s = Stats::of(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert!((s.std - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.q1, 0.25);
        assert_eq!(s.q3, 0.75);
    }

    #[test]
    fn single_value_has_zero_spread() {
        let s = Stats::of(&[3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.q1, s.q3), (3.0, 0.0, 3.0, 3.0));
    }

    #[test]
    fn order_does_not_matter() {
        let a = [0.3, 1e-9, 7.0, 0.1, 2.5];
        let mut b = a;
        b.reverse();
        assert_eq!(Stats::of(&a), Stats::of(&b));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(Stats::of(&[]).is_none());
        assert!(matches!(summarize(&[]), Err(Error::NoRecords)));
    }
}
