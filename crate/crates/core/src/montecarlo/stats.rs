//! Batch-means error bars and replica pooling.

use serde::{Deserialize, Serialize};

/// Replica spread above this multiple of the pooled standard error marks a
/// run as unconverged.
pub const SPREAD_FACTOR: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    /// Effective number of independent samples behind `value`.
    pub n_effective: f64,
    /// Standard deviation of the per-replica means (0 for one replica).
    pub replica_spread: f64,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_effective: f64::INFINITY,
            replica_spread: 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            replica_spread: self.replica_spread * factor.abs(),
            ..*self
        }
    }

    /// Replica means agree with each other within [`SPREAD_FACTOR`] pooled
    /// standard errors.
    pub fn is_converged(&self) -> bool {
        self.replica_spread <= SPREAD_FACTOR * self.std_error
    }

    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.value - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Single-series estimate: mean, batch-means standard error, effective
/// sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_effective: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Splits `series` into `batches` equal blocks (dropping the oldest
/// remainder) and uses the spread of block means as the error estimate.
pub fn batch_means(series: &[f64], batches: usize) -> SeriesEstimate {
    let batches = batches.max(2);
    let size = series.len() / batches;
    if size == 0 {
        return SeriesEstimate {
            mean: mean(series),
            std_error: f64::NAN,
            n_effective: series.len() as f64,
        };
    }
    let used = &series[series.len() - size * batches..];
    let block_means: Vec<f64> = used.chunks_exact(size).map(mean).collect();
    let m = mean(used);
    let se = (sample_variance(&block_means) / batches as f64).sqrt();
    let naive = sample_variance(used);
    let n_effective = if se > 0.0 {
        (naive / (se * se)).min(used.len() as f64)
    } else {
        used.len() as f64
    };
    SeriesEstimate {
        mean: m,
        std_error: se,
        n_effective,
    }
}

/// Equal-weight average of replica estimates; replicas are summed in the
/// order given.
pub fn pool_replicas(replicas: &[SeriesEstimate]) -> EstimateWithError {
    let r = replicas.len() as f64;
    let means: Vec<f64> = replicas.iter().map(|e| e.mean).collect();
    let value = mean(&means);
    let std_error = replicas
        .iter()
        .map(|e| e.std_error.powi(2))
        .sum::<f64>()
        .sqrt()
        / r;
    EstimateWithError {
        value,
        std_error,
        n_effective: replicas.iter().map(|e| e.n_effective).sum(),
        replica_spread: sample_variance(&means).sqrt(),
    }
}
