use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::metrics::{AgreementScores, Metric};
use crate::seed;

/// Pearson correlation; undefined when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!(
            "correlation needs two equal-length series of at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // Relative to the data scale, anything this small is rounding noise.
    let tiny = |s: f64, m: f64| s <= 1e-24 * (m * m * n).max(f64::MIN_POSITIVE);
    if tiny(saa, ma) || tiny(sbb, mb) || saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("correlation of a constant series"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub benchmark: String,
    pub metric: Metric,
    /// `None` when the correlation is undefined.
    pub r: Option<f64>,
    /// Bootstrap standard deviation of `r`.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationTable {
    pub fn get(&self, benchmark: &str, metric: Metric) -> Option<&CorrelationEntry> {
        self.entries
            .iter()
            .find(|e| e.benchmark == benchmark && e.metric == metric)
    }
}

/// Drop scores of every method under one benchmark, in method order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDrops {
    pub benchmark: String,
    pub drops: Vec<f64>,
}

/// Pearson r between drop scores and each agreement metric across methods,
/// with a bootstrap over methods for the spread.
///
/// Resamples in which either side is constant are skipped.
pub fn correlation_table(
    drops: &[BenchmarkDrops],
    agreements: &[AgreementScores],
    n_bootstrap: usize,
    seed: u64,
) -> Result<CorrelationTable> {
    let m = agreements.len();
    if m < 3 {
        return Err(Error::invalid(format!("correlations need at least 3 methods, got {m}")));
    }
    let mut entries = Vec::new();
    for (b, bench) in drops.iter().enumerate() {
        if bench.drops.len() != m {
            return Err(Error::DimensionMismatch {
                context: "drop scores per method",
                expected: m,
                found: bench.drops.len(),
            });
        }
        for (mi, metric) in Metric::ALL.into_iter().enumerate() {
            let values: Vec<f64> = agreements.iter().map(|a| a.get(metric)).collect();
            let r = pearson(&bench.drops, &values).ok();
            let mut rng = seed::rng_for(seed, "bootstrap", (b * Metric::ALL.len() + mi) as u64);
            let mut samples = Vec::with_capacity(n_bootstrap);
            let (mut xs, mut ys) = (vec![0.0; m], vec![0.0; m]);
            for _ in 0..n_bootstrap {
                for j in 0..m {
                    let pick = rng.random_range(0..m);
                    xs[j] = bench.drops[pick];
                    ys[j] = values[pick];
                }
                if let Ok(rb) = pearson(&xs, &ys) {
                    samples.push(rb);
                }
            }
            let std = (samples.len() >= 2).then(|| {
                let k = samples.len() as f64;
                let mean = samples.iter().sum::<f64>() / k;
                (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            });
            entries.push(CorrelationEntry {
                benchmark: bench.benchmark.clone(),
                metric,
                r,
                std,
            });
        }
    }
    Ok(CorrelationTable { entries })
}
