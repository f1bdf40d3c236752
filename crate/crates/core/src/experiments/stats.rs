//! Streaming ensemble statistics: Welford accumulators with parallel merge,
//! fixed-range histograms, and exclusion bookkeeping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    pub min: f64,
    pub max: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Self {
        assert!(hi > lo && n_bins > 0);
        Self {
            lo,
            hi,
            bins: vec![0; n_bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let n = self.bins.len();
            let k = ((x - self.lo) / (self.hi - self.lo) * n as f64) as usize;
            self.bins[k.min(n - 1)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bins.len(), other.bins.len());
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    /// Total number of recorded values, including out-of-range ones.
    pub fn mass(&self) -> u64 {
        self.bins.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bins.len() as f64;
        (0..self.bins.len()).map(|k| self.lo + (k as f64 + 0.5) * w).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricStats {
    pub stats: RunningStats,
    /// Trials where this metric was undefined (zero denominator).
    pub undefined: u64,
    pub histogram: Option<Histogram>,
}

impl MetricStats {
    pub fn push(&mut self, value: Option<f64>) {
        match value {
            Some(x) => {
                self.stats.push(x);
                if let Some(h) = &mut self.histogram {
                    h.push(x);
                }
            }
            None => self.undefined += 1,
        }
    }

    pub fn mean(&self) -> f64 {
        self.stats.mean
    }
}

/// Per-metric statistics over an ensemble of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EnsembleStats {
    pub requested: u64,
    pub excluded: BTreeMap<String, u64>,
    pub metrics: BTreeMap<String, MetricStats>,
}

impl EnsembleStats {
    pub fn new(requested: u64) -> Self {
        Self {
            requested,
            ..Default::default()
        }
    }

    pub fn with_histogram(mut self, metric: &str, lo: f64, hi: f64, bins: usize) -> Self {
        self.metrics.entry(metric.to_string()).or_default().histogram = Some(Histogram::new(lo, hi, bins));
        self
    }

    pub fn exclude(&mut self, reason: &str) {
        *self.excluded.entry(reason.to_string()).or_default() += 1;
    }

    pub fn excluded_total(&self) -> u64 {
        self.excluded.values().sum()
    }

    /// Trials that produced metrics.
    pub fn accepted(&self) -> u64 {
        self.requested - self.excluded_total()
    }

    pub fn record(&mut self, values: &[(&str, Option<f64>)]) {
        for (name, v) in values {
            self.metrics.entry(name.to_string()).or_default().push(*v);
        }
    }

    pub fn metric(&self, name: &str) -> Option<&MetricStats> {
        self.metrics.get(name)
    }

    pub fn mean(&self, name: &str) -> f64 {
        self.metrics.get(name).map_or(f64::NAN, |m| m.stats.mean)
    }

    pub fn std_err(&self, name: &str) -> f64 {
        self.metrics.get(name).map_or(f64::NAN, |m| m.stats.std_err())
    }
}
