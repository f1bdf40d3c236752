use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::EnsembleStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetric {
    pub mean: f64,
    pub std_err: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Index along each axis.
    pub index: Vec<usize>,
    pub trials: u64,
    pub excluded: u64,
    pub metrics: BTreeMap<String, CellMetric>,
}

impl SweepCell {
    pub fn from_stats(index: Vec<usize>, stats: &EnsembleStats) -> Self {
        let metrics = stats
            .metrics
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    CellMetric {
                        mean: m.stats.mean,
                        std_err: m.stats.std_err(),
                        count: m.stats.count,
                    },
                )
            })
            .collect();
        Self {
            index,
            trials: stats.requested,
            excluded: stats.excluded_total(),
            metrics,
        }
    }

    /// One cell holding several ensembles; metric names are prefixed with
    /// the ensemble label.
    pub fn from_labeled(index: Vec<usize>, labeled: &[(&str, &EnsembleStats)]) -> Self {
        let mut cell = Self {
            index,
            trials: 0,
            excluded: 0,
            metrics: BTreeMap::new(),
        };
        for (label, stats) in labeled {
            let part = Self::from_stats(Vec::new(), stats);
            cell.trials += part.trials;
            cell.excluded += part.excluded;
            cell.metrics
                .extend(part.metrics.into_iter().map(|(k, v)| (format!("{label}_{k}"), v)));
        }
        cell
    }

    pub fn accepted(&self) -> u64 {
        self.trials - self.excluded
    }

    pub fn mean(&self, metric: &str) -> f64 {
        self.metrics.get(metric).map_or(f64::NAN, |m| m.mean)
    }
}

/// Metric means over a rectangular parameter grid; cells are stored in
/// row-major order of the axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes, cells: Vec::new() }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.shape().iter().product::<usize>()
    }

    pub fn cell(&self, index: &[usize]) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.index == index)
    }

    /// Cells in which every trial was excluded.
    pub fn empty_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.accepted() == 0).count()
    }

    /// Column of means along a 1-D grid.
    pub fn series(&self, metric: &str) -> Vec<f64> {
        self.cells.iter().map(|c| c.mean(metric)).collect()
    }

    fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.cells.iter().flat_map(|c| c.metrics.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn to_csv(&self) -> String {
        let names = self.metric_names();
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        header.push("trials".into());
        header.push("excluded".into());
        for n in &names {
            header.push(format!("{n}_mean"));
            header.push(format!("{n}_stderr"));
            header.push(format!("{n}_count"));
        }
        let mut out = header.join(",");
        out.push('\n');
        for c in &self.cells {
            let mut row: Vec<String> = c
                .index
                .iter()
                .zip(&self.axes)
                .map(|(&i, a)| format!("{:.10e}", a.values[i]))
                .collect();
            row.push(c.trials.to_string());
            row.push(c.excluded.to_string());
            for n in &names {
                match c.metrics.get(n) {
                    Some(m) => {
                        row.push(format!("{:.10e}", m.mean));
                        row.push(format!("{:.10e}", m.std_err));
                        row.push(m.count.to_string());
                    }
                    None => row.extend(["nan".into(), "nan".into(), "0".into()]),
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
