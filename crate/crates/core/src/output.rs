//! Run artifacts: data files, the JSON provenance sidecar and optional
//! gnuplot scripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// One named file produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Everything a driver produced, before it is written to disk.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// One-line human summary.
    pub summary: String,
    /// Excluded trials by reason, summed over the run.
    pub exclusions: BTreeMap<String, u64>,
    /// Some requested ensembles produced no accepted trial.
    pub partial: bool,
    /// A self-check failed; the run still writes its data.
    pub failed: bool,
    /// Driver-specific values recorded in the sidecar.
    pub extra: serde_json::Value,
}

impl RunOutput {
    pub fn push(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.artifacts.push(Artifact::new(name, contents));
    }

    pub fn add_exclusions(&mut self, excluded: &BTreeMap<String, u64>) {
        for (k, v) in excluded {
            *self.exclusions.entry(k.clone()).or_default() += v;
        }
    }

    /// Hash over file names and contents in emission order.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for a in &self.artifacts {
            h.update(a.name.as_bytes());
            h.update([0u8]);
            h.update(a.contents.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    config: serde_json::Value,
    input_hash: String,
    content_hash: String,
    files: BTreeMap<&'a str, String>,
    exclusions: &'a BTreeMap<String, u64>,
    partial: bool,
    failed: bool,
    summary: &'a str,
    results: &'a serde_json::Value,
    timestamp: u64,
}

/// Hash of the resolved configuration in canonical JSON form.
pub fn input_hash(config: &RunConfig) -> String {
    sha256_hex(config.to_json().to_string().as_bytes())
}

/// Writes every artifact and `<experiment>.json` into the output
/// directory; returns the sidecar path.
pub fn write_run(config: &RunConfig, output: &RunOutput) -> Result<PathBuf> {
    let dir = &config.out;
    std::fs::create_dir_all(dir)?;
    for a in &output.artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let sidecar = Sidecar {
        tool: "ringqed",
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.name(),
        seed: config.seed,
        config: config.to_json(),
        input_hash: input_hash(config),
        content_hash: output.content_hash(),
        files: output
            .artifacts
            .iter()
            .map(|a| (a.name.as_str(), sha256_hex(a.contents.as_bytes())))
            .collect(),
        exclusions: &output.exclusions,
        partial: output.partial,
        failed: output.failed,
        summary: &output.summary,
        results: &output.extra,
        timestamp,
    };
    let path = dir.join(format!("{}.json", config.experiment.name()));
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(path)
}

/// Gnuplot script plotting `columns` of a CSV against its first column.
pub fn gnuplot_script(csv: &str, xlabel: &str, ylabel: &str, columns: &[&str], logx: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    if logx {
        s.push_str("set logscale x\n");
    }
    let plots: Vec<String> = columns
        .iter()
        .map(|c| format!("'{csv}' using 1:(column('{c}')) with linespoints title '{c}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
