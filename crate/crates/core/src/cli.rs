//! Command-line front end: argument parsing, config resolution, experiment
//! dispatch and artifact writing.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::cavity::CouplingMode;
use crate::config::{template, Experiment, RunConfig, SourceKind, SpectrumVariant};
use crate::dynamics::EmissionRecord;
use crate::error::{Error, Result};
use crate::experiments::arrays::{compare_line_ring, sweep_array_map, sweep_disorder, ArrayRun, DisorderAxis};
use crate::experiments::cloud::{calibrate_cloud, cloud_stats, decay_ratio_sweep, default_k_scan, scan_wavenumber, CloudRun};
use crate::experiments::lorentz::lorentzian;
use crate::experiments::spectrum::{compute_spectrum, SpectrumOptions, SpectrumResult, SpectrumRun, SpectrumSource};
use crate::experiments::{
    derive_seed, require_accepted, run_trials, trial_rng, EnsembleStats, Excitation, ModelOptions, Realization, SweepGrid,
};
use crate::geometry::{build_array, sample_cloud, sample_cloud_with};
use crate::oracle::{compare_models, ComparisonReport, Tolerances};
use crate::output::{gnuplot_script, write_run, RunOutput};

#[derive(Debug, Parser)]
#[command(name = "ringqed", version, about = "Collective emission of atoms near a microring resonator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay-rate statistics of random atom clouds.
    CloudDecay(RunArgs),
    /// Bus-waveguide transmission spectrum and linewidth fit.
    Spectrum(RunArgs),
    /// Free-space decay of perfect arrays over spacing and effective index.
    ArrayMap(RunArgs),
    /// Array decay rates versus height spread or filling fraction.
    Disorder(RunArgs),
    /// Perfect line versus ring arrays over atom number.
    RingVsLine(RunArgs),
    /// Cloud decay-rate ratios over atom number for both excitations.
    RatioSweep(RunArgs),
    /// Cross-check the eigenmode solution against master-equation propagation.
    OracleCheck(RunArgs),
    /// Print a commented configuration template with every default.
    EmitConfig(EmitArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,
    /// Worker threads.
    #[arg(long, value_name = "N", env = "RINGQED_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub n_atoms: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub n_eff: Option<f64>,
    /// Array lattice spacing in units of λ0.
    #[arg(long, allow_negative_numbers = true)]
    pub spacing: Option<f64>,
    /// Array height spread in nm.
    #[arg(long)]
    pub delta_z: Option<f64>,
    #[arg(long)]
    pub filling: Option<f64>,
    #[arg(long, value_parser = parse_excitation)]
    pub excitation: Option<Excitation>,
    /// Drop the off-diagonal free-space couplings (for `spectrum`, add
    /// this as an extra variant).
    #[arg(long)]
    pub no_freespace: bool,
    #[arg(long)]
    pub uniform_c: bool,
    #[arg(long)]
    pub poisson_n: bool,
    /// Disorder axis: delta-z or filling.
    #[arg(long, value_parser = parse_axis)]
    pub axis: Option<DisorderAxis>,
    /// Scan the mode wavenumber over the default range.
    #[arg(long)]
    pub k_scan: bool,
    /// Also write gnuplot scripts.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EmitArgs {
    /// Experiment the template is prepared for.
    #[arg(value_parser = parse_experiment, default_value = "cloud-decay")]
    pub experiment: Experiment,
    /// Write to a file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_excitation(s: &str) -> std::result::Result<Excitation, String> {
    match s {
        "tds" => Ok(Excitation::Tds),
        "ss" => Ok(Excitation::Ss),
        _ => Err(format!("expected tds or ss, got `{s}`")),
    }
}

fn parse_axis(s: &str) -> std::result::Result<DisorderAxis, String> {
    match s {
        "delta-z" | "delta_z" => Ok(DisorderAxis::DeltaZ),
        "filling" => Ok(DisorderAxis::Filling),
        _ => Err(format!("expected delta-z or filling, got `{s}`")),
    }
}

fn parse_experiment(s: &str) -> std::result::Result<Experiment, String> {
    Experiment::from_name(s).ok_or_else(|| format!("unknown experiment `{s}`"))
}

/// Failure of a CLI invocation, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 2).
    Usage(Error),
    /// Failure while computing or writing (exit 1).
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => e.fmt(f),
        }
    }
}

/// Builds the resolved configuration from the optional file and flags.
pub fn resolve_config(experiment: Experiment, args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::parse_path(path)?,
        None => RunConfig::default(),
    };
    cfg.experiment = experiment;
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if args.n_atoms.is_some() {
        cfg.n_atoms = args.n_atoms;
    }
    if let Some(v) = args.c1 {
        cfg.c1 = v;
    }
    if let Some(v) = args.n_eff {
        cfg.cavity.n_eff = v;
    }
    if let Some(v) = args.spacing {
        cfg.array.spacing = v;
    }
    if let Some(v) = args.delta_z {
        cfg.array.delta_z_nm = v;
    }
    if let Some(v) = args.filling {
        cfg.array.filling = v;
    }
    if let Some(v) = args.excitation {
        cfg.excitation = v;
    }
    if args.no_freespace {
        if experiment == Experiment::Spectrum {
            if !cfg.spectrum.variants.contains(&SpectrumVariant::NoFreespace) {
                cfg.spectrum.variants.push(SpectrumVariant::NoFreespace);
            }
        } else {
            cfg.free_space = false;
        }
    }
    if args.uniform_c {
        cfg.uniform_c = true;
    }
    if args.poisson_n {
        cfg.cloud.poisson_n = true;
    }
    if let Some(v) = args.axis {
        cfg.sweep.axis = v;
    }
    if args.k_scan && cfg.sweep.k_scan.is_none() {
        cfg.sweep.k_scan = Some(default_k_scan());
    }
    if args.gnuplot {
        cfg.gnuplot = true;
    }
    cfg.finalize()
}

/// Runs the configured experiment, writes its artifacts and returns the
/// output; a failed self-check is reported through `RunOutput::failed`.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunOutput, CliError> {
    let output = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(Error::Numerical(format!("cannot start worker pool: {e}"))))?
            .install(|| execute(cfg)),
        None => execute(cfg),
    }
    .map_err(classify)?;
    write_run(cfg, &output).map_err(CliError::Runtime)?;
    Ok(output)
}

fn classify(e: Error) -> CliError {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidCalibration(_) => CliError::Usage(e),
        other => CliError::Runtime(other),
    }
}

/// Dispatches to the experiment driver without touching the disk.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.experiment {
        Experiment::CloudDecay => cloud_decay(cfg),
        Experiment::Spectrum => spectrum(cfg),
        Experiment::ArrayMap => array_map(cfg),
        Experiment::Disorder => disorder(cfg),
        Experiment::RingVsLine => ring_vs_line(cfg),
        Experiment::RatioSweep => ratio_sweep(cfg),
        Experiment::OracleCheck => oracle_check(cfg),
    }
}

/// Parses `std::env::args`, runs, prints the summary; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (experiment, args) = match cli.command {
        Command::EmitConfig(emit) => {
            let text = template(emit.experiment);
            return match emit.out {
                Some(path) => match std::fs::write(&path, text) {
                    Ok(()) => 0,
                    Err(e) => {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        1
                    }
                },
                None => {
                    print!("{text}");
                    0
                }
            };
        }
        Command::CloudDecay(a) => (Experiment::CloudDecay, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::ArrayMap(a) => (Experiment::ArrayMap, a),
        Command::Disorder(a) => (Experiment::Disorder, a),
        Command::RingVsLine(a) => (Experiment::RingVsLine, a),
        Command::RatioSweep(a) => (Experiment::RatioSweep, a),
        Command::OracleCheck(a) => (Experiment::OracleCheck, a),
    };
    let cfg = match resolve_config(experiment, &args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(output) => {
            println!("{}", output.summary);
            if output.partial {
                eprintln!("warning: some ensembles had no accepted trials; results marked partial");
            }
            if output.failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn coupling(cfg: &RunConfig) -> CouplingMode {
    if cfg.uniform_c {
        CouplingMode::Uniform
    } else {
        CouplingMode::HeightDependent
    }
}

fn cloud_run(cfg: &RunConfig) -> CloudRun {
    let mut run = CloudRun::new(cfg.cloud.params(&cfg.calibration), cfg.c1, cfg.excitation, cfg.trials, cfg.seed);
    run.cavity = cfg.cavity.params();
    run.coupling = coupling(cfg);
    run.free_space = cfg.free_space;
    run
}

fn array_run(cfg: &RunConfig) -> ArrayRun {
    let mut run = ArrayRun::new(cfg.array.params(&cfg.calibration), cfg.c1, cfg.trials, cfg.seed);
    run.cavity = cfg.cavity.params();
    run.coupling = coupling(cfg);
    run.excitation = cfg.excitation;
    run.free_space = cfg.free_space;
    run
}

/// `mean ± std_err`, dropping the error when it rounds to zero.
fn pm(stats: &EnsembleStats, name: &str, digits: usize) -> String {
    let err = stats.std_err(name);
    if err.is_finite() && err < 0.5 * 10f64.powi(-(digits as i32)) {
        format!("{:.*}", digits, stats.mean(name))
    } else {
        format!("{:.*} ± {:.*}", digits, stats.mean(name), digits, err)
    }
}

fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from("metric,mean,std_err,count,undefined\n");
    for (name, m) in &stats.metrics {
        out.push_str(&format!(
            "{name},{:.12e},{:.12e},{},{}\n",
            m.stats.mean,
            m.stats.std_err(),
            m.stats.count,
            m.undefined
        ));
    }
    out
}

fn histogram_csv(stats: &EnsembleStats) -> String {
    let hists: Vec<_> = ["gamma_f", "gamma_c"]
        .iter()
        .filter_map(|n| stats.metric(n).and_then(|m| m.histogram.as_ref()).map(|h| (*n, h)))
        .collect();
    let mut out = String::from("bin");
    for (n, _) in &hists {
        out.push_str(&format!(",{n}_center,{n}_count"));
    }
    out.push('\n');
    let bins = hists.iter().map(|(_, h)| h.bins.len()).max().unwrap_or(0);
    for k in 0..bins {
        out.push_str(&k.to_string());
        for (_, h) in &hists {
            out.push_str(&format!(",{:.6e},{}", h.bin_centers()[k], h.bins[k]));
        }
        out.push('\n');
    }
    out
}

fn grid_output(out: &mut RunOutput, grid: &SweepGrid) {
    let excluded: u64 = grid.cells.iter().map(|c| c.excluded).sum();
    if excluded > 0 {
        *out.exclusions.entry("trials".into()).or_default() += excluded;
    }
    out.partial |= grid.empty_cells() > 0;
}

fn cloud_decay(cfg: &RunConfig) -> Result<RunOutput> {
    let run = cloud_run(cfg);
    let stats = require_accepted(cloud_stats(&run, None)?)?;
    let mut out = RunOutput::default();
    out.add_exclusions(&stats.excluded);
    out.push("cloud_decay.csv", ensemble_csv(&stats));
    out.push("histograms.csv", histogram_csv(&stats));

    let mut rng = trial_rng(run.seed, 0);
    let atoms = sample_cloud_with(&run.cloud, &mut rng)?;
    out.push("atoms.json", atoms.to_json()? + "\n");
    let cavity = calibrate_cloud(&run.cavity, &run.cloud, run.c1, run.coupling);
    let options = ModelOptions {
        coupling: run.coupling,
        free_space: run.free_space,
        k_override: None,
    };
    match Realization::new(&atoms, &cavity, &options).and_then(|r| {
        let state = r.excite(run.excitation, cavity.eta)?;
        EmissionRecord::compute(&r.eigen, &state, &r.coupling, &r.channels, &EmissionRecord::default_times())
    }) {
        Ok(record) => {
            out.push("emission.csv", record.to_csv());
            out.push("emission_metrics.json", serde_json::to_string_pretty(&record.metrics_json())? + "\n");
            if cfg.gnuplot {
                out.push("emission.gp", gnuplot_script("emission.csv", "t Gamma0", "rate", &["R_c", "R_f", "e"], true));
            }
        }
        Err(e) => log::warn!("trial 0 excluded, no emission record written: {e}"),
    }

    if let Some(ks) = &cfg.sweep.k_scan {
        let grid = scan_wavenumber(&run, ks)?;
        grid_output(&mut out, &grid);
        out.push("k_scan.csv", grid.to_csv());
        if cfg.gnuplot {
            out.push(
                "k_scan.gp",
                gnuplot_script("k_scan.csv", "k / k0", "rate / Gamma0", &["gamma_f_mean", "gamma_c_mean"], false),
            );
        }
    }
    if cfg.gnuplot {
        out.push(
            "histograms.gp",
            "set datafile separator ','\nset style data histeps\nplot 'histograms.csv' using 2:3 title 'gamma_f', \\\n     'histograms.csv' using 4:5 title 'gamma_c'\n",
        );
    }
    out.summary = format!(
        "gamma_f = {} Γ0, gamma_c = {} Γ0 (N={}, {} trials, {} excluded)",
        pm(&stats, "gamma_f", 3),
        pm(&stats, "gamma_c", 4),
        run.cloud.n_atoms,
        stats.requested,
        stats.excluded_total()
    );
    out.extra = json!({
        "gamma_f": stats.mean("gamma_f"),
        "gamma_f_stderr": stats.std_err("gamma_f"),
        "gamma_c": stats.mean("gamma_c"),
        "gamma_c_stderr": stats.std_err("gamma_c"),
        "theta": stats.mean("theta"),
        "accepted": stats.accepted(),
    });
    Ok(out)
}

fn spectrum_csv(main: &SpectrumResult, variants: &[(&str, SpectrumResult)]) -> String {
    let fit_at = |r: &SpectrumResult, d: f64| r.fit.map_or(f64::NAN, |f| lorentzian(d, f.center, f.fwhm, f.amplitude, f.offset));
    let mut out = String::from("detuning,transmission,extinction,empty_transmission,fit");
    for (label, _) in variants {
        out.push_str(&format!(",{label}_transmission,{label}_extinction,{label}_fit"));
    }
    out.push('\n');
    for (k, &d) in main.detunings.iter().enumerate() {
        out.push_str(&format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            d,
            main.transmission[k],
            main.extinction[k],
            main.empty_transmission[k],
            fit_at(main, d)
        ));
        for (_, r) in variants {
            out.push_str(&format!(",{:.10e},{:.10e},{:.10e}", r.transmission[k], r.extinction[k], fit_at(r, d)));
        }
        out.push('\n');
    }
    out
}

fn fit_json(r: &SpectrumResult) -> serde_json::Value {
    json!({
        "fit": r.fit,
        "trials": r.trials,
        "excluded": r.excluded,
    })
}

fn spectrum(cfg: &RunConfig) -> Result<RunOutput> {
    let (source, n) = match cfg.spectrum.source {
        SourceKind::Cloud => (SpectrumSource::Cloud(cfg.cloud.params(&cfg.calibration)), cfg.cloud.n_atoms),
        SourceKind::Array => {
            let a = cfg.array.params(&cfg.calibration);
            let n = a.target_atoms.unwrap_or(a.n_sites);
            (SpectrumSource::Array(a), n)
        }
    };
    let expected = 1.0 + n as f64 * cfg.c1;
    let detunings = cfg.spectrum.detunings.clone().unwrap_or_else(|| {
        let half = cfg.spectrum.half_width * expected;
        let p = cfg.spectrum.points;
        (0..p).map(|k| -half + 2.0 * half * k as f64 / (p - 1) as f64).collect()
    });
    let base = SpectrumRun {
        source,
        cavity: cfg.cavity.params(),
        c1: cfg.c1,
        options: SpectrumOptions {
            uniform_c: cfg.uniform_c,
            poisson_n: cfg.cloud.poisson_n,
            free_space: cfg.free_space,
            stochastic: true,
        },
        detunings,
        trials: cfg.trials,
        seed: cfg.seed,
    };
    let main = compute_spectrum(&base)?;
    let mut variants = Vec::new();
    for v in &cfg.spectrum.variants {
        let mut run = base.clone();
        match v {
            SpectrumVariant::NoFreespace => run.options.free_space = false,
            SpectrumVariant::NoStochastic => run.options.stochastic = false,
        }
        variants.push((v.label(), compute_spectrum(&run)?));
    }

    let mut out = RunOutput::default();
    for r in std::iter::once(&main).chain(variants.iter().map(|(_, r)| r)) {
        if r.excluded > 0 {
            *out.exclusions.entry("trials".into()).or_default() += r.excluded;
        }
    }
    out.push("spectrum.csv", spectrum_csv(&main, &variants));
    if cfg.gnuplot {
        let mut cols = vec!["extinction"];
        let names: Vec<String> = variants.iter().map(|(l, _)| format!("{l}_extinction")).collect();
        cols.extend(names.iter().map(String::as_str));
        out.push("spectrum.gp", gnuplot_script("spectrum.csv", "detuning / Gamma0", "1 - |t|^2", &cols, false));
    }
    let fwhm = |r: &SpectrumResult| match r.fit {
        Some(f) if f.converged => format!("{:.3} Γ0", f.fwhm),
        Some(f) => format!("{:.3} Γ0 (not converged)", f.fwhm),
        None => "no fit".to_string(),
    };
    let mut summary = format!("fwhm = {} (1 + N C1 = {:.3}, N={})", fwhm(&main), expected, n);
    for (label, r) in &variants {
        summary.push_str(&format!(", {label} fwhm = {}", fwhm(r)));
    }
    out.summary = summary;
    let mut extra = serde_json::Map::new();
    extra.insert("expected_fwhm".into(), json!(expected));
    extra.insert("full".into(), fit_json(&main));
    for (label, r) in &variants {
        extra.insert((*label).into(), fit_json(r));
    }
    out.extra = serde_json::Value::Object(extra);
    Ok(out)
}

fn array_map(cfg: &RunConfig) -> Result<RunOutput> {
    let run = array_run(cfg);
    let grid = sweep_array_map(&run, &cfg.sweep.d_values, &cfg.sweep.n_eff_values)?;
    let mut out = RunOutput::default();
    grid_output(&mut out, &grid);
    out.push("array_map.csv", grid.to_csv());
    out.push("atoms.json", build_array(&run.array, run.seed)?.to_json()? + "\n");
    if cfg.gnuplot {
        out.push(
            "array_map.gp",
            "set datafile separator ','\nset xlabel 'd / lambda0'\nset ylabel 'n_eff'\nset view map\nsplot 'array_map.csv' every ::1 using 1:2:(column('gamma_f_mean')) with image notitle\n",
        );
    }
    let series = grid.series("gamma_f");
    let (k_min, g_min) = series
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_finite())
        .fold((0, f64::INFINITY), |a, (k, &g)| if g < a.1 { (k, g) } else { a });
    let nn = cfg.sweep.n_eff_values.len();
    let (d, ne) = (cfg.sweep.d_values[k_min / nn], cfg.sweep.n_eff_values[k_min % nn]);
    out.summary = format!(
        "{} cells, min gamma_f = {:.4} Γ0 at d = {:.3} λ0, n_eff = {:.3} (N={})",
        grid.cells.len(),
        g_min,
        d,
        ne,
        run.array.n_sites
    );
    out.extra = json!({ "min_gamma_f": g_min, "d": d, "n_eff": ne, "cells": grid.cells.len() });
    Ok(out)
}

fn disorder(cfg: &RunConfig) -> Result<RunOutput> {
    let run = array_run(cfg);
    let axis = cfg.sweep.axis;
    let values = cfg.sweep.disorder_values();
    let internal: Vec<f64> = match axis {
        DisorderAxis::DeltaZ => values.iter().map(|&v| cfg.calibration.nm_to_internal(v)).collect(),
        DisorderAxis::Filling => values.clone(),
    };
    let mut grid = sweep_disorder(&run, axis, &internal, &cfg.sweep.n_targets)?;
    if axis == DisorderAxis::DeltaZ {
        grid.axes[0].name = "delta_z_nm".into();
        grid.axes[0].values = values.clone();
    }
    let mut out = RunOutput::default();
    grid_output(&mut out, &grid);
    out.push("disorder.csv", grid.to_csv());
    if cfg.gnuplot {
        out.push(
            "disorder.gp",
            gnuplot_script("disorder.csv", grid.axes[0].name.as_str(), "gamma_f / Gamma0", &["zdep_gamma_f_mean", "uniform_gamma_f_mean"], false),
        );
    }
    let last = values.len() - 1;
    let parts: Vec<String> = cfg
        .sweep
        .n_targets
        .iter()
        .enumerate()
        .map(|(j, n)| {
            let first = grid.cell(&[0, j]).map_or(f64::NAN, |c| c.mean("zdep_gamma_f"));
            let end = grid.cell(&[last, j]).map_or(f64::NAN, |c| c.mean("zdep_gamma_f"));
            format!("N={n}: gamma_f {first:.4} -> {end:.4} Γ0")
        })
        .collect();
    out.summary = format!("{} from {} to {}: {}", grid.axes[0].name, values[0], values[last], parts.join(", "));
    out.extra = json!({ "axis": axis.label(), "cells": grid.cells.len() });
    Ok(out)
}

fn ring_vs_line(cfg: &RunConfig) -> Result<RunOutput> {
    let run = array_run(cfg);
    let ns = cfg
        .sweep
        .n_values
        .clone()
        .unwrap_or_else(|| vec![1, 2, 5, 10, 20, 30, 40, 60, 80, 100]);
    let grid = compare_line_ring(&run, &ns)?;
    let mut out = RunOutput::default();
    grid_output(&mut out, &grid);
    out.push("ring_vs_line.csv", grid.to_csv());
    if cfg.gnuplot {
        out.push(
            "ring_vs_line.gp",
            gnuplot_script("ring_vs_line.csv", "N", "gamma_f / Gamma0", &["line_gamma_f_mean", "ring_gamma_f_mean"], false),
        );
    }
    let k = ns.len() - 1;
    let cell = &grid.cells[k];
    out.summary = format!(
        "N={}: line gamma_f = {:.3e} Γ0, ring gamma_f = {:.3e} Γ0 (d = {} λ0)",
        ns[k],
        cell.mean("line_gamma_f"),
        cell.mean("ring_gamma_f"),
        run.array.spacing
    );
    out.extra = json!({
        "line_gamma_f": grid.series("line_gamma_f"),
        "ring_gamma_f": grid.series("ring_gamma_f"),
    });
    Ok(out)
}

fn ratio_sweep(cfg: &RunConfig) -> Result<RunOutput> {
    let run = cloud_run(cfg);
    let ns = cfg
        .sweep
        .n_values
        .clone()
        .unwrap_or_else(|| vec![1, 5, 10, 15, 20, 30, 40, 50, 60]);
    let grid = decay_ratio_sweep(&run, &cfg.sweep.excitations, &ns)?;
    let mut out = RunOutput::default();
    grid_output(&mut out, &grid);
    out.push("ratio_sweep.csv", grid.to_csv());
    let labels: Vec<&str> = cfg.sweep.excitations.iter().map(|e| e.label()).collect();
    if cfg.gnuplot {
        let cols: Vec<String> = labels.iter().map(|l| format!("{l}_theta_mean")).collect();
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        out.push("ratio_sweep.gp", gnuplot_script("ratio_sweep.csv", "N", "theta", &cols, false));
    }
    let k = ns.len() - 1;
    let cell = &grid.cells[k];
    let parts: Vec<String> = labels
        .iter()
        .map(|l| format!("{l} theta = {:.3}", cell.mean(&format!("{l}_theta"))))
        .collect();
    out.summary = format!("N={}: {}", ns[k], parts.join(", "));
    let mut extra = serde_json::Map::new();
    for l in &labels {
        extra.insert(format!("{l}_theta"), json!(grid.series(&format!("{l}_theta"))));
    }
    out.extra = serde_json::Value::Object(extra);
    Ok(out)
}

fn oracle_check(cfg: &RunConfig) -> Result<RunOutput> {
    let base = cloud_run(cfg);
    let instances = cfg.oracle.instances as u64;
    let reports: Vec<Result<ComparisonReport>> = run_trials(instances, |i| {
        let mut cloud = base.cloud.clone();
        cloud.n_atoms = cfg.n_atoms.unwrap_or(1 + i as usize % cfg.oracle.max_atoms);
        cloud.poisson_n = false;
        let atoms = sample_cloud(&cloud, derive_seed(cfg.seed, i))?;
        let cavity = calibrate_cloud(&base.cavity, &cloud, cfg.c1, base.coupling);
        compare_models(&atoms, &cavity, base.coupling, cfg.oracle.t_end, Tolerances::default())
    });

    let mut out = RunOutput::default();
    let mut csv = String::from(
        "instance,n_atoms,eigen_vs_eliminated,eliminated_vs_full,eliminated_vs_full_fast,cavity_field,pass\n",
    );
    let (mut worst_eigen, mut worst_full, mut worst_field) = (0.0f64, 0.0f64, 0.0f64);
    let mut all_pass = true;
    let mut ok = 0;
    for (i, r) in reports.iter().enumerate() {
        match r {
            Ok(r) => {
                ok += 1;
                worst_eigen = worst_eigen.max(r.eigen_vs_eliminated.max());
                worst_full = worst_full.max(r.eliminated_vs_full.max());
                worst_field = worst_field.max(r.cavity_field);
                all_pass &= r.passed();
                csv.push_str(&format!(
                    "{i},{},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
                    r.n_atoms,
                    r.eigen_vs_eliminated.max(),
                    r.eliminated_vs_full.max(),
                    r.eliminated_vs_full_fast.max(),
                    r.cavity_field,
                    r.passed()
                ));
            }
            Err(e) => {
                log::warn!("oracle instance {i} skipped: {e}");
                *out.exclusions.entry(crate::experiments::exclusion_reason(e).into()).or_default() += 1;
            }
        }
    }
    if ok == 0 {
        return Err(Error::AllExcluded(instances as usize));
    }
    out.push("oracle_check.csv", csv);
    out.failed = !all_pass;
    out.summary = format!(
        "max deviation eigen/RK4 = {worst_eigen:.1e}, eliminated/full = {worst_full:.1e}, cavity field = {worst_field:.1e}: {} ({ok} instances)",
        if all_pass { "PASS" } else { "FAIL" }
    );
    out.extra = json!({
        "eigen_vs_eliminated": worst_eigen,
        "eliminated_vs_full": worst_full,
        "cavity_field": worst_field,
        "passed": all_pass,
        "instances": ok,
    });
    Ok(out)
}
