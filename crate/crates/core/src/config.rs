//! Run configuration: strict TOML with defaults for every field.
//!
//! Lengths ending in `_nm` are physical and converted with the
//! calibration; all other lengths are in units of `λ0` and all rates in
//! units of `Γ0`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::{evanescent_length, CavityParams};
use crate::error::{Error, Result};
use crate::experiments::arrays::DisorderAxis;
use crate::experiments::Excitation;
use crate::geometry::{ArrayParams, ArrayShape, CloudParams};
use crate::units::Calibration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    CloudDecay,
    Spectrum,
    ArrayMap,
    Disorder,
    RingVsLine,
    RatioSweep,
    OracleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::CloudDecay,
        Experiment::Spectrum,
        Experiment::ArrayMap,
        Experiment::Disorder,
        Experiment::RingVsLine,
        Experiment::RatioSweep,
        Experiment::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CloudDecay => "cloud-decay",
            Experiment::Spectrum => "spectrum",
            Experiment::ArrayMap => "array-map",
            Experiment::Disorder => "disorder",
            Experiment::RingVsLine => "ring-vs-line",
            Experiment::RatioSweep => "ratio-sweep",
            Experiment::OracleCheck => "oracle-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub delta_c: f64,
    pub n_eff: f64,
    /// Evanescent decay length; derived from `n_eff` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_ev: Option<f64>,
    pub eta: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            kappa_i: 100.0,
            kappa_e: 100.0,
            delta_c: 0.0,
            n_eff: 1.69,
            z_ev: None,
            eta: 1.0,
        }
    }
}

impl CavityConfig {
    /// Cavity parameters before cooperativity calibration.
    pub fn params(&self) -> CavityParams {
        CavityParams {
            kappa_i: self.kappa_i,
            kappa_e: self.kappa_e,
            delta_c: self.delta_c,
            n_eff: self.n_eff,
            z_ev: self.z_ev.unwrap_or_else(|| evanescent_length(self.n_eff)),
            eta: self.eta,
            ..CavityParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudConfig {
    pub n_atoms: usize,
    pub sigma_x_nm: f64,
    pub sigma_y_nm: f64,
    pub sigma_z_nm: f64,
    pub z_mean_nm: f64,
    pub poisson_n: bool,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            n_atoms: 60,
            sigma_x_nm: 100.0,
            sigma_y_nm: 2000.0,
            sigma_z_nm: 430.0,
            z_mean_nm: 400.0,
            poisson_n: false,
        }
    }
}

impl CloudConfig {
    pub fn params(&self, cal: &Calibration) -> CloudParams {
        CloudParams {
            n_atoms: self.n_atoms,
            sigma_x: cal.nm_to_internal(self.sigma_x_nm),
            sigma_y: cal.nm_to_internal(self.sigma_y_nm),
            sigma_z: cal.nm_to_internal(self.sigma_z_nm),
            z_mean: cal.nm_to_internal(self.z_mean_nm),
            poisson_n: self.poisson_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub n_sites: usize,
    /// Lattice spacing `d`.
    pub spacing: f64,
    pub z_height_nm: f64,
    pub delta_z_nm: f64,
    pub filling: f64,
    pub shape: ArrayShape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_atoms: Option<usize>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_sites: 20,
            spacing: 0.3,
            z_height_nm: 330.0,
            delta_z_nm: 0.0,
            filling: 1.0,
            shape: ArrayShape::Line,
            target_atoms: None,
        }
    }
}

impl ArrayConfig {
    pub fn params(&self, cal: &Calibration) -> ArrayParams {
        ArrayParams {
            n_sites: self.n_sites,
            spacing: self.spacing,
            z_height: cal.nm_to_internal(self.z_height_nm),
            filling_fraction: self.filling,
            delta_z: cal.nm_to_internal(self.delta_z_nm),
            shape: self.shape,
            target_atoms: self.target_atoms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumVariant {
    /// Off-diagonal free-space couplings removed.
    NoFreespace,
    /// Fixed atom number, uniform coupling, no height spread.
    NoStochastic,
}

impl SpectrumVariant {
    pub fn label(self) -> &'static str {
        match self {
            SpectrumVariant::NoFreespace => "no_freespace",
            SpectrumVariant::NoStochastic => "no_stochastic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Cloud,
    Array,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Atoms probed: the `[cloud]` or the `[array]` section.
    pub source: SourceKind,
    pub points: usize,
    /// Half-width of the detuning grid in expected linewidths `1 + N c1`.
    pub half_width: f64,
    /// Explicit detuning grid; overrides `points` and `half_width`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detunings: Option<Vec<f64>>,
    /// Hypothetical variants computed alongside the full model.
    pub variants: Vec<SpectrumVariant>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Cloud,
            points: 241,
            half_width: 6.0,
            detunings: None,
            variants: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `k_wg / k0` values for the cloud wavenumber scan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_scan: Option<Vec<f64>>,
    /// Atom numbers for ratio and ring-vs-line sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    pub d_values: Vec<f64>,
    pub n_eff_values: Vec<f64>,
    pub axis: DisorderAxis,
    /// Disorder axis values: δz in nm or filling fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub n_targets: Vec<usize>,
    pub excitations: Vec<Excitation>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            a * (1.0 - t) + b * t
        })
        .collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_scan: None,
            n_values: None,
            d_values: linspace(0.05, 1.0, 20),
            n_eff_values: linspace(1.0, 2.5, 16),
            axis: DisorderAxis::DeltaZ,
            values: None,
            n_targets: vec![20, 40],
            excitations: vec![Excitation::Tds, Excitation::Ss],
        }
    }
}

impl SweepConfig {
    pub fn disorder_values(&self) -> Vec<f64> {
        self.values.clone().unwrap_or_else(|| match self.axis {
            DisorderAxis::DeltaZ => linspace(0.0, 100.0, 11),
            DisorderAxis::Filling => linspace(0.1, 1.0, 10),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub instances: usize,
    /// Atom numbers cycle through `1..=max_atoms` unless `n_atoms` is set.
    pub max_atoms: usize,
    pub t_end: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            max_atoms: 4,
            t_end: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: u64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub out: PathBuf,
    /// Ensemble-mean single-atom cooperativity.
    pub c1: f64,
    pub excitation: Excitation,
    pub free_space: bool,
    pub uniform_c: bool,
    pub gnuplot: bool,
    /// Atom number for the experiment; sets `cloud.n_atoms` and
    /// `array.n_sites`.
    #[serde(alias = "n", skip_serializing_if = "Option::is_none")]
    pub n_atoms: Option<usize>,
    pub calibration: Calibration,
    pub cavity: CavityConfig,
    pub cloud: CloudConfig,
    pub array: ArrayConfig,
    pub spectrum: SpectrumConfig,
    pub sweep: SweepConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::CloudDecay,
            seed: 1,
            trials: 1000,
            workers: None,
            out: PathBuf::from("out"),
            c1: 0.05,
            excitation: Excitation::Tds,
            free_space: true,
            uniform_c: false,
            gnuplot: false,
            n_atoms: None,
            calibration: Calibration::default(),
            cavity: CavityConfig::default(),
            cloud: CloudConfig::default(),
            array: ArrayConfig::default(),
            spectrum: SpectrumConfig::default(),
            sweep: SweepConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, "must be positive"))
    }
}

impl RunConfig {
    /// Parses without resolving or validating, so overrides can still be
    /// applied before [`RunConfig::finalize`].
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn parse_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn finalize(mut self) -> Result<Self> {
        self.resolve();
        self.validate()?;
        Ok(self)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::parse(text)?.finalize()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse_path(path)?.finalize()
    }

    /// Pushes the top-level atom number into the geometry sections.
    pub fn resolve(&mut self) {
        if let Some(n) = self.n_atoms {
            self.cloud.n_atoms = n;
            self.array.n_sites = n;
        }
        self.n_atoms = match self.experiment {
            Experiment::OracleCheck => self.n_atoms,
            Experiment::ArrayMap | Experiment::Disorder | Experiment::RingVsLine => Some(self.array.n_sites),
            _ => Some(self.cloud.n_atoms),
        };
        if self.cavity.z_ev.is_none() {
            self.cavity.z_ev = Some(evanescent_length(self.cavity.n_eff));
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.calibration.validate()?;
        if self.trials < 1 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers", "must be at least 1"));
        }
        if !(self.c1.is_finite() && self.c1 >= 0.0) {
            return Err(Error::param("c1", "must be non-negative"));
        }
        self.cavity.params().validate()?;
        self.cloud.params(&self.calibration).validate()?;
        if self.array.spacing <= 0.0 || !self.array.spacing.is_finite() {
            return Err(Error::param("spacing", "spacing must be positive"));
        }
        self.array.params(&self.calibration).validate()?;
        if self.spectrum.points < 8 {
            return Err(Error::param("spectrum.points", "need at least 8 points"));
        }
        positive("spectrum.half_width", self.spectrum.half_width)?;
        if let Some(d) = &self.spectrum.detunings {
            if d.len() < 8 || d.iter().any(|x| !x.is_finite()) {
                return Err(Error::param("spectrum.detunings", "need at least 8 finite points"));
            }
        }
        for &d in &self.sweep.d_values {
            positive("sweep.d_values", d)?;
        }
        for &n in &self.sweep.n_eff_values {
            if !(n.is_finite() && n >= 1.0) {
                return Err(Error::param("sweep.n_eff_values", "must be at least 1"));
            }
        }
        if let Some(ks) = &self.sweep.k_scan {
            if ks.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
                return Err(Error::param("sweep.k_scan", "must be non-negative"));
            }
        }
        if let Some(ns) = &self.sweep.n_values {
            if ns.contains(&0) {
                return Err(Error::param("sweep.n_values", "must be at least 1"));
            }
        }
        if self.sweep.n_targets.contains(&0) {
            return Err(Error::param("sweep.n_targets", "must be at least 1"));
        }
        for v in self.sweep.disorder_values() {
            let ok = match self.sweep.axis {
                DisorderAxis::DeltaZ => v.is_finite() && v >= 0.0,
                DisorderAxis::Filling => v > 0.0 && v <= 1.0,
            };
            if !ok {
                return Err(Error::param("sweep.values", "out of range for the disorder axis"));
            }
        }
        if self.oracle.instances < 1 {
            return Err(Error::param("oracle.instances", "must be at least 1"));
        }
        if self.oracle.max_atoms < 1 || self.oracle.max_atoms > crate::oracle::MAX_ORACLE_ATOMS {
            return Err(Error::param("oracle.max_atoms", "must lie in 1..=6"));
        }
        positive("oracle.t_end", self.oracle.t_end)?;
        if self.experiment == Experiment::OracleCheck
            && self.n_atoms.is_some_and(|n| n > crate::oracle::MAX_ORACLE_ATOMS)
        {
            return Err(Error::param("n_atoms", "oracle comparisons are limited to 6 atoms"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Commented configuration holding every default.
pub fn template(experiment: Experiment) -> String {
    let d = RunConfig::default();
    let c = &d.cavity;
    let cl = &d.cloud;
    let a = &d.array;
    let sp = &d.spectrum;
    let sw = &d.sweep;
    let o = &d.oracle;
    let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
    format!(
        r#"# ringqed run configuration. Unknown keys are rejected.
# Rates are in units of the single-atom decay rate Gamma0, lengths in units of
# the resonant wavelength lambda0 unless the key ends in _nm.

# cloud-decay | spectrum | array-map | disorder | ring-vs-line | ratio-sweep | oracle-check
experiment = "{exp}"
# master seed; every trial draws from its own stream derived from it
seed = {seed}
# Monte Carlo trials per ensemble
trials = {trials}
# output directory
out = "{out}"
# ensemble-mean single-atom cooperativity C1
c1 = {c1}
# tds (timed-Dicke state) or ss (driven steady state)
excitation = "tds"
# keep the off-diagonal free-space dipole-dipole couplings
free_space = {fs}
# give every atom cooperativity c1 regardless of height
uniform_c = {uc}
# also write a gnuplot script next to the data
gnuplot = {gp}
# worker threads (default: available parallelism, or RINGQED_WORKERS)
# workers = 4
# atom number; overrides cloud.n_atoms and array.n_sites
# n_atoms = 60

[calibration]
# resonant wavelength in metres
lambda0 = {l0:e}
# free-space decay rate in 1/s
gamma0 = {g0:e}

[cavity]
# intrinsic loss rate
kappa_i = {ki}
# bus-waveguide coupling rate
kappa_e = {ke}
# cavity detuning
delta_c = {dc}
# effective index of the whispering-gallery mode
n_eff = {neff}
# classical drive rate
eta = {eta}
# evanescent decay length of the coupling; default lambda0/(2 pi sqrt(n_eff^2 - 1))
# z_ev = 0.1167

[cloud]
n_atoms = {cn}
sigma_x_nm = {sx}
sigma_y_nm = {sy}
sigma_z_nm = {sz}
z_mean_nm = {zm}
# draw the atom number from a Poisson distribution with mean n_atoms
poisson_n = {pn}

[array]
n_sites = {an}
# lattice spacing d
spacing = {asp}
z_height_nm = {zh}
# r.m.s. height spread
delta_z_nm = {dz}
# probability that a site holds an atom
filling = {fill}
# line or ring
shape = "line"
# grow the array until this many atoms are placed
# target_atoms = 20

[spectrum]
# cloud or array
source = "cloud"
points = {pts}
# grid half-width in expected linewidths (1 + N c1)
half_width = {hw}
# explicit detuning grid, overrides points and half_width
# detunings = [-5.0, -4.0, ...]
# extra hypothetical spectra: "no-freespace", "no-stochastic"
variants = []

[sweep]
# k_wg / k0 values for a wavenumber scan in cloud-decay; the --k-scan flag
# scans 0.0 to 2.5 in steps of 0.1
# k_scan = [1.0, 1.7, 2.5]
# atom numbers for ratio-sweep and ring-vs-line
# n_values = [1, 5, 10, 20, 40, 60]
d_values = [{dv}]
n_eff_values = [{nv}]
# delta-z or filling
axis = "delta-z"
# disorder values: delta z in nm, or filling fractions
# values = [0.0, 25.0, 50.0]
n_targets = [{nt}]
excitations = ["tds", "ss"]

[oracle]
# random instances compared
instances = {oi}
# atom numbers cycle through 1..=max_atoms
max_atoms = {om}
# propagation time
t_end = {ot}
"#,
        exp = experiment.name(),
        seed = d.seed,
        trials = d.trials,
        out = d.out.display(),
        c1 = d.c1,
        fs = d.free_space,
        uc = d.uniform_c,
        gp = d.gnuplot,
        l0 = d.calibration.lambda0,
        g0 = d.calibration.gamma0,
        ki = fmt(c.kappa_i),
        ke = fmt(c.kappa_e),
        dc = fmt(c.delta_c),
        neff = c.n_eff,
        eta = fmt(c.eta),
        cn = cl.n_atoms,
        sx = fmt(cl.sigma_x_nm),
        sy = fmt(cl.sigma_y_nm),
        sz = fmt(cl.sigma_z_nm),
        zm = fmt(cl.z_mean_nm),
        pn = cl.poisson_n,
        an = a.n_sites,
        asp = a.spacing,
        zh = fmt(a.z_height_nm),
        dz = fmt(a.delta_z_nm),
        fill = fmt(a.filling),
        pts = sp.points,
        hw = fmt(sp.half_width),
        dv = list(&sw.d_values),
        nv = list(&sw.n_eff_values),
        nt = sw.n_targets.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
        oi = o.instances,
        om = o.max_atoms,
        ot = fmt(o.t_end),
    )
}

/// Float literal that TOML reads back as a float.
fn fmt(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml("experiment = \"cloud-decay\"\nn = 10\n").unwrap();
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.cloud.n_atoms, 10);
        assert_eq!(cfg.cavity.kappa_i, 100.0);
        assert_eq!(cfg.cavity.kappa_e, 100.0);
        assert_eq!(cfg.c1, 0.05);
        assert_eq!(cfg.cavity.n_eff, 1.69);
        assert_eq!(cfg.array.spacing, 0.3);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[cavity]\nkappa_x = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("kappa_x"), "{err}");
    }

    #[test]
    fn negative_spacing_rejected() {
        let err = RunConfig::from_toml("[array]\nspacing = -0.3\n").unwrap_err().to_string();
        assert!(err.contains("spacing must be positive"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = RunConfig::from_toml("seed = 1\ntrials = \n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn template_round_trips_to_defaults() {
        for e in Experiment::ALL {
            let cfg = RunConfig::from_toml(&template(e)).unwrap();
            let mut expected = RunConfig {
                experiment: e,
                ..RunConfig::default()
            };
            expected.resolve();
            assert_eq!(cfg, expected);
        }
    }
}
