//! Monte Carlo ensembles over Gaussian atom clouds above the ring.

use serde::{Deserialize, Serialize};

use super::{collect_outcomes, require_accepted, derive_seed, run_trials, trial_rng, Axis, EnsembleStats, Excitation, ModelOptions, Realization, SweepCell, SweepGrid};
use crate::cavity::{mean_cooperativity_factor, CavityParams, CouplingMode};
use crate::error::{Error, Result};
use crate::geometry::{sample_cloud_with, CloudParams};
use crate::units::Calibration;

pub const HISTOGRAM_BINS: usize = 60;

/// Cloud dimensions of a typical trapped ensemble near the resonator,
/// converted with the given calibration.
pub fn default_cloud(n_atoms: usize, calibration: &Calibration) -> CloudParams {
    CloudParams {
        n_atoms,
        sigma_x: calibration.nm_to_internal(100.0),
        sigma_y: calibration.nm_to_internal(2000.0),
        sigma_z: calibration.nm_to_internal(430.0),
        z_mean: calibration.nm_to_internal(400.0),
        poisson_n: false,
    }
}

/// Cavity parameters whose ensemble-mean single-atom cooperativity over
/// the cloud equals `c1`. Heights are referenced to the cloud centre.
pub fn calibrate_cloud(base: &CavityParams, cloud: &CloudParams, c1: f64, coupling: CouplingMode) -> CavityParams {
    let mut p = base.clone();
    p.z_ref = cloud.z_mean;
    p.c_ref = match coupling {
        CouplingMode::Uniform => c1,
        CouplingMode::HeightDependent => c1 / mean_cooperativity_factor(cloud.z_mean, cloud.sigma_z, cloud.z_mean, p.z_ev),
    };
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudRun {
    pub cloud: CloudParams,
    pub cavity: CavityParams,
    /// Target ensemble-mean cooperativity.
    pub c1: f64,
    pub coupling: CouplingMode,
    pub excitation: Excitation,
    pub free_space: bool,
    pub trials: u64,
    pub seed: u64,
}

impl CloudRun {
    pub fn new(cloud: CloudParams, c1: f64, excitation: Excitation, trials: u64, seed: u64) -> Self {
        Self {
            cloud,
            cavity: CavityParams::default(),
            c1,
            coupling: CouplingMode::HeightDependent,
            excitation,
            free_space: true,
            trials,
            seed,
        }
    }

    fn options(&self, k_override: Option<f64>) -> ModelOptions {
        ModelOptions {
            coupling: self.coupling,
            free_space: self.free_space,
            k_override,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite()) {
            return Err(Error::param("c1", "must be non-negative"));
        }
        self.cloud.validate()?;
        self.cavity.validate()
    }

    fn empty_stats(&self) -> EnsembleStats {
        let nc = self.cloud.n_atoms as f64 * self.c1;
        EnsembleStats::new(self.trials)
            .with_histogram("gamma_f", 0.0, 3.0, HISTOGRAM_BINS)
            .with_histogram("gamma_c", 0.0, 3.0 * nc.max(self.c1).max(1e-12), HISTOGRAM_BINS)
    }
}

/// Ensemble statistics of the decay metrics, optionally with the mode
/// wavenumber overridden to `k · k0`.
pub fn run_cloud_ensemble(run: &CloudRun, k: Option<f64>) -> Result<EnsembleStats> {
    require_accepted(cloud_stats(run, k)?)
}

/// As [`run_cloud_ensemble`], but an ensemble where every trial was
/// excluded is returned rather than treated as an error.
pub fn cloud_stats(run: &CloudRun, k: Option<f64>) -> Result<EnsembleStats> {
    run.validate()?;
    let cavity = calibrate_cloud(&run.cavity, &run.cloud, run.c1, run.coupling);
    let options = run.options(k);
    let outcomes = run_trials(run.trials, |trial| {
        let mut rng = trial_rng(run.seed, trial);
        let config = sample_cloud_with(&run.cloud, &mut rng)?;
        Realization::new(&config, &cavity, &options)?.metrics(run.excitation, cavity.eta)
    });
    Ok(collect_outcomes(run.empty_stats(), outcomes))
}

/// `k / k0` values scanned by default.
pub fn default_k_scan() -> Vec<f64> {
    (0..=25).map(|i| i as f64 * 0.1).collect()
}

/// Ensemble metrics versus mode wavenumber. Every scan point reuses the
/// same clouds.
pub fn scan_wavenumber(run: &CloudRun, ks: &[f64]) -> Result<SweepGrid> {
    let mut grid = SweepGrid::new(vec![Axis::new("k_over_k0", ks.to_vec())]);
    for (i, &k) in ks.iter().enumerate() {
        let stats = cloud_stats(run, Some(k))?;
        grid.cells.push(SweepCell::from_stats(vec![i], &stats));
    }
    Ok(grid)
}

/// Decay-rate ratios versus atom number for each excitation kind. Metric
/// names carry the excitation label as a prefix, e.g. `tds_gamma_ratio`.
pub fn decay_ratio_sweep(run: &CloudRun, excitations: &[Excitation], n_values: &[usize]) -> Result<SweepGrid> {
    let axis = Axis::new("N", n_values.iter().map(|&n| n as f64).collect());
    let mut grid = SweepGrid::new(vec![axis]);
    for (i, &n) in n_values.iter().enumerate() {
        let mut labeled = Vec::with_capacity(excitations.len());
        for &excitation in excitations {
            let mut r = run.clone();
            r.cloud.n_atoms = n;
            r.excitation = excitation;
            r.seed = derive_seed(run.seed, n as u64);
            labeled.push((excitation.label(), cloud_stats(&r, None)?));
        }
        let refs: Vec<(&str, &EnsembleStats)> = labeled.iter().map(|(l, s)| (*l, s)).collect();
        grid.cells.push(SweepCell::from_labeled(vec![i], &refs));
    }
    Ok(grid)
}

/// Ensemble metrics versus atom number at fixed excitation.
pub fn sweep_atom_number(run: &CloudRun, n_values: &[usize]) -> Result<SweepGrid> {
    let axis = Axis::new("N", n_values.iter().map(|&n| n as f64).collect());
    let mut grid = SweepGrid::new(vec![axis]);
    for (i, &n) in n_values.iter().enumerate() {
        let mut r = run.clone();
        r.cloud.n_atoms = n;
        r.seed = derive_seed(run.seed, n as u64);
        grid.cells.push(SweepCell::from_stats(vec![i], &cloud_stats(&r, None)?));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_has_no_spread() {
        let cloud = default_cloud(1, &Calibration::default());
        let mut run = CloudRun::new(cloud, 0.05, Excitation::Tds, 20, 3);
        run.coupling = CouplingMode::Uniform;
        let stats = run_cloud_ensemble(&run, None).unwrap();
        let gf = &stats.metric("gamma_f").unwrap().stats;
        let gc = &stats.metric("gamma_c").unwrap().stats;
        assert!((gf.mean - 1.0).abs() < 1e-10 && gf.variance() < 1e-20);
        assert!((gc.mean - 0.05).abs() < 1e-10 && gc.variance() < 1e-20);
    }

    #[test]
    fn calibration_hits_mean_cooperativity() {
        let cloud = default_cloud(1, &Calibration::default());
        let p = calibrate_cloud(&CavityParams::default(), &cloud, 0.05, CouplingMode::HeightDependent);
        let f = mean_cooperativity_factor(cloud.z_mean, cloud.sigma_z, p.z_ref, p.z_ev);
        assert!((p.c_ref * f - 0.05).abs() < 1e-15);
    }
}
