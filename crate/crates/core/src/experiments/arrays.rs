//! Ordered atom arrays along a straight guide or around the ring.

use serde::{Deserialize, Serialize};

use super::{collect_outcomes, require_accepted, derive_seed, run_trials, trial_rng, Axis, EnsembleStats, Excitation, ModelOptions, Realization, SweepCell, SweepGrid};
use crate::cavity::{CavityParams, CouplingMode};
use crate::error::{Error, Result};
use crate::geometry::{build_array_with, ArrayParams, ArrayShape};
use crate::units::Calibration;

/// Trap height above the resonator surface for array experiments.
pub fn default_array_height(calibration: &Calibration) -> f64 {
    calibration.nm_to_internal(330.0)
}

/// Atoms at the nominal trap height get cooperativity `c1`.
pub fn calibrate_array(base: &CavityParams, array: &ArrayParams, c1: f64) -> CavityParams {
    let mut p = base.clone();
    p.z_ref = array.z_height;
    p.c_ref = c1;
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayRun {
    pub array: ArrayParams,
    pub cavity: CavityParams,
    pub c1: f64,
    pub coupling: CouplingMode,
    pub excitation: Excitation,
    pub free_space: bool,
    pub trials: u64,
    pub seed: u64,
}

impl ArrayRun {
    pub fn new(array: ArrayParams, c1: f64, trials: u64, seed: u64) -> Self {
        Self {
            array,
            cavity: CavityParams::default(),
            c1,
            coupling: CouplingMode::HeightDependent,
            excitation: Excitation::Tds,
            free_space: true,
            trials,
            seed,
        }
    }

    fn is_deterministic(&self) -> bool {
        self.array.filling_fraction >= 1.0 && self.array.delta_z == 0.0
    }
}

/// Ensemble statistics over array realizations. Perfect arrays are
/// evaluated once regardless of `trials`.
pub fn run_array_ensemble(run: &ArrayRun) -> Result<EnsembleStats> {
    require_accepted(array_stats(run)?)
}

/// As [`run_array_ensemble`], keeping fully excluded ensembles.
pub fn array_stats(run: &ArrayRun) -> Result<EnsembleStats> {
    if run.trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(run.c1 >= 0.0 && run.c1.is_finite()) {
        return Err(Error::param("c1", "must be non-negative"));
    }
    run.array.validate()?;
    let cavity = calibrate_array(&run.cavity, &run.array, run.c1);
    cavity.validate()?;
    let options = ModelOptions {
        coupling: run.coupling,
        free_space: run.free_space,
        k_override: None,
    };
    let trials = if run.is_deterministic() { 1 } else { run.trials };
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(run.seed, trial);
        let config = build_array_with(&run.array, &mut rng)?;
        Realization::new(&config, &cavity, &options)?.metrics(run.excitation, cavity.eta)
    });
    Ok(collect_outcomes(EnsembleStats::new(trials), outcomes))
}

/// TDS `γ_f` of a perfect array over spacing `d` and effective index
/// `n_eff`. The free-space rate does not depend on `c1`.
pub fn sweep_array_map(base: &ArrayRun, spacings: &[f64], n_effs: &[f64]) -> Result<SweepGrid> {
    let mut grid = SweepGrid::new(vec![Axis::new("d", spacings.to_vec()), Axis::new("n_eff", n_effs.to_vec())]);
    for (i, &d) in spacings.iter().enumerate() {
        for (j, &n) in n_effs.iter().enumerate() {
            let mut run = base.clone();
            run.array.spacing = d;
            run.array.filling_fraction = 1.0;
            run.array.delta_z = 0.0;
            run.cavity.n_eff = n;
            run.excitation = Excitation::Tds;
            grid.cells.push(SweepCell::from_stats(vec![i, j], &array_stats(&run)?));
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderAxis {
    DeltaZ,
    Filling,
}

impl DisorderAxis {
    pub fn label(self) -> &'static str {
        match self {
            DisorderAxis::DeltaZ => "delta_z",
            DisorderAxis::Filling => "filling",
        }
    }
}

/// Ensemble `γ_f` versus height spread or filling fraction, for arrays
/// grown to each atom-number target. Each cell holds a `zdep_` ensemble
/// with height-dependent coupling and a `uniform_` ensemble with every
/// atom at `c1`; both use the same atom positions.
pub fn sweep_disorder(base: &ArrayRun, axis: DisorderAxis, values: &[f64], n_targets: &[usize]) -> Result<SweepGrid> {
    let n_axis = Axis::new("N", n_targets.iter().map(|&n| n as f64).collect());
    let mut grid = SweepGrid::new(vec![Axis::new(axis.label(), values.to_vec()), n_axis]);
    for (i, &v) in values.iter().enumerate() {
        for (j, &n) in n_targets.iter().enumerate() {
            let mut run = base.clone();
            run.array.target_atoms = Some(n);
            match axis {
                DisorderAxis::DeltaZ => run.array.delta_z = v,
                DisorderAxis::Filling => run.array.filling_fraction = v,
            }
            run.seed = derive_seed(base.seed, (i * n_targets.len() + j) as u64);
            run.coupling = CouplingMode::HeightDependent;
            let zdep = array_stats(&run)?;
            run.coupling = CouplingMode::Uniform;
            let uniform = array_stats(&run)?;
            grid.cells
                .push(SweepCell::from_labeled(vec![i, j], &[("zdep", &zdep), ("uniform", &uniform)]));
        }
    }
    Ok(grid)
}

/// TDS `γ_f` of perfect line and ring arrays versus atom number, with
/// uniform coupling. Metrics are prefixed `line_` and `ring_`.
pub fn compare_line_ring(base: &ArrayRun, n_values: &[usize]) -> Result<SweepGrid> {
    let mut grid = SweepGrid::new(vec![Axis::new("N", n_values.iter().map(|&n| n as f64).collect())]);
    for (i, &n) in n_values.iter().enumerate() {
        let mut run = base.clone();
        run.array.n_sites = n;
        run.array.target_atoms = None;
        run.array.filling_fraction = 1.0;
        run.array.delta_z = 0.0;
        run.coupling = CouplingMode::Uniform;
        run.excitation = Excitation::Tds;
        run.array.shape = ArrayShape::Line;
        let line = array_stats(&run)?;
        run.array.shape = ArrayShape::Ring;
        let ring = array_stats(&run)?;
        grid.cells
            .push(SweepCell::from_labeled(vec![i], &[("line", &line), ("ring", &ring)]));
    }
    Ok(grid)
}
