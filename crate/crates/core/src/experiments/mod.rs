//! Figure-level drivers: Monte Carlo ensembles over atom clouds and arrays,
//! transmission spectra with Lorentzian linewidth fits, and parameter sweeps.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial)`,
//! and results are aggregated in trial order, so output does not depend on
//! the number of worker threads.

pub mod arrays;
pub mod cloud;
pub mod grid;
pub mod lorentz;
pub mod spectrum;
pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{build_cavity_matrix, CavityMatrix, CavityParams, CouplingMode};
use crate::dynamics::{
    build_coupling, decay_metrics, eigendecompose, weights_ss, weights_tds, CouplingMatrix, DecayMetrics,
    EigenSystem, EmissionChannels, ExcitationState, DEFAULT_TDS_AMPLITUDE,
};
use crate::error::{Error, Result};
use crate::free_space::{build_free_matrix, FreeSpaceMatrix};
use crate::geometry::AtomConfig;
use crate::units::K0;

pub use grid::{Axis, SweepCell, SweepGrid};
pub use lorentz::{fit_lorentzian, LorentzFit};
pub use stats::{EnsembleStats, Histogram, MetricStats, RunningStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Excitation {
    /// Timed-Dicke state prepared by a short pulse.
    Tds,
    /// Steady state under long resonant driving.
    Ss,
}

impl Excitation {
    pub fn label(self) -> &'static str {
        match self {
            Excitation::Tds => "tds",
            Excitation::Ss => "ss",
        }
    }
}

/// SplitMix64 finalizer used to derive independent seeds for grid points.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f` for every trial index in parallel, returning results in index
/// order.
pub fn run_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Label under which a failed trial is counted.
pub fn exclusion_reason(err: &Error) -> &'static str {
    match err {
        Error::NearCoincidence { .. } => "near-coincidence",
        Error::Defective { .. } => "defective",
        Error::Pairing { .. } => "pairing",
        Error::DarkPole { .. } => "dark-pole",
        Error::Numerical(_) => "numerical",
        Error::Linalg(_) => "linalg",
        _ => "other",
    }
}

/// Model variants applied when building a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub coupling: CouplingMode,
    /// Keep the off-diagonal free-space couplings.
    pub free_space: bool,
    /// Path wavenumber overriding `n_eff k0` (in units of `k0`).
    pub k_override: Option<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            coupling: CouplingMode::HeightDependent,
            free_space: true,
            k_override: None,
        }
    }
}

/// All matrices for one atom configuration. The probe is resonant with
/// both atoms and cavity mode, so `Δ_A = Δ_C`.
pub struct Realization {
    pub cavity: CavityMatrix,
    pub free: FreeSpaceMatrix,
    pub coupling: CouplingMatrix,
    pub eigen: EigenSystem,
    pub channels: EmissionChannels,
}

impl Realization {
    pub fn new(config: &AtomConfig, params: &CavityParams, options: &ModelOptions) -> Result<Self> {
        let mut cavity = build_cavity_matrix(config, params, options.coupling)?;
        if let Some(k) = options.k_override {
            cavity = cavity.with_wavenumber(config, k * K0)?;
        }
        let free = if options.free_space {
            build_free_matrix(config)?
        } else {
            FreeSpaceMatrix::diagonal_only(config.len())
        };
        let coupling = build_coupling(params.delta_c, &cavity, &free)?;
        let eigen = eigendecompose(&coupling)?;
        let channels = EmissionChannels::new(&cavity, &free);
        Ok(Self {
            cavity,
            free,
            coupling,
            eigen,
            channels,
        })
    }

    pub fn excite(&self, excitation: Excitation, eta: f64) -> Result<ExcitationState> {
        let drive = self.cavity.drive(eta);
        match excitation {
            Excitation::Tds => weights_tds(&self.eigen, &drive, DEFAULT_TDS_AMPLITUDE),
            Excitation::Ss => weights_ss(&self.eigen, &drive),
        }
    }

    pub fn metrics(&self, excitation: Excitation, eta: f64) -> Result<DecayMetrics> {
        let state = self.excite(excitation, eta)?;
        decay_metrics(&state.sigma, &self.coupling, &self.channels)
    }
}

pub(crate) fn div(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

/// Metric values recorded per trial.
pub fn metric_row(m: &DecayMetrics) -> [(&'static str, Option<f64>); 8] {
    [
        ("gamma_f", m.gamma_f),
        ("gamma_c", m.gamma_c),
        ("Gamma_f", m.big_gamma_f),
        ("Gamma_c", m.big_gamma_c),
        ("Gamma_exp", m.gamma_exp),
        ("theta", m.theta),
        ("gamma_ratio", div(m.gamma_c, m.gamma_f)),
        ("Gamma_ratio", div(m.big_gamma_c, m.big_gamma_f)),
    ]
}

/// Folds per-trial outcomes into ensemble statistics in trial order.
pub fn collect_outcomes(mut stats: EnsembleStats, outcomes: Vec<Result<DecayMetrics>>) -> EnsembleStats {
    for o in outcomes {
        match o {
            Ok(m) => stats.record(&metric_row(&m)),
            Err(e) => {
                log::debug!("trial excluded: {e}");
                stats.exclude(exclusion_reason(&e));
            }
        }
    }
    if stats.excluded_total() > 0 {
        log::info!("excluded {} of {} trials: {:?}", stats.excluded_total(), stats.requested, stats.excluded);
    }
    stats
}

/// Fails when no trial survived.
pub fn require_accepted(stats: EnsembleStats) -> Result<EnsembleStats> {
    if stats.accepted() == 0 {
        Err(Error::AllExcluded(stats.requested as usize))
    } else {
        Ok(stats)
    }
}
