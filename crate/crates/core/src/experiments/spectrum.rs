//! Steady-state bus-waveguide transmission spectra and linewidth fits.
//!
//! The probe frequency moves atoms and cavity together (`Δ_A = Δ_C = Δ`).
//! The empty resonator contributes the known background
//! `|t₀(Δ)|² = |1 - iκ_e/κ̃(Δ)|²`; the Lorentzian is fitted to the
//! atom-induced extinction `|t₀|² - |t|²`, which the single-atom
//! solution shows is a Lorentzian of width `(1 + NC₁)Γ0` on a constant.

use serde::{Deserialize, Serialize};

use super::{exclusion_reason, fit_lorentzian, run_trials, trial_rng, LorentzFit, ModelOptions};
use crate::cavity::{bus_transmission, build_cavity_matrix, CavityParams, CouplingMode};
use crate::dynamics::{build_coupling, steady_state_direct};
use crate::error::{Error, Result};
use crate::free_space::{build_free_matrix, FreeSpaceMatrix};
use crate::geometry::{build_array_with, sample_cloud_with, ArrayParams, AtomConfig, CloudParams};
use crate::units::I;

use super::arrays::calibrate_array;
use super::cloud::calibrate_cloud;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectrumSource {
    Cloud(CloudParams),
    Array(ArrayParams),
}

impl SpectrumSource {
    fn nominal_atoms(&self) -> usize {
        match self {
            SpectrumSource::Cloud(c) => c.n_atoms,
            SpectrumSource::Array(a) => a.target_atoms.unwrap_or(a.n_sites),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Result<AtomConfig> {
        match self {
            SpectrumSource::Cloud(c) => sample_cloud_with(c, rng),
            SpectrumSource::Array(a) => build_array_with(a, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub uniform_c: bool,
    pub poisson_n: bool,
    pub free_space: bool,
    /// When false: fixed atom number, uniform coupling and no height
    /// spread; in-plane randomness is kept.
    pub stochastic: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            uniform_c: false,
            poisson_n: false,
            free_space: true,
            stochastic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub source: SpectrumSource,
    pub cavity: CavityParams,
    pub c1: f64,
    pub options: SpectrumOptions,
    pub detunings: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    /// Ensemble-mean `|t|²`.
    pub transmission: Vec<f64>,
    /// `1 - |t|²`.
    pub extinction: Vec<f64>,
    /// `|t₀|²` of the empty resonator.
    pub empty_transmission: Vec<f64>,
    pub fit: Option<LorentzFit>,
    pub trials: u64,
    pub excluded: u64,
}

impl SpectrumResult {
    pub fn fit_converged(&self) -> bool {
        self.fit.is_some_and(|f| f.converged)
    }

    pub fn fwhm(&self) -> Option<f64> {
        self.fit.map(|f| f.fwhm)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("detuning,transmission,extinction,empty_transmission,fit\n");
        for (k, &d) in self.detunings.iter().enumerate() {
            let fit = self
                .fit
                .map_or(f64::NAN, |f| super::lorentz::lorentzian(d, f.center, f.fwhm, f.amplitude, f.offset));
            out.push_str(&format!(
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
                d, self.transmission[k], self.extinction[k], self.empty_transmission[k], fit
            ));
        }
        out
    }
}

/// Symmetric grid spanning six expected linewidths `(1 + N c1)Γ0` either
/// side of resonance.
pub fn default_detunings(n_atoms: usize, c1: f64, points: usize) -> Vec<f64> {
    let half = 6.0 * (1.0 + n_atoms as f64 * c1);
    let points = points.max(2);
    (0..points)
        .map(|k| -half + 2.0 * half * k as f64 / (points - 1) as f64)
        .collect()
}

fn empty_transmission(params: &CavityParams, delta: f64) -> f64 {
    let mut p = params.clone();
    p.delta_c = delta;
    (1.0 - I * p.kappa_e / p.kappa_tilde()).norm_sqr()
}

/// `|t(Δ)|²` over the grid for one atom configuration.
fn single_spectrum(config: &AtomConfig, params: &CavityParams, options: &ModelOptions, detunings: &[f64]) -> Result<Vec<f64>> {
    let cavity0 = build_cavity_matrix(config, params, options.coupling)?;
    let free = if options.free_space {
        build_free_matrix(config)?
    } else {
        FreeSpaceMatrix::diagonal_only(config.len())
    };
    detunings
        .iter()
        .map(|&delta| {
            let cavity = cavity0.with_detuning(delta);
            let m = build_coupling(delta, &cavity, &free)?;
            let sigma = steady_state_direct(&m, &cavity.drive(params.eta))?;
            let mut p = params.clone();
            p.delta_c = delta;
            Ok(bus_transmission(&sigma, &cavity, &p)?.norm_sqr())
        })
        .collect()
}

pub fn compute_spectrum(run: &SpectrumRun) -> Result<SpectrumResult> {
    if run.trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if run.detunings.len() < 8 {
        return Err(Error::param("detunings", "need at least 8 points"));
    }
    let opts = run.options;
    let uniform = opts.uniform_c || !opts.stochastic;
    let coupling = if uniform {
        CouplingMode::Uniform
    } else {
        CouplingMode::HeightDependent
    };
    let mut source = run.source.clone();
    let cavity = match &mut source {
        SpectrumSource::Cloud(c) => {
            c.poisson_n = opts.poisson_n && opts.stochastic;
            if !opts.stochastic {
                c.sigma_z = 0.0;
            }
            calibrate_cloud(&run.cavity, c, run.c1, coupling)
        }
        SpectrumSource::Array(a) => {
            if !opts.stochastic {
                a.delta_z = 0.0;
            }
            calibrate_array(&run.cavity, a, run.c1)
        }
    };
    cavity.validate()?;
    let model = ModelOptions {
        coupling,
        free_space: opts.free_space,
        k_override: None,
    };
    let outcomes = run_trials(run.trials, |trial| {
        let mut rng = trial_rng(run.seed, trial);
        let config = source.sample(&mut rng)?;
        single_spectrum(&config, &cavity, &model, &run.detunings)
    });

    let n = run.detunings.len();
    let mut sum = vec![0.0; n];
    let mut accepted = 0u64;
    let mut excluded = 0u64;
    for o in outcomes {
        match o {
            Ok(t2) => {
                accepted += 1;
                for (s, v) in sum.iter_mut().zip(t2) {
                    *s += v;
                }
            }
            Err(e) => {
                log::debug!("spectrum trial excluded ({}): {e}", exclusion_reason(&e));
                excluded += 1;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::AllExcluded(run.trials as usize));
    }
    let transmission: Vec<f64> = sum.iter().map(|s| s / accepted as f64).collect();
    let extinction = transmission.iter().map(|t| 1.0 - t).collect();
    let empty: Vec<f64> = run.detunings.iter().map(|&d| empty_transmission(&cavity, d)).collect();
    let signal: Vec<f64> = empty.iter().zip(&transmission).map(|(e, t)| e - t).collect();
    let fit = match fit_lorentzian(&run.detunings, &signal) {
        Ok(f) => {
            if !f.converged {
                log::warn!("Lorentzian fit did not converge after {} iterations", f.iterations);
            }
            Some(f)
        }
        Err(e) => {
            log::warn!("Lorentzian fit failed: {e}");
            None
        }
    };
    log::debug!("spectrum over {} nominal atoms", source.nominal_atoms());
    Ok(SpectrumResult {
        detunings: run.detunings.clone(),
        transmission,
        extinction,
        empty_transmission: empty,
        fit,
        trials: run.trials,
        excluded,
    })
}
