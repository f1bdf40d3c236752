//! Cavity-mediated interaction after adiabatic elimination of the WGM.
//!
//! With `u_j = g_j e^{-iφ_j}` and `κ̃ = Δ_C + i(κ_i + κ_e)/2` the cavity
//! matrix is the rank-one `G_c = u u† / κ̃`, the drive is `Ω = -η u / κ̃` and
//! the eliminated field is `⟨a⟩ = (u†σ + η) / κ̃`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geometry::{AtomConfig, Waveguide, Z_MIN};
use crate::units::{C64, CMatrix, CVector, GAMMA0, I, K0, LAMBDA0};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub delta_c: f64,
    pub n_eff: f64,
    /// Single-atom cooperativity of an atom at height `z_ref`.
    pub c_ref: f64,
    pub z_ref: f64,
    /// Decay length of the coupling `g(z)`.
    pub z_ev: f64,
    pub eta: f64,
}

/// `λ0 / (2π sqrt(n_eff² - 1))`, the evanescent tail length of a guided
/// mode with effective index `n_eff`.
pub fn evanescent_length(n_eff: f64) -> f64 {
    LAMBDA0 / (std::f64::consts::TAU * (n_eff * n_eff - 1.0).sqrt())
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            kappa_i: 100.0,
            kappa_e: 100.0,
            delta_c: 0.0,
            n_eff: 1.69,
            c_ref: 0.05,
            z_ref: 330.0 / 852.35,
            z_ev: evanescent_length(1.69),
            eta: 1.0,
        }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_i > 0.0) {
            return Err(Error::param("kappa_i", "must be positive"));
        }
        if !(self.kappa_e > 0.0) {
            return Err(Error::param("kappa_e", "must be positive"));
        }
        if !(self.n_eff >= 1.0) {
            return Err(Error::param("n_eff", "must be at least 1"));
        }
        if !(self.z_ev > 0.0) {
            return Err(Error::param("z_ev", "must be positive"));
        }
        if !(self.c_ref >= 0.0) {
            return Err(Error::param("c_ref", "must be non-negative"));
        }
        if !self.delta_c.is_finite() || !self.eta.is_finite() || !self.z_ref.is_finite() {
            return Err(Error::param("cavity", "non-finite value"));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_e
    }

    pub fn kappa_tilde(&self) -> C64 {
        C64::new(self.delta_c, self.kappa() / 2.0)
    }

    pub fn k_wg(&self) -> f64 {
        self.n_eff * K0
    }

    pub fn g_ref(&self) -> f64 {
        (self.c_ref * self.kappa() * GAMMA0 / 4.0).sqrt()
    }

    /// Wavenumber used for the mode phases: `n_eff k0` on a straight guide,
    /// rounded to the nearest whole number of wavelengths around a ring.
    pub fn path_wavenumber(&self, waveguide: Waveguide) -> f64 {
        match waveguide {
            Waveguide::Straight => self.k_wg(),
            Waveguide::Ring { circumference } => {
                let m = (self.k_wg() * circumference / std::f64::consts::TAU).round();
                std::f64::consts::TAU * m / circumference
            }
        }
    }
}

pub fn coupling_at(z: f64, params: &CavityParams) -> f64 {
    params.g_ref() * (-(z - params.z_ref) / params.z_ev).exp()
}

pub fn cooperativity(g: f64, params: &CavityParams) -> f64 {
    4.0 * g * g / (params.kappa() * GAMMA0)
}

/// `E[exp(-2(z - z_ref)/z_ev)]` for heights drawn from `N(z_mean, σ_z²)`
/// truncated to `z > Z_MIN`, i.e. the ensemble-mean cooperativity in units
/// of `c_ref`.
pub fn mean_cooperativity_factor(z_mean: f64, sigma_z: f64, z_ref: f64, z_ev: f64) -> f64 {
    let t = -2.0 / z_ev;
    if sigma_z == 0.0 {
        return (t * (z_mean - z_ref)).exp();
    }
    let s2 = std::f64::consts::SQRT_2;
    let tail = |x: f64| 0.5 * erfc(x / s2);
    let shifted = z_mean + sigma_z * sigma_z * t;
    let num = tail((Z_MIN - shifted) / sigma_z);
    let den = tail((Z_MIN - z_mean) / sigma_z);
    // exp(t(μ - z_ref) + σ²t²/2) · Q((a - μ - σ²t)/σ) / Q((a - μ)/σ)
    let log = t * (z_mean - z_ref) + 0.5 * sigma_z * sigma_z * t * t + num.ln() - den.ln();
    log.exp()
}

/// How per-atom couplings are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// `g_j` follows the evanescent decay with height.
    #[default]
    HeightDependent,
    /// Every atom gets `g_ref`.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct CavityMatrix {
    pub matrix: CMatrix,
    pub kappa_tilde: C64,
    pub couplings: Vec<f64>,
    pub phases: Vec<f64>,
    pub cooperativities: Vec<f64>,
    /// `u_j = g_j e^{-iφ_j}`.
    pub mode: CVector,
}

impl CavityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Hermitian emission kernel `i(G_c - G_c†) = κ u u† / |κ̃|²`.
    pub fn emission_kernel(&self) -> CMatrix {
        let scale = (self.kappa_tilde.im * 2.0) / self.kappa_tilde.norm_sqr();
        outer(&self.mode, &self.mode).mapv(|z| z * scale)
    }

    pub fn drive(&self, eta: f64) -> CVector {
        self.mode.mapv(|u| -u * eta / self.kappa_tilde)
    }

    /// `u†σ`.
    pub fn overlap(&self, sigma: &CVector) -> C64 {
        self.mode.iter().zip(sigma).map(|(u, s)| u.conj() * s).sum()
    }

    /// Same couplings with phases `k s_j` for an arbitrary path wavenumber.
    pub fn with_wavenumber(&self, config: &AtomConfig, k: f64) -> Result<Self> {
        if config.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: config.len(),
            });
        }
        let phases: Vec<f64> = config.path.iter().map(|s| k * s).collect();
        Ok(assemble(self.couplings.clone(), phases, self.cooperativities.clone(), self.kappa_tilde))
    }

    /// Same atoms and couplings at a different cavity detuning.
    pub fn with_detuning(&self, delta_c: f64) -> Self {
        let kt = C64::new(delta_c, self.kappa_tilde.im);
        let scale = self.kappa_tilde / kt;
        Self {
            matrix: self.matrix.mapv(|z| z * scale),
            kappa_tilde: kt,
            ..self.clone()
        }
    }
}

fn outer(a: &CVector, b: &CVector) -> CMatrix {
    let n = a.len();
    CMatrix::from_shape_fn((n, n), |(i, j)| a[i] * b[j].conj())
}

pub fn build_cavity_matrix(config: &AtomConfig, params: &CavityParams, mode: CouplingMode) -> Result<CavityMatrix> {
    params.validate()?;
    if config.is_empty() {
        return Err(Error::param("config", "no atoms"));
    }
    let k = params.path_wavenumber(config.waveguide);
    let couplings: Vec<f64> = match mode {
        CouplingMode::HeightDependent => config.heights().map(|z| coupling_at(z, params)).collect(),
        CouplingMode::Uniform => vec![params.g_ref(); config.len()],
    };
    let phases: Vec<f64> = config.path.iter().map(|s| k * s).collect();
    let cooperativities = couplings.iter().map(|&g| cooperativity(g, params)).collect();
    Ok(assemble(couplings, phases, cooperativities, params.kappa_tilde()))
}

fn assemble(couplings: Vec<f64>, phases: Vec<f64>, cooperativities: Vec<f64>, kt: C64) -> CavityMatrix {
    let u: CVector = couplings
        .iter()
        .zip(&phases)
        .map(|(&g, &phi)| C64::from_polar(g, -phi))
        .collect();
    let matrix = outer(&u, &u).mapv(|z| z / kt);
    CavityMatrix {
        matrix,
        kappa_tilde: kt,
        couplings,
        phases,
        cooperativities,
        mode: u,
    }
}

pub fn drive_vector(config: &AtomConfig, params: &CavityParams, mode: CouplingMode) -> Result<CVector> {
    Ok(build_cavity_matrix(config, params, mode)?.drive(params.eta))
}

/// Adiabatically eliminated intracavity field for atomic coherences `sigma`.
pub fn cavity_field(sigma: &CVector, cavity: &CavityMatrix, eta: f64) -> Result<C64> {
    if sigma.len() != cavity.dim() {
        return Err(Error::DimensionMismatch {
            expected: cavity.dim(),
            found: sigma.len(),
        });
    }
    Ok((cavity.overlap(sigma) + eta) / cavity.kappa_tilde)
}

/// Bus-waveguide amplitude transmission `t = 1 - iκ_e⟨a⟩/η`.
pub fn bus_transmission(sigma_ss: &CVector, cavity: &CavityMatrix, params: &CavityParams) -> Result<C64> {
    if params.eta == 0.0 {
        return Err(Error::UndefinedTransmission);
    }
    let a = cavity_field(sigma_ss, cavity, params.eta)?;
    Ok(1.0 - I * params.kappa_e * a / params.eta)
}
