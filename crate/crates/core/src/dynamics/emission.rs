//! Excitation weights, free evolution, photon emission rates and the
//! initial-time decay metrics.

use serde::{Deserialize, Serialize};

use super::{CouplingMatrix, EigenSystem};
use crate::cavity::CavityMatrix;
use crate::error::{Error, Result};
use crate::free_space::FreeSpaceMatrix;
use crate::units::{C64, CMatrix, CVector, I};

/// Amplitude `‖σ_TDS‖` used for timed-Dicke initial states.
pub const DEFAULT_TDS_AMPLITUDE: f64 = 0.01;
/// Weak-excitation guard on `‖σ‖` and `max |σ_j|`.
const WEAK_LIMIT: f64 = 0.1;
const DARK_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExcitationKind {
    /// Timed-Dicke state, `σ ∝ Ω`.
    Tds,
    /// Driven steady state, `Mσ = -Ω`.
    Ss,
    Custom,
}

#[derive(Debug, Clone)]
pub struct ExcitationState {
    pub sigma: CVector,
    pub weights: CVector,
    pub kind: ExcitationKind,
}

impl ExcitationState {
    pub fn excitation(&self) -> f64 {
        norm_sqr(&self.sigma)
    }
}

fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn quadratic(a: &CMatrix, v: &CVector) -> C64 {
    v.iter().zip(a.dot(v).iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Steady-state weights `w_α = -L_αᵀΩ / λ_α`, where `λ_α` are the
/// eigenvalues of the full `M` (already shifted by `Δ_A`).
pub fn weights_ss(eig: &EigenSystem, drive: &CVector) -> Result<ExcitationState> {
    if drive.len() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: drive.len(),
        });
    }
    if let Some(mode) = eig.lambdas.iter().position(|l| l.norm() < DARK_POLE_TOL) {
        return Err(Error::DarkPole { mode });
    }
    let projected = eig.project(drive);
    let weights: CVector = projected.iter().zip(&eig.lambdas).map(|(o, l)| -o / l).collect();
    let sigma = eig.reconstruct(&weights);
    Ok(ExcitationState {
        sigma,
        weights,
        kind: ExcitationKind::Ss,
    })
}

/// Timed-Dicke weights for `σ = ε Ω / ‖Ω‖`.
pub fn weights_tds(eig: &EigenSystem, drive: &CVector, amplitude: f64) -> Result<ExcitationState> {
    if drive.len() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: drive.len(),
        });
    }
    if amplitude > WEAK_LIMIT {
        return Err(Error::StrongExcitation(amplitude));
    }
    let norm = norm_sqr(drive).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroDrive);
    }
    let sigma = drive.mapv(|w| w * (amplitude / norm));
    let weights = eig.project(&sigma);
    Ok(ExcitationState {
        sigma,
        weights,
        kind: ExcitationKind::Tds,
    })
}

/// `σ(t) = Σ_α w_α e^{iλ_α t} R_α`.
pub fn evolve(eig: &EigenSystem, weights: &CVector, t: f64) -> CVector {
    let phased: CVector = weights
        .iter()
        .zip(&eig.lambdas)
        .map(|(w, l)| w * (I * l * t).exp())
        .collect();
    eig.reconstruct(&phased)
}

/// Hermitian rate kernels: `R_x = σ† A_x σ` with `A_x = i(G_x - G_x†)`.
///
/// At `Δ_C = 0` these reduce to `A_c = 2iG_c` and `A_f = -2 Im{G_f}`.
#[derive(Debug, Clone)]
pub struct EmissionChannels {
    pub cavity: CMatrix,
    pub free: CMatrix,
}

fn anti_hermitian_kernel(g: &CMatrix) -> CMatrix {
    let n = g.nrows();
    CMatrix::from_shape_fn((n, n), |(i, j)| I * (g[[i, j]] - g[[j, i]].conj()))
}

impl EmissionChannels {
    pub fn new(cavity: &CavityMatrix, free: &FreeSpaceMatrix) -> Self {
        Self {
            cavity: anti_hermitian_kernel(&cavity.matrix),
            free: anti_hermitian_kernel(free.matrix()),
        }
    }

    pub fn total(&self) -> CMatrix {
        &self.cavity + &self.free
    }
}

fn real_rate(a: &CMatrix, sigma: &CVector) -> Result<f64> {
    let q = quadratic(a, sigma);
    let scale = norm_sqr(sigma) * a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if q.im.abs() > 1e-9 * scale {
        return Err(Error::Numerical(format!("emission rate has imaginary part {:e}", q.im)));
    }
    Ok(q.re)
}

/// Photon emission rates `(R_c, R_f)` into the cavity and free space.
pub fn emission_rates(sigma: &CVector, channels: &EmissionChannels) -> Result<(f64, f64)> {
    if sigma.len() != channels.cavity.nrows() {
        return Err(Error::DimensionMismatch {
            expected: channels.cavity.nrows(),
            found: sigma.len(),
        });
    }
    Ok((real_rate(&channels.cavity, sigma)?, real_rate(&channels.free, sigma)?))
}

/// Initial-time decay metrics. `None` marks a metric whose denominator
/// vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DecayMetrics {
    pub excitation: f64,
    pub r_c: f64,
    pub r_f: f64,
    pub dr_c: f64,
    pub dr_f: f64,
    /// `R_f(0)/e(0)`.
    pub gamma_f: Option<f64>,
    /// `R_c(0)/e(0)`.
    pub gamma_c: Option<f64>,
    /// `-Ṙ_f(0)/R(0)`.
    pub big_gamma_f: Option<f64>,
    /// `-Ṙ_c(0)/R(0)`.
    pub big_gamma_c: Option<f64>,
    /// `-Ṙ_c(0)/R_c(0)`.
    pub gamma_exp: Option<f64>,
    /// `[Ṙ_c/R_c] / [Ṙ_f/R_f]` at `t = 0`.
    pub theta: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    let r = num / den;
    (den != 0.0 && r.is_finite()).then_some(r)
}

/// Rates and their analytic time derivatives `Ṙ = 2 Re(σ† A σ̇)` with
/// `σ̇ = iMσ`.
pub fn decay_metrics(sigma0: &CVector, m: &CouplingMatrix, channels: &EmissionChannels) -> Result<DecayMetrics> {
    let e0 = norm_sqr(sigma0);
    let (r_c, r_f) = emission_rates(sigma0, channels)?;
    let sdot = m.rate(sigma0, None);
    let deriv = |a: &CMatrix| -> f64 {
        let asd = a.dot(&sdot);
        2.0 * sigma0.iter().zip(asd.iter()).map(|(s, v)| s.conj() * v).sum::<C64>().re
    };
    let dr_c = deriv(&channels.cavity);
    let dr_f = deriv(&channels.free);
    let r = r_c + r_f;
    let theta = match (ratio(dr_c, r_c), ratio(dr_f, r_f)) {
        (Some(a), Some(b)) => ratio(a, b),
        _ => None,
    };
    Ok(DecayMetrics {
        excitation: e0,
        r_c,
        r_f,
        dr_c,
        dr_f,
        gamma_f: ratio(r_f, e0),
        gamma_c: ratio(r_c, e0),
        big_gamma_f: ratio(-dr_f, r),
        big_gamma_c: ratio(-dr_c, r),
        gamma_exp: ratio(-dr_c, r_c),
        theta,
    })
}

/// Total emitted photon number `∫₀^∞ R dt`, from the pairwise mode
/// interference integrals `Σ_αβ w̄_α w_β (R_α† A R_β) · i/(λ_β - λ̄_α)`.
pub fn photon_budget(eig: &EigenSystem, weights: &CVector, channels: &EmissionChannels) -> C64 {
    let a = channels.total();
    let ar = a.dot(&eig.right);
    let overlap = eig.right.t().mapv(|z| z.conj()).dot(&ar);
    let n = eig.dim();
    let mut total = C64::from(0.0);
    for al in 0..n {
        for be in 0..n {
            let denom = eig.lambdas[be] - eig.lambdas[al].conj();
            total += weights[al].conj() * weights[be] * overlap[[al, be]] * I / denom;
        }
    }
    total
}

/// `n` log-spaced times on `[t0, t1]`.
pub fn log_time_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t0];
    }
    let (a, b) = (t0.ln(), t1.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EmissionRecord {
    pub times: Vec<f64>,
    pub r_c: Vec<f64>,
    pub r_f: Vec<f64>,
    pub excitation: Vec<f64>,
    pub metrics: DecayMetrics,
    pub eigenvalues: Vec<[f64; 2]>,
}

impl EmissionRecord {
    /// Default grid: 200 log-spaced points on `[1e-3, 50]`.
    pub fn default_times() -> Vec<f64> {
        log_time_grid(1e-3, 50.0, 200)
    }

    pub fn compute(
        eig: &EigenSystem,
        state: &ExcitationState,
        m: &CouplingMatrix,
        channels: &EmissionChannels,
        times: &[f64],
    ) -> Result<Self> {
        let metrics = decay_metrics(&state.sigma, m, channels)?;
        let mut r_c = Vec::with_capacity(times.len());
        let mut r_f = Vec::with_capacity(times.len());
        let mut excitation = Vec::with_capacity(times.len());
        for &t in times {
            let s = evolve(eig, &state.weights, t);
            let (c, f) = emission_rates(&s, channels)?;
            r_c.push(c);
            r_f.push(f);
            excitation.push(norm_sqr(&s));
        }
        Ok(Self {
            times: times.to_vec(),
            r_c,
            r_f,
            excitation,
            metrics,
            eigenvalues: eig.lambdas.iter().map(|l| [l.re, l.im]).collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,R_c,R_f,e\n");
        for k in 0..self.times.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.times[k], self.r_c[k], self.r_f[k], self.excitation[k]
            ));
        }
        out
    }

    pub fn metrics_json(&self) -> serde_json::Value {
        let m = &self.metrics;
        serde_json::json!({
            "gamma_f": m.gamma_f,
            "gamma_c": m.gamma_c,
            "Gamma_f": m.big_gamma_f,
            "Gamma_c": m.big_gamma_c,
            "Gamma_exp": m.gamma_exp,
            "theta": m.theta,
            "eigenvalues": self.eigenvalues,
        })
    }
}
