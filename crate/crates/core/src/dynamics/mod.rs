//! Linear single-excitation dynamics `dσ/dt = iMσ + iΩ` with
//! `M = Δ_A·1 - G_c - G_f`.
//!
//! Eigenvalues of `M` have non-negative imaginary part for a passive system;
//! mode `α` decays with total rate `Γ_α = 2 Im λ_α`.

mod eigen;
mod emission;

pub use eigen::{eigendecompose, EigenSystem};
pub use emission::{
    decay_metrics, emission_rates, evolve, log_time_grid, photon_budget, weights_ss, weights_tds, DecayMetrics,
    EmissionChannels, EmissionRecord, ExcitationKind, ExcitationState, DEFAULT_TDS_AMPLITUDE,
};

use ndarray::Array2;

use crate::cavity::CavityMatrix;
use crate::error::{Error, Result};
use crate::free_space::FreeSpaceMatrix;
use crate::units::{C64, CMatrix, CVector};

#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub matrix: CMatrix,
    pub delta_a: f64,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Right-hand side `iMσ + iΩ`.
    pub fn rate(&self, sigma: &CVector, drive: Option<&CVector>) -> CVector {
        let i = C64::new(0.0, 1.0);
        let mut out = self.matrix.dot(sigma).mapv(|z| i * z);
        if let Some(om) = drive {
            out.zip_mut_with(om, |o, w| *o += i * w);
        }
        out
    }

    /// Frobenius norm, the scale for eigen tolerances.
    pub fn norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn build_coupling(delta_a: f64, cavity: &CavityMatrix, free: &FreeSpaceMatrix) -> Result<CouplingMatrix> {
    let n = free.dim();
    if cavity.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cavity.dim(),
        });
    }
    let mut m: CMatrix = Array2::from_diag_elem(n, C64::from(delta_a));
    m -= &cavity.matrix;
    m -= free.matrix();
    Ok(CouplingMatrix { matrix: m, delta_a })
}

/// Steady state from a dense linear solve of `Mσ = -Ω`.
pub fn steady_state_direct(m: &CouplingMatrix, drive: &CVector) -> Result<CVector> {
    use ndarray_linalg::Solve;
    let rhs = drive.mapv(|w| -w);
    Ok(m.matrix.solve(&rhs)?)
}
