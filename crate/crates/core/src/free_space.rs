//! Free-space dipole-dipole interaction matrix from the vacuum Green's
//! function, for a σ+ transition quantized along `x`.
//!
//! `G_f[i][j] = -i/2 [h0(k0 r) + c(θ) h2(k0 r)]` with `c(θ) = (1 - 3cos²θ)/4`
//! and `θ` the angle between `r_i - r_j` and the `x` axis. The diagonal is
//! the single-atom self term `-i/2`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::{AtomConfig, Position};
use crate::units::{C64, CMatrix, GAMMA0, I, K0};

/// Pairs closer than this are rejected.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-9;

/// Outgoing spherical Hankel function `h0(x) = e^{ix}/(ix)`.
pub fn hankel0(x: f64) -> C64 {
    C64::from_polar(1.0, x) / (I * x)
}

/// Outgoing spherical Hankel function `h2(x) = e^{ix}(-3i/x³ - 3/x² + i/x)`.
pub fn hankel2(x: f64) -> C64 {
    let x2 = x * x;
    C64::from_polar(1.0, x) * C64::new(-3.0 / x2, -3.0 / (x2 * x) + 1.0 / x)
}

/// Angular weight of `h2` for polar angle `θ` measured from `x`.
pub fn polarization_coefficient(cos_theta: f64) -> f64 {
    (1.0 - 3.0 * cos_theta * cos_theta) / 4.0
}

fn separation(ri: &Position, rj: &Position) -> ([f64; 3], f64) {
    let d = [ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    (d, r)
}

fn pair_value(d: [f64; 3], r: f64) -> C64 {
    let x = K0 * r;
    let c = polarization_coefficient(d[0] / r);
    -I * (GAMMA0 / 2.0) * (hankel0(x) + c * hankel2(x))
}

/// Off-diagonal element `J_ij - iΓ_ij/2` for one atom pair.
pub fn greens_pair(ri: &Position, rj: &Position) -> Result<C64> {
    let (d, r) = separation(ri, rj);
    if r <= COINCIDENCE_THRESHOLD {
        return Err(Error::NearCoincidence {
            i: 0,
            j: 1,
            separation: r,
            threshold: COINCIDENCE_THRESHOLD,
        });
    }
    Ok(pair_value(d, r))
}

/// Complex-symmetric free-space interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSpaceMatrix(pub CMatrix);

impl FreeSpaceMatrix {
    /// Independent atoms: only the `-i/2` self terms.
    pub fn diagonal_only(n: usize) -> Self {
        Self(Array2::from_diag_elem(n, -I * (GAMMA0 / 2.0)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Hermitian dissipation kernel `-Im{G_f}` (real symmetric).
    pub fn dissipation(&self) -> Array2<f64> {
        self.0.mapv(|z| -z.im)
    }
}

pub fn build_free_matrix(config: &AtomConfig) -> Result<FreeSpaceMatrix> {
    let n = config.len();
    let mut g = FreeSpaceMatrix::diagonal_only(n).0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (d, r) = separation(&config.positions[i], &config.positions[j]);
            if r <= COINCIDENCE_THRESHOLD {
                return Err(Error::NearCoincidence {
                    i,
                    j,
                    separation: r,
                    threshold: COINCIDENCE_THRESHOLD,
                });
            }
            let v = pair_value(d, r);
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    Ok(FreeSpaceMatrix(g))
}
