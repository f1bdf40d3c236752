//! Left/right eigen-decomposition of the non-normal coupling matrix.
//!
//! Right eigenvectors come from `M`, left eigenvectors from `Mᵀ`; the two
//! spectra are paired by proximity and every pair (or degenerate block) is
//! rescaled so that `Lᵀ R = 1`.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eig, Inverse, SVD};

use super::CouplingMatrix;
use crate::error::{Error, Result};
use crate::units::{C64, CMatrix};

/// Relative tolerance for matching and clustering eigenvalues.
const MATCH_TOL: f64 = 1e-8;
/// Relative mismatch above which pairing is rejected.
const PAIR_REJECT: f64 = 1e-6;
/// Minimum `|Lᵀ R|` of unit vectors before the matrix counts as defective.
const DEFECTIVE_TOL: f64 = 1e-12;
/// Maximum accepted `|Lᵀ R - 1|` entry.
pub const BIORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub lambdas: Array1<C64>,
    /// Right eigenvectors as columns.
    pub right: CMatrix,
    /// Left eigenvectors as columns, `leftᵀ · right = 1`.
    pub left: CMatrix,
    /// Largest deviation of `leftᵀ · right` from the identity.
    pub biorthogonality_error: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Total decay rates `Γ_α = 2 Im λ_α`.
    pub fn decay_rates(&self) -> Array1<f64> {
        self.lambdas.mapv(|l| 2.0 * l.im)
    }

    /// Mode shifts `J_α = Re λ_α`.
    pub fn shifts(&self) -> Array1<f64> {
        self.lambdas.mapv(|l| l.re)
    }

    /// `L_αᵀ v` for every mode.
    pub fn project(&self, v: &Array1<C64>) -> Array1<C64> {
        self.left.t().dot(v)
    }

    /// `Σ_α w_α R_α`.
    pub fn reconstruct(&self, weights: &Array1<C64>) -> Array1<C64> {
        self.right.dot(weights)
    }
}

/// Minimum-cost perfect assignment (Hungarian algorithm, O(n³)).
/// Returns `assign[row] = column`.
fn hungarian(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Pairs right eigenvalues with left eigenvalues. Greedy nearest-neighbour
/// when every right eigenvalue has exactly one candidate inside `tol`,
/// optimal assignment otherwise.
fn pair_spectra(right: &Array1<C64>, left: &Array1<C64>, tol: f64) -> Vec<usize> {
    let n = right.len();
    let cost = Array2::from_shape_fn((n, n), |(a, b)| (right[a] - left[b]).norm());
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut unique = true;
    for a in 0..n {
        let candidates: Vec<usize> = (0..n).filter(|&b| cost[[a, b]] <= tol).collect();
        match candidates.as_slice() {
            [b] if !taken[*b] => {
                assign[a] = *b;
                taken[*b] = true;
            }
            _ => {
                unique = false;
                break;
            }
        }
    }
    if unique {
        assign
    } else {
        hungarian(&cost)
    }
}

/// Groups indices whose eigenvalues lie within `tol` of each other
/// (transitively).
fn clusters(lambdas: &Array1<C64>, tol: f64) -> Vec<Vec<usize>> {
    let n = lambdas.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut i = i;
        while parent[i] != r {
            let next = parent[i];
            parent[i] = r;
            i = next;
        }
        r
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (lambdas[a] - lambdas[b]).norm() <= tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for a in 0..n {
        let r = find(&mut parent, a);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(a);
    }
    groups
}

pub fn eigendecompose(m: &CouplingMatrix) -> Result<EigenSystem> {
    let n = m.dim();
    if m.matrix.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("coupling matrix has non-finite entries".into()));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let (lambdas, right) = m.matrix.eig()?;
    let transposed = m.matrix.t().to_owned();
    let (left_lambdas, left_raw) = transposed.eig()?;

    let assign = pair_spectra(&lambdas, &left_lambdas, MATCH_TOL * scale);
    for (a, &b) in assign.iter().enumerate() {
        let distance = (lambdas[a] - left_lambdas[b]).norm();
        if distance > PAIR_REJECT * scale {
            return Err(Error::Pairing { mode: a, distance });
        }
    }
    let mut left = CMatrix::zeros((n, n));
    for (a, &b) in assign.iter().enumerate() {
        left.column_mut(a).assign(&left_raw.column(b));
    }

    for block in clusters(&lambdas, MATCH_TOL * scale) {
        if let [a] = block.as_slice() {
            let overlap: C64 = left.column(*a).iter().zip(right.column(*a)).map(|(l, r)| l * r).sum();
            if overlap.norm() < DEFECTIVE_TOL {
                return Err(Error::Defective {
                    mode: *a,
                    overlap: overlap.norm(),
                });
            }
            left.column_mut(*a).mapv_inplace(|l| l / overlap);
        } else {
            let k = block.len();
            let lk = CMatrix::from_shape_fn((n, k), |(i, c)| left[[i, block[c]]]);
            let rk = CMatrix::from_shape_fn((n, k), |(i, c)| right[[i, block[c]]]);
            let overlap = lk.t().dot(&rk);
            let (_, sv, _) = overlap.svd(false, false)?;
            let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if smallest < DEFECTIVE_TOL {
                return Err(Error::Defective {
                    mode: block[0],
                    overlap: smallest,
                });
            }
            // L' = L S^{-T} so that L'ᵀ R = S^{-1} S = 1
            let fixed = lk.dot(&overlap.inv()?.t());
            for (c, &a) in block.iter().enumerate() {
                left.column_mut(a).assign(&fixed.slice(s![.., c]));
            }
        }
    }

    let gram = left.t().dot(&right);
    let mut err: f64 = 0.0;
    for ((a, b), v) in gram.indexed_iter() {
        let target = if a == b { C64::from(1.0) } else { C64::from(0.0) };
        err = err.max((v - target).norm());
    }
    if err > BIORTHO_TOL {
        return Err(Error::Numerical(format!("bi-orthonormality violated by {err:e}")));
    }
    Ok(EigenSystem {
        lambdas,
        right,
        left,
        biorthogonality_error: err,
    })
}
