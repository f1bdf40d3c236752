//! Four-parameter Lorentzian least-squares fit (Levenberg-Marquardt).
//!
//! Model: `y = offset + amplitude / (1 + ((x - center)/(fwhm/2))²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const STEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn lorentzian(x: f64, center: f64, fwhm: f64, amplitude: f64, offset: f64) -> f64 {
    let u = (x - center) / (fwhm / 2.0);
    offset + amplitude / (1.0 + u * u)
}

fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 4] {
    let n = x.len();
    let edge = (n / 8).max(1);
    let offset = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let (k, _) = y
        .iter()
        .enumerate()
        .map(|(k, v)| (k, (v - offset).abs()))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let amplitude = y[k] - offset;
    let half = offset + amplitude / 2.0;
    let above = |v: f64| (v - half) * amplitude.signum() > 0.0;
    let crossing = |i: usize, j: usize| {
        let t = (half - y[i]) / (y[j] - y[i]);
        x[i] + t * (x[j] - x[i])
    };
    let mut left = x[0];
    for i in (0..k).rev() {
        if !above(y[i]) {
            left = crossing(i, i + 1);
            break;
        }
    }
    let mut right = x[n - 1];
    for i in (k + 1)..n {
        if !above(y[i]) {
            right = crossing(i - 1, i);
            break;
        }
    }
    let mut fwhm = right - left;
    if !(fwhm > 0.0) {
        fwhm = (x[n - 1] - x[0]) / 4.0;
    }
    [x[k], fwhm, amplitude, offset]
}

/// Solves the 4×4 system `a·δ = b` by Gaussian elimination with partial
/// pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for c in 0..4 {
        let p = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = ((r + 1)..4).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn sum_sq(x: &[f64], y: &[f64], p: &[f64; 4]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (lorentzian(xi, p[0], p[1], p[2], p[3]) - yi).powi(2))
        .sum()
}

pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<LorentzFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 8 {
        return Err(Error::param("x", "at least 8 points are required"));
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::param("y", "non-finite sample"));
    }
    let mut p = initial_guess(x, y);
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut cost = sum_sq(x, y, &p);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&xi, &yi) in x.iter().zip(y) {
            let h = p[1] / 2.0;
            let u = (xi - p[0]) / h;
            let d = 1.0 + u * u;
            let r = p[3] + p[2] / d - yi;
            let dd = p[2] / (d * d);
            let grad = [dd * 2.0 * u / h, dd * u * u / p[1] * 2.0, 1.0 / d, 1.0];
            for a in 0..4 {
                jtr[a] += grad[a] * r;
                for b in 0..4 {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for a in 0..4 {
                damped[a][a] += mu * jtj[a][a].max(1e-300);
            }
            let Some(step) = solve4(damped, jtr.map(|v| -v)) else {
                mu *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let c = sum_sq(x, y, &trial);
            if c.is_finite() && c <= cost {
                // center and width scale with the width, amplitude and offset with the data
                let unit = [trial[1].abs(), trial[1].abs(), scale, scale];
                let rel = (0..4).map(|a| step[a].abs() / unit[a]).fold(0.0, f64::max);
                p = trial;
                cost = c;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                if rel < STEP_TOL {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no downhill step at any damping: at a minimum to machine precision
            converged = cost <= 1e-28 * scale * scale * x.len() as f64;
            break;
        }
    }
    let degenerate = p[2].abs() < 1e-12 * (p[3].abs() + scale) || !(p[1].abs() > 0.0);
    Ok(LorentzFit {
        center: p[0],
        fwhm: p[1].abs(),
        amplitude: p[2],
        offset: p[3],
        residual: (cost / x.len() as f64).sqrt(),
        iterations,
        converged: converged && !degenerate,
    })
}
