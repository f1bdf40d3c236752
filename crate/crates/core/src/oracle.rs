//! Brute-force master-equation propagators in the single-excitation
//! manifold, used to validate the eigenmode fast path and the adiabatic
//! elimination of the cavity at small N.
//!
//! Basis ordering: `|g⟩, |e_1⟩ … |e_N⟩`, followed by `|g,1⟩` when the
//! cavity mode is explicit. Every jump operator maps into `|g⟩`, so the
//! dissipator reduces to a non-Hermitian Hamiltonian plus a recycling term
//! on the ground-state population.

use ndarray::s;
use ndarray_linalg::Solve;
use serde::{Deserialize, Serialize};

use crate::cavity::{build_cavity_matrix, cavity_field, CavityMatrix, CavityParams, CouplingMode};
use crate::dynamics::{
    build_coupling, eigendecompose, emission_rates, evolve, steady_state_direct, weights_tds, EmissionChannels,
    DEFAULT_TDS_AMPLITUDE,
};
use crate::error::{Error, Result};
use crate::free_space::{build_free_matrix, FreeSpaceMatrix};
use crate::geometry::AtomConfig;
use crate::units::{C64, CMatrix, CVector, I};

/// Density-matrix cost guard for model comparisons.
pub const MAX_ORACLE_ATOMS: usize = 6;
const TRACE_DRIFT: f64 = 1e-6;
/// Largest `dt · ‖H‖∞` accepted by the fixed-step integrator.
const STABILITY_LIMIT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMatrix,
    pub n_atoms: usize,
    pub cavity_mode: bool,
}

impl DensityMatrix {
    fn dim_for(n_atoms: usize, cavity_mode: bool) -> usize {
        n_atoms + 1 + usize::from(cavity_mode)
    }

    pub fn ground(n_atoms: usize, cavity_mode: bool) -> Self {
        let d = Self::dim_for(n_atoms, cavity_mode);
        let mut rho = CMatrix::zeros((d, d));
        rho[[0, 0]] = C64::from(1.0);
        Self {
            rho,
            n_atoms,
            cavity_mode,
        }
    }

    /// Pure state `√(1 - ‖σ‖²)|g⟩ + Σ σ_j |e_j⟩` with an empty cavity.
    pub fn from_coherences(sigma: &CVector, cavity_mode: bool) -> Result<Self> {
        Self::from_amplitudes(sigma, cavity_mode.then_some(C64::from(0.0)))
    }

    /// Pure single-excitation state with atomic amplitudes `sigma` and,
    /// when `field` is given, an explicit cavity mode with amplitude
    /// `field` on `|g,1⟩`.
    pub fn from_amplitudes(sigma: &CVector, field: Option<C64>) -> Result<Self> {
        let cavity_mode = field.is_some();
        let alpha = field.unwrap_or_default();
        let e: f64 = sigma.iter().map(|z| z.norm_sqr()).sum::<f64>() + alpha.norm_sqr();
        if e > 1.0 {
            return Err(Error::StrongExcitation(e.sqrt()));
        }
        let n = sigma.len();
        let d = Self::dim_for(n, cavity_mode);
        let mut psi = CVector::zeros(d);
        psi[0] = C64::from((1.0 - e).sqrt());
        psi.slice_mut(s![1..=n]).assign(sigma);
        if cavity_mode {
            psi[d - 1] = alpha;
        }
        Ok(Self::pure(&psi, n, cavity_mode))
    }

    /// One photon in the cavity, atoms in the ground state.
    pub fn single_photon(n_atoms: usize) -> Self {
        let d = Self::dim_for(n_atoms, true);
        let mut psi = CVector::zeros(d);
        psi[d - 1] = C64::from(1.0);
        Self::pure(&psi, n_atoms, true)
    }

    fn pure(psi: &CVector, n_atoms: usize, cavity_mode: bool) -> Self {
        let d = psi.len();
        let rho = CMatrix::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj());
        Self {
            rho,
            n_atoms,
            cavity_mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    /// Atomic excited-state population `e = Σ_j ρ_{e_j e_j}`.
    pub fn excitation(&self) -> f64 {
        (1..=self.n_atoms).map(|j| self.rho[[j, j]].re).sum()
    }

    pub fn photon_number(&self) -> f64 {
        if self.cavity_mode {
            let d = self.dim() - 1;
            self.rho[[d, d]].re
        } else {
            0.0
        }
    }

    /// `⟨σ_j⁻⟩` for every atom.
    pub fn coherences(&self) -> CVector {
        (1..=self.n_atoms).map(|j| self.rho[[j, 0]]).collect()
    }

    /// `⟨a⟩` of the explicit cavity mode.
    pub fn cavity_amplitude(&self) -> Option<C64> {
        self.cavity_mode.then(|| self.rho[[self.dim() - 1, 0]])
    }

    fn excited_block(&self) -> CMatrix {
        let n = self.n_atoms;
        self.rho.slice(s![1..=n, 1..=n]).to_owned()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.rho[[i, j]] - self.rho[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `Tr(A ρ_ee)`.
fn channel_rate(a: &CMatrix, block: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = C64::from(0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * block[[j, i]];
        }
    }
    acc.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded samples.
    pub record_every: usize,
}

impl TimeGrid {
    fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub excitation: Vec<f64>,
    pub r_c: Vec<f64>,
    pub r_f: Vec<f64>,
    /// Intrinsic and external cavity loss channels; zero for the
    /// eliminated model, where `r_c` carries their sum.
    pub r_kappa_i: Vec<f64>,
    pub r_kappa_e: Vec<f64>,
    pub photons: Vec<f64>,
    pub coherences: Vec<CVector>,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub final_state: Option<DensityMatrix>,
}

impl Trajectory {
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
}

/// Generator `dρ/dt = -i(H ρ - ρ H†) + |g⟩⟨g| Σ Tr(L ρ L†)`.
struct Generator {
    /// Non-Hermitian Hamiltonian.
    h: CMatrix,
    h_dag: CMatrix,
    n_atoms: usize,
    cavity_mode: bool,
    a_c: Option<CMatrix>,
    a_f: CMatrix,
    kappa_i: f64,
    kappa_e: f64,
}

impl Generator {
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.nrows();
        let mut out = (self.h.dot(rho) - rho.dot(&self.h_dag)).mapv(|z| -I * z);
        let n = self.n_atoms;
        let block = rho.slice(s![1..=n, 1..=n]).to_owned();
        let mut recycle = channel_rate(&self.a_f, &block);
        if let Some(a_c) = &self.a_c {
            recycle += channel_rate(a_c, &block);
        }
        if self.cavity_mode {
            recycle += (self.kappa_i + self.kappa_e) * rho[[d - 1, d - 1]].re;
        }
        out[[0, 0]] += recycle;
        out
    }

    fn infinity_norm(&self) -> f64 {
        self.h
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Default step `0.01 / max |H_ij|`.
    fn default_dt(&self) -> f64 {
        let m = self.h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        0.01 / m.max(1e-12)
    }

    fn record(&self, t: f64, state: &DensityMatrix, traj: &mut Trajectory) {
        let block = state.excited_block();
        let r_f = channel_rate(&self.a_f, &block);
        let photons = state.photon_number();
        let (r_c, ri, re) = match &self.a_c {
            Some(a_c) => (channel_rate(a_c, &block), 0.0, 0.0),
            None => {
                let (ri, re) = (self.kappa_i * photons, self.kappa_e * photons);
                (ri + re, ri, re)
            }
        };
        traj.times.push(t);
        traj.excitation.push(state.excitation());
        traj.r_c.push(r_c);
        traj.r_f.push(r_f);
        traj.r_kappa_i.push(ri);
        traj.r_kappa_e.push(re);
        traj.photons.push(photons);
        traj.coherences.push(state.coherences());
    }

    fn propagate(&self, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        let d = self.h.nrows();
        if rho0.dim() != d || rho0.n_atoms != self.n_atoms || rho0.cavity_mode != self.cavity_mode {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho0.dim(),
            });
        }
        if !(grid.dt > 0.0 && grid.t_end >= 0.0) || grid.record_every == 0 {
            return Err(Error::param("time grid", "dt must be positive and record_every at least 1"));
        }
        if grid.dt * self.infinity_norm() > STABILITY_LIMIT {
            return Err(Error::StepSize(grid.dt));
        }
        let mut state = rho0.clone();
        let tr0 = state.trace();
        let mut traj = Trajectory::default();
        self.record(0.0, &state, &mut traj);
        let dt = grid.dt;
        let steps = grid.steps();
        for step in 1..=steps {
            let r = &state.rho;
            let k1 = self.apply(r);
            let k2 = self.apply(&(r + &k1.mapv(|z| z * (dt / 2.0))));
            let k3 = self.apply(&(r + &k2.mapv(|z| z * (dt / 2.0))));
            let k4 = self.apply(&(r + &k3.mapv(|z| z * dt)));
            let inc = (k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt / 6.0));
            state.rho += &inc;
            let drift = (state.trace() - tr0).norm();
            traj.max_trace_drift = traj.max_trace_drift.max(drift);
            if drift > TRACE_DRIFT {
                return Err(Error::StepSize(dt));
            }
            if step % grid.record_every == 0 || step == steps {
                traj.max_hermiticity_error = traj.max_hermiticity_error.max(state.hermiticity_error());
                self.record(step as f64 * dt, &state, &mut traj);
            }
        }
        traj.final_state = Some(state);
        Ok(traj)
    }

    /// Stationary state from the null space of the Liouvillian, with the
    /// trace fixed to one.
    fn stationary(&self) -> Result<DensityMatrix> {
        let d = self.h.nrows();
        let dd = d * d;
        let mut l = CMatrix::zeros((dd, dd));
        for b in 0..d {
            for a in 0..d {
                let mut e = CMatrix::zeros((d, d));
                e[[a, b]] = C64::from(1.0);
                let col = self.apply(&e);
                for j in 0..d {
                    for i in 0..d {
                        l[[i + d * j, a + d * b]] = col[[i, j]];
                    }
                }
            }
        }
        let mut rhs = CVector::zeros(dd);
        for k in 0..dd {
            l[[0, k]] = C64::from(0.0);
        }
        for a in 0..d {
            l[[0, a + d * a]] = C64::from(1.0);
        }
        rhs[0] = C64::from(1.0);
        let v = l.solve(&rhs)?;
        let rho = CMatrix::from_shape_fn((d, d), |(i, j)| v[i + d * j]);
        Ok(DensityMatrix {
            rho,
            n_atoms: self.n_atoms,
            cavity_mode: self.cavity_mode,
        })
    }
}

fn hermitian_part(g: &CMatrix) -> CMatrix {
    let n = g.nrows();
    CMatrix::from_shape_fn((n, n), |(i, j)| (g[[i, j]] + g[[j, i]].conj()) / 2.0)
}

fn check_dims(cavity: &CavityMatrix, free: &FreeSpaceMatrix) -> Result<usize> {
    let n = free.dim();
    if cavity.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cavity.dim(),
        });
    }
    Ok(n)
}

fn eliminated_generator(
    cavity: &CavityMatrix,
    free: &FreeSpaceMatrix,
    delta_a: f64,
    drive: Option<&CVector>,
) -> Result<Generator> {
    let n = check_dims(cavity, free)?;
    let channels = EmissionChannels::new(cavity, free);
    // Hermitian part of G_c + G_f - Δ_A, then the dissipative part -i/2 Σ L†L.
    let mut g = &cavity.matrix + free.matrix();
    for j in 0..n {
        g[[j, j]] -= delta_a;
    }
    let herm = hermitian_part(&g);
    let total = channels.total();
    let mut h = CMatrix::zeros((n + 1, n + 1));
    h.slice_mut(s![1.., 1..]).assign(&(herm - total.mapv(|z| z * I / 2.0)));
    if let Some(om) = drive {
        if om.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: om.len(),
            });
        }
        for j in 0..n {
            h[[j + 1, 0]] = -om[j];
            h[[0, j + 1]] = -om[j].conj();
        }
    }
    Ok(Generator {
        h_dag: h.t().mapv(|z| z.conj()),
        h,
        n_atoms: n,
        cavity_mode: false,
        a_c: Some(channels.cavity),
        a_f: channels.free,
        kappa_i: 0.0,
        kappa_e: 0.0,
    })
}

fn full_generator(
    cavity: &CavityMatrix,
    params: &CavityParams,
    free: &FreeSpaceMatrix,
    delta_a: f64,
    eta: f64,
) -> Result<Generator> {
    let n = check_dims(cavity, free)?;
    let a_f = EmissionChannels::new(cavity, free).free;
    let d = n + 2;
    let c = d - 1;
    let mut h = CMatrix::zeros((d, d));
    let mut herm = hermitian_part(free.matrix());
    for j in 0..n {
        herm[[j, j]] -= delta_a;
    }
    h.slice_mut(s![1..=n, 1..=n]).assign(&(herm - a_f.mapv(|z| z * I / 2.0)));
    let kappa = params.kappa();
    h[[c, c]] = C64::new(-params.delta_c, -kappa / 2.0);
    for j in 0..n {
        let u = cavity.mode[j];
        h[[j + 1, c]] = u;
        h[[c, j + 1]] = u.conj();
    }
    h[[c, 0]] = C64::from(eta);
    h[[0, c]] = C64::from(eta);
    Ok(Generator {
        h_dag: h.t().mapv(|z| z.conj()),
        h,
        n_atoms: n,
        cavity_mode: true,
        a_c: None,
        a_f,
        kappa_i: params.kappa_i,
        kappa_e: params.kappa_e,
    })
}

/// Master equation with the cavity adiabatically eliminated. `drive` is the
/// atomic drive vector Ω; `None` propagates free decay.
pub fn propagate_eliminated(
    cavity: &CavityMatrix,
    free: &FreeSpaceMatrix,
    delta_a: f64,
    drive: Option<&CVector>,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    eliminated_generator(cavity, free, delta_a, drive)?.propagate(rho0, grid)
}

/// Master equation with an explicit single-photon cavity mode driven at
/// rate `eta` through the bus waveguide.
pub fn propagate_full_cavity(
    cavity: &CavityMatrix,
    params: &CavityParams,
    free: &FreeSpaceMatrix,
    delta_a: f64,
    eta: f64,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    full_generator(cavity, params, free, delta_a, eta)?.propagate(rho0, grid)
}

/// Step `0.01 / max |H_ij|` for the eliminated model.
pub fn default_step_eliminated(cavity: &CavityMatrix, free: &FreeSpaceMatrix, delta_a: f64) -> Result<f64> {
    Ok(eliminated_generator(cavity, free, delta_a, None)?.default_dt())
}

/// Step `0.01 / max |H_ij|` for the explicit-cavity model.
pub fn default_step_full(cavity: &CavityMatrix, params: &CavityParams, free: &FreeSpaceMatrix, delta_a: f64) -> Result<f64> {
    Ok(full_generator(cavity, params, free, delta_a, 0.0)?.default_dt())
}

/// Stationary state of the explicitly driven cavity model.
pub fn stationary_full_cavity(
    cavity: &CavityMatrix,
    params: &CavityParams,
    free: &FreeSpaceMatrix,
    delta_a: f64,
    eta: f64,
) -> Result<DensityMatrix> {
    full_generator(cavity, params, free, delta_a, eta)?.stationary()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eigen_vs_eliminated: f64,
    pub eliminated_vs_full: f64,
    pub cavity_field: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigen_vs_eliminated: 1e-6,
            eliminated_vs_full: 0.03,
            cavity_field: 0.01,
        }
    }
}

/// Largest deviation on each observable, relative to the reference
/// trajectory's maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Deviation {
    pub excitation: f64,
    pub r_c: f64,
    pub r_f: f64,
}

impl Deviation {
    pub fn max(&self) -> f64 {
        self.excitation.max(self.r_c).max(self.r_f)
    }
}

/// `max_k |a_k - b_k| / max_k |b_k|` over samples with `t ≥ t_min`.
pub fn relative_deviation(times: &[f64], a: &[f64], b: &[f64], t_min: f64) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let worst = times
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(t, _)| **t >= t_min)
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

fn deviation(a: &Trajectory, b: &Trajectory, t_min: f64) -> Deviation {
    Deviation {
        excitation: relative_deviation(&b.times, &a.excitation, &b.excitation, t_min),
        r_c: relative_deviation(&b.times, &a.r_c, &b.r_c, t_min),
        r_f: relative_deviation(&b.times, &a.r_f, &b.r_f, t_min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_atoms: usize,
    pub t_end: f64,
    pub eigen_vs_eliminated: Deviation,
    /// Over `t ≥ 5/κ`.
    pub eliminated_vs_full: Deviation,
    /// Same comparison with `κ_i`, `κ_e` scaled ×10 at fixed cooperativity.
    pub eliminated_vs_full_fast: Deviation,
    /// `|⟨a⟩_full - ⟨a⟩_eliminated| / |⟨a⟩_eliminated|` in the weakly driven
    /// stationary state.
    pub cavity_field: f64,
    pub tolerances: Tolerances,
    pub eigen_pass: bool,
    pub full_pass: bool,
    pub adiabatic_pass: bool,
    pub field_pass: bool,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.eigen_pass && self.full_pass && self.adiabatic_pass && self.field_pass
    }
}

fn sample_every(dt: f64, interval: f64) -> usize {
    ((interval / dt).round() as usize).max(1)
}

/// Cross-checks the eigenmode solution, the eliminated master equation
/// and the explicit-cavity master equation on one configuration, starting
/// from the timed-Dicke state.
pub fn compare_models(
    config: &AtomConfig,
    params: &CavityParams,
    coupling: CouplingMode,
    t_end: f64,
    tolerances: Tolerances,
) -> Result<ComparisonReport> {
    let n = config.len();
    if n == 0 || n > MAX_ORACLE_ATOMS {
        return Err(Error::param("n_atoms", format!("oracle comparison needs 1 to {MAX_ORACLE_ATOMS} atoms")));
    }
    let cavity = build_cavity_matrix(config, params, coupling)?;
    let free = build_free_matrix(config)?;
    let delta_a = params.delta_c;
    let m = build_coupling(delta_a, &cavity, &free)?;
    let eig = eigendecompose(&m)?;
    let channels = EmissionChannels::new(&cavity, &free);
    let state = weights_tds(&eig, &cavity.drive(params.eta), DEFAULT_TDS_AMPLITUDE)?;
    let record_interval = t_end / 200.0;

    let dt_el = default_step_eliminated(&cavity, &free, delta_a)?;
    let grid_el = TimeGrid {
        dt: dt_el,
        t_end,
        record_every: sample_every(dt_el, record_interval),
    };
    let rho0 = DensityMatrix::from_coherences(&state.sigma, false)?;
    let eliminated = propagate_eliminated(&cavity, &free, delta_a, None, &rho0, &grid_el)?;

    let mut fast_path = Trajectory::default();
    for &t in &eliminated.times {
        let s = evolve(&eig, &state.weights, t);
        let (rc, rf) = emission_rates(&s, &channels)?;
        fast_path.times.push(t);
        fast_path.excitation.push(s.iter().map(|z| z.norm_sqr()).sum());
        fast_path.r_c.push(rc);
        fast_path.r_f.push(rf);
    }
    let eigen_vs_eliminated = deviation(&fast_path, &eliminated, 0.0);

    // The explicit mode starts at its adiabatic value u†σ/κ̃, so both models
    // begin on the same slow manifold.
    let full_run = |p: &CavityParams| -> Result<Trajectory> {
        let cav = build_cavity_matrix(config, p, coupling)?;
        let field = cavity_field(&state.sigma, &cav, 0.0)?;
        let rho0_full = DensityMatrix::from_amplitudes(&state.sigma, Some(field))?;
        let dt = default_step_full(&cav, p, &free, delta_a)?;
        let grid = TimeGrid {
            dt,
            t_end,
            record_every: sample_every(dt, record_interval),
        };
        propagate_full_cavity(&cav, p, &free, delta_a, 0.0, &rho0_full, &grid)
    };
    let t_settle = 5.0 / params.kappa();
    let full = full_run(params)?;
    let eliminated_vs_full = deviation(&full, &eliminated_on(&full, &eig, &state.weights, &channels)?, t_settle);
    let mut fast = params.clone();
    fast.kappa_i *= 10.0;
    fast.kappa_e *= 10.0;
    let full_fast = full_run(&fast)?;
    let eliminated_vs_full_fast = deviation(
        &full_fast,
        &eliminated_on(&full_fast, &eig, &state.weights, &channels)?,
        t_settle,
    );

    let field = driven_field_deviation(&cavity, params, &free, delta_a)?;
    Ok(ComparisonReport {
        n_atoms: n,
        t_end,
        eigen_pass: eigen_vs_eliminated.max() <= tolerances.eigen_vs_eliminated,
        full_pass: eliminated_vs_full.max() <= tolerances.eliminated_vs_full,
        adiabatic_pass: eliminated_vs_full_fast.max() < eliminated_vs_full.max(),
        field_pass: field <= tolerances.cavity_field,
        eigen_vs_eliminated,
        eliminated_vs_full,
        eliminated_vs_full_fast,
        cavity_field: field,
        tolerances,
    })
}

/// The eliminated prediction sampled on another trajectory's time grid,
/// evaluated through the eigenmode solution that matches it to RK4
/// accuracy.
fn eliminated_on(
    reference: &Trajectory,
    eig: &crate::dynamics::EigenSystem,
    weights: &CVector,
    channels: &EmissionChannels,
) -> Result<Trajectory> {
    let mut out = Trajectory::default();
    for &t in &reference.times {
        let s = evolve(eig, weights, t);
        let (rc, rf) = emission_rates(&s, channels)?;
        out.times.push(t);
        out.excitation.push(s.iter().map(|z| z.norm_sqr()).sum());
        out.r_c.push(rc);
        out.r_f.push(rf);
    }
    Ok(out)
}

/// Drive weak enough that saturation corrections stay far below the
/// comparison tolerance: the empty-cavity field and every atomic Rabi
/// amplitude are at most `1e-4`.
fn weak_eta(cavity: &CavityMatrix) -> Result<f64> {
    let empty = cavity_field(&CVector::zeros(cavity.dim()), cavity, 1.0)?.norm();
    let rabi = cavity.drive(1.0).iter().map(|w| w.norm()).fold(0.0, f64::max);
    let scale = empty.max(rabi);
    Ok(if scale > 0.0 { 1e-4 / scale } else { 1e-4 })
}

fn driven_field_deviation(cavity: &CavityMatrix, params: &CavityParams, free: &FreeSpaceMatrix, delta_a: f64) -> Result<f64> {
    let eta = weak_eta(cavity)?;
    let m = build_coupling(delta_a, cavity, free)?;
    let sigma = steady_state_direct(&m, &cavity.drive(eta))?;
    let expected = cavity_field(&sigma, cavity, eta)?;
    let stationary = stationary_full_cavity(cavity, params, free, delta_a, eta)?;
    let got = stationary.cavity_amplitude().expect("explicit cavity mode");
    Ok((got - expected).norm() / expected.norm())
}
