//! Atom position generators: Gaussian clouds and line/ring arrays.
//!
//! Coordinates are in units of λ0. The waveguide runs along `y` for clouds
//! and line arrays, `z` is the height above the resonator surface, and `x`
//! is the quantization axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest allowed height above the dielectric; cloud and array samples
/// below it are redrawn.
pub const Z_MIN: f64 = 0.05;

/// Upper bound on sites visited while growing a partially filled array.
pub const MAX_ARRAY_SITES: usize = 1_000_000;

pub type Position = [f64; 3];

/// Shape of the guided mode the atoms couple to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Waveguide {
    /// Locally straight waveguide along `y`.
    Straight,
    /// Closed resonator of the given circumference following the atoms.
    Ring { circumference: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfig {
    pub geometry_tag: String,
    pub positions: Vec<Position>,
    /// Coordinate of each atom along the guided mode (`y` or arc length).
    pub path: Vec<f64>,
    pub waveguide: Waveguide,
}

impl AtomConfig {
    pub fn new(geometry_tag: impl Into<String>, positions: Vec<Position>) -> Result<Self> {
        let path = positions.iter().map(|p| p[1]).collect();
        let cfg = Self {
            geometry_tag: geometry_tag.into(),
            positions,
            path,
            waveguide: Waveguide::Straight,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter().map(|p| p[2])
    }

    pub fn validate(&self) -> Result<()> {
        if self.path.len() != self.positions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positions.len(),
                found: self.path.len(),
            });
        }
        for p in &self.positions {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::param("positions", "non-finite coordinate"));
            }
            if p[2] <= 0.0 {
                return Err(Error::param("positions", format!("z = {} is not above the surface", p[2])));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudParams {
    pub n_atoms: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub z_mean: f64,
    /// Treat `n_atoms` as the mean of a Poisson distribution.
    #[serde(default)]
    pub poisson_n: bool,
}

impl CloudParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(Error::param("n_atoms", "must be at least 1"));
        }
        for (name, s) in [
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("sigma_z", self.sigma_z),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParameter {
                    field: name,
                    reason: "r.m.s. width must be non-negative".into(),
                });
            }
        }
        if !(self.z_mean.is_finite() && self.z_mean > 0.0) {
            return Err(Error::param("z_mean", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayShape {
    Line,
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayParams {
    pub n_sites: usize,
    pub spacing: f64,
    pub z_height: f64,
    #[serde(default = "one")]
    pub filling_fraction: f64,
    #[serde(default)]
    pub delta_z: f64,
    pub shape: ArrayShape,
    /// Grow the array site by site until this many atoms are placed.
    #[serde(default)]
    pub target_atoms: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl ArrayParams {
    pub fn perfect(shape: ArrayShape, n_sites: usize, spacing: f64, z_height: f64) -> Self {
        Self {
            n_sites,
            spacing,
            z_height,
            filling_fraction: 1.0,
            delta_z: 0.0,
            shape,
            target_atoms: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::param("spacing", "spacing must be positive"));
        }
        if !(self.filling_fraction > 0.0 && self.filling_fraction <= 1.0) {
            return Err(Error::param("filling_fraction", "must lie in (0, 1]"));
        }
        if !(self.delta_z.is_finite() && self.delta_z >= 0.0) {
            return Err(Error::param("delta_z", "must be non-negative"));
        }
        if !(self.z_height.is_finite() && self.z_height > 0.0) {
            return Err(Error::param("z_height", "must be positive"));
        }
        if self.target_atoms.is_none() && self.n_sites == 0 {
            return Err(Error::param("n_sites", "must be at least 1"));
        }
        if self.target_atoms == Some(0) {
            return Err(Error::param("target_atoms", "must be at least 1"));
        }
        Ok(())
    }
}

/// Draws from `N(mean, sigma)` restricted to `z > Z_MIN`.
fn truncated_height<R: Rng>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    let dist = Normal::new(mean, sigma).expect("finite sigma");
    loop {
        let z = dist.sample(rng);
        if z > Z_MIN {
            return z;
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    }
}

pub fn sample_cloud_with<R: Rng>(params: &CloudParams, rng: &mut R) -> Result<AtomConfig> {
    params.validate()?;
    let n = if params.poisson_n {
        let dist = Poisson::new(params.n_atoms as f64).map_err(|e| Error::param("n_atoms", e.to_string()))?;
        loop {
            let k = dist.sample(rng) as usize;
            if k >= 1 {
                break k;
            }
        }
    } else {
        params.n_atoms
    };
    let positions = (0..n)
        .map(|_| {
            let x = gaussian(rng, params.sigma_x);
            let y = gaussian(rng, params.sigma_y);
            let z = truncated_height(rng, params.z_mean, params.sigma_z);
            [x, y, z]
        })
        .collect();
    AtomConfig::new("cloud", positions)
}

pub fn sample_cloud(params: &CloudParams, seed: u64) -> Result<AtomConfig> {
    sample_cloud_with(params, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Lattice site indices that receive an atom.
fn occupied_sites<R: Rng>(params: &ArrayParams, rng: &mut R) -> Result<(Vec<usize>, usize)> {
    let fill = params.filling_fraction;
    match params.target_atoms {
        Some(target) => {
            let mut sites = Vec::with_capacity(target);
            let mut site = 0;
            while sites.len() < target {
                if site >= MAX_ARRAY_SITES {
                    return Err(Error::GenerationFailure(format!(
                        "placed {} of {target} atoms within {MAX_ARRAY_SITES} sites",
                        sites.len()
                    )));
                }
                if fill >= 1.0 || rng.random::<f64>() < fill {
                    sites.push(site);
                }
                site += 1;
            }
            Ok((sites, site))
        }
        None => {
            let sites: Vec<usize> = (0..params.n_sites)
                .filter(|_| fill >= 1.0 || rng.random::<f64>() < fill)
                .collect();
            if sites.is_empty() {
                return Err(Error::GenerationFailure("no site was occupied".into()));
            }
            Ok((sites, params.n_sites))
        }
    }
}

pub fn build_array_with<R: Rng>(params: &ArrayParams, rng: &mut R) -> Result<AtomConfig> {
    params.validate()?;
    let (sites, n_sites) = occupied_sites(params, rng)?;
    let d = params.spacing;
    let mut positions = Vec::with_capacity(sites.len());
    let mut path = Vec::with_capacity(sites.len());
    let circumference = n_sites as f64 * d;
    let radius = circumference / std::f64::consts::TAU;
    for &m in &sites {
        let s = m as f64 * d;
        let z = truncated_height(rng, params.z_height, params.delta_z);
        let pos = match params.shape {
            ArrayShape::Line => [0.0, s, z],
            ArrayShape::Ring => {
                let angle = s / radius;
                [radius * angle.cos(), radius * angle.sin(), z]
            }
        };
        positions.push(pos);
        path.push(s);
    }
    let (tag, waveguide) = match params.shape {
        ArrayShape::Line => ("line", Waveguide::Straight),
        ArrayShape::Ring => ("ring", Waveguide::Ring { circumference }),
    };
    let cfg = AtomConfig {
        geometry_tag: tag.into(),
        positions,
        path,
        waveguide,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn build_array(params: &ArrayParams, seed: u64) -> Result<AtomConfig> {
    build_array_with(params, &mut ChaCha8Rng::seed_from_u64(seed))
}
