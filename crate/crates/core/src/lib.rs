//! Collective photon emission of two-level atoms coupled to free-space vacuum
//! modes and a microring whispering-gallery-mode cavity.
//!
//! All internal quantities are dimensionless: rates are in units of the
//! single-atom free-space decay rate and lengths in units of the resonant
//! wavelength. The dynamics are restricted to the single-excitation,
//! weak-drive limit where the atomic coherences obey a linear equation
//! `dσ/dt = iMσ + iΩ`.

pub mod cavity;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod free_space;
pub mod geometry;
pub mod oracle;
pub mod output;
pub mod units;

pub use error::{Error, Result};
pub use units::{C64, CMatrix, CVector};
