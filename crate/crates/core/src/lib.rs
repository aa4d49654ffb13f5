//! Monte Carlo simulation and moment verification for the Ito-Schrodinger
//! paraxial wave model.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`], [`covariance`], [`regime`], [`beam`]: the medium, the
//!   scaling and the incident field.
//! - [`propagator`]: split-step spectral propagation over gaussian phase
//!   screens and a deterministic parallel ensemble runner.
//! - [`moments`]: closed-form and quadrature first and second moments and
//!   their kinetic and diffusive limits.
//! - [`gaussianity`]: pairing combinatorics, gaussian moment functionals
//!   and a statistical test battery for fully developed speckle.
//! - [`moment_pde`]: a direct solver for the phase-compensated moment
//!   equations on discrete dual grids.
//! - [`config`] and [`io`]: run configuration and artifact persistence.

pub mod beam;
pub mod config;
pub mod covariance;
pub mod error;
pub mod fft;
pub mod field;
pub mod gaussianity;
pub mod grid;
pub mod io;
pub mod moment_pde;
pub mod moments;
pub mod quadrature;
pub mod propagator;
pub mod regime;
pub mod stats;

pub use beam::{eval_beam, BeamComponent, BeamSpec, Frame};
pub use config::{ExperimentKind, RunConfig};
pub use covariance::{q_kernel, validate_hypothesis, CovarianceKind, CovarianceModel, ValidationReport};
pub use error::{Error, Result};
pub use field::WaveField;
pub use grid::TransverseGrid;
pub use regime::{Regime, RegimeScaling};
