//! Direct solver for the phase-compensated moment equations in one
//! transverse dimension, the gaussian approximation built from
//! single-pair solution operators, and numerical checks of the
//! oscillatory-integral bounds.

mod bounds;
mod couplings;
mod measure;
mod solver;

pub use bounds::{bound_check_linear, bound_check_quadratic, BoundRow};
pub use couplings::{build_couplings, Coupling, CouplingMatrices};
pub use measure::{GridMeasure, MAX_MEASURE_NODES};
pub use solver::{
    error_norm, evolve_full, evolve_gaussian, ErrorReport, Evolution, MomentSolver, LEAK_LIMIT, MAX_SOLVER_ORDER,
    STIFFNESS_LIMIT,
};
