//! Analytic first and second moments, their scaling limits, and the
//! anomalous mean-intensity diffusion.

mod diffusion;
mod first;
mod limits;
mod second;

pub use diffusion::{green_g, negative_definite, solve_i2, DiffusionField};
pub use first::{mean_field, mean_field_physical};
pub use limits::{
    kinetic_cross_term, m11_limit_diffusive, m11_limit_diffusive_grid, m11_limit_kinetic,
    m11_limit_kinetic_grid, BetaCase, DiffusiveGrid, DiffusiveValue,
};
pub use second::{centered_second_moment, second_moment, second_moment_physical, MomentQuery};
