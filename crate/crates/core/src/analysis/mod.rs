//! Oscillations, polynomial projections, maximal functions, Calderón–Zygmund
//! decompositions, truncations and weak norms on grid functions.

mod cz;
mod maximal;
mod norms;
pub mod poly;

pub use cz::{cz_decompose, CzDecomposition};
pub use maximal::{dyadic_maximal, dyadic_pool, mean_residual, sharp_maximal};
pub use norms::{
    normalized_lq, optimal_delta_oscillation, oscillation, restricted, telescope, truncate, truncate_level,
    weak_norm, weak_norm_values, Center, Truncation,
};
pub use poly::{project_polynomial, PolyProjection, ProjectionBasis};
