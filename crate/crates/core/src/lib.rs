pub mod analysis;
pub mod conditions;
pub mod error;
pub mod expr;
pub mod functionals;
pub mod grid;
pub mod report;
pub mod sum;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
