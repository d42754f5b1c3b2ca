pub mod error;
pub mod fractional;
pub mod grid;
pub mod levy;
pub mod montecarlo;
pub mod quadrature;
pub mod stable;
pub mod subordination;
pub mod verify;

pub use error::{Error, Result};
