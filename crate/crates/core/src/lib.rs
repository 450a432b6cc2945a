pub mod error;
pub mod experiment;
pub mod multiindex;
pub mod meanfield;
pub mod model;
pub mod noise;
pub mod schemes;
mod quadrature;
pub mod stats;

pub use error::{Error, Result};
