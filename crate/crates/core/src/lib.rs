pub mod charspec;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod gf2rank;
pub mod kloosterman;
pub mod planar;

pub use error::{Error, Result};
