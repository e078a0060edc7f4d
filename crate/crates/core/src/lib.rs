pub mod bounds;
pub mod cbc;
pub mod error;
pub mod formats;
pub mod gf_poly;
pub mod integrands;
pub mod pointgen;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
