pub mod analysis;
pub mod beta_binomial;
pub mod bn_coeffs;
pub mod ergodic;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod operators;
pub mod table;

pub use error::{Error, Result};
