pub mod eisenstein;
pub mod error;
pub mod green;
pub mod halfplane;
pub mod quad;
pub mod relzeta;
pub mod specfun;
pub mod traceform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version string embedded in exported artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
