pub mod bessel;
pub mod conditions;
pub mod diagnostics;
pub mod error;
pub mod gelfand_robbin;
pub mod halfint;
pub mod jet;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod radial;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use halfint::HalfInt;
