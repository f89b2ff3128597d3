//! Maslov-type indices of symplectic and Lagrangian paths, computed both by
//! crossing forms and by spectral winding numbers, and their application to
//! symmetric Reeb dynamics on starshaped hypersurfaces in C^2.

pub mod error;
pub mod linalg;
pub mod maslov;
pub mod ode;
pub mod par;
pub mod paths;
pub mod reeb;
pub mod section;
pub mod spectral;
pub mod suite;
#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, ErrorClass, Result};
pub use linalg::HalfInt;
