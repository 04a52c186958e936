//! Normal forms of real hypersurfaces at umbilical points: series algebra,
//! the hyperquadric automorphism group, normalization, isotropy, chains and
//! the determinant lemmas behind the umbilical analysis.

pub mod chains;
pub mod error;
pub mod exec;
pub mod group;
pub mod io;
pub mod isotropy;
pub mod lemmas;
pub mod linalg;
pub mod normal;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
