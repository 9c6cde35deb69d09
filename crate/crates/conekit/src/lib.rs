//! conekit: exact-first computation of tangent and normal cones, constraint
//! qualification checks for finite and countable set systems, and
//! certificate-producing optimality checkers for semi-infinite and
//! multiobjective programs.

pub mod atom;
pub mod certify;
pub mod chip;
pub mod cone;
pub mod error;
pub mod family;
pub mod indexpoly;
pub mod instance;
pub mod polyhedron;
pub mod qualconds;
pub mod registry;
pub mod report;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod setexpr;
pub mod simplex;
pub mod varcalc;

pub use cone::{ConeRep, ConvexPolyCone};
pub use error::{ConeError, Result};
pub use linalg::{FVec, Matrix, QMat, QVec, Vector};
pub use scalar::{Rat, Scalar};
