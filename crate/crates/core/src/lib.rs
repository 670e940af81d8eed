//! Comparison geometry under quadratic curvature decay: decay profiles,
//! comparison ODEs, rotationally symmetric models, and checks of the
//! comparison estimates and the isoperimetric and Sobolev inequalities.

// Negated comparisons are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abp;
pub mod comparison;
pub mod error;
pub mod inequality;
pub mod model;
pub mod ode;
pub mod profiles;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use inequality::RadialTestFunction;
pub use model::ModelManifold;
pub use profiles::{CurvatureProfile, ProfileKind};
pub use report::{Status, VerificationReport};
