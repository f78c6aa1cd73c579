//! Explicit vectors in the selfadjoint subspace of one-speed transport operators,
//! the transforms they are built with, and finite-dimensional checks.

pub mod corpus;
pub mod error;
pub mod gap;
pub mod hardy;
pub mod model;
pub mod oplab;
pub mod quad;
pub mod sphere;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{
    eval_gap_coefficient, strip_norm, weighted_norm, AngleGrid, AngularFactor, Channel, Coefficient, CollisionKernel,
    Envelope, GapLatticeCoefficient, Grid1D, Hat, Rep, SpectralDensity, StripFunction, TestFunctionFamily, Weight,
};
pub use num_complex::Complex64 as C64;
