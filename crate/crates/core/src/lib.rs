//! Numerical verification engine for Chen-type real hypersurfaces of the
//! quaternionic space forms ℍP^m(4) and ℍH^m(-4).
//!
//! Model hypersurfaces are built from explicit lifts to the quadric
//! `Ψ_c(z, z) = c`, mapped into quaternion-Hermitian matrices by the projector
//! embedding `Φ`, and probed with an independent finite-difference
//! Laplace–Beltrami operator. Closed-form Laplacians, Chen-type coefficients,
//! special radii and spectral decompositions are checked against it.

pub mod chen;
pub mod embedding;
pub mod error;
pub mod hypersurface;
pub mod laplace;
pub mod quaternion;
pub mod sampling;

pub use chen::{
    ClassificationAtlas, ConditionReport, SpecialRadius, SpectralDecomposition, TypeCoefficients,
};
pub use embedding::{CanonicalTriple, HorizontalVector, SpaceFormPoint};
pub use error::{Error, Result};
pub use hypersurface::{Chart, CurvatureScalars, Family, FamilySpec, ShapeFrame};
pub use laplace::{FdConfig, MetricPatch};
pub use quaternion::{FormSignature, QMatrix, QVector, Quaternion};
