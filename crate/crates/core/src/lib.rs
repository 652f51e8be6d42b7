//! Isogeometric topology optimization on structured quadratic B-spline
//! meshes. Element stiffness matrices are obtained from a single Bernstein
//! element through Bézier extraction, `K_e = E_e · C_e K⁰ C_eᵀ`, and the
//! design is updated by SIMP with a sensitivity filter and optimality
//! criteria.

pub mod assembly;
pub mod element;
pub mod error;
pub mod io;
pub mod mesh;
pub mod optimize;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod splines;

pub use assembly::{Displacements, ElementStiffnessCache, StaticProblem, SymmetricCsc};
pub use element::{BezierStiffness, ConstitutiveModel, ShearModulus};
pub use error::{IgaError, Result};
pub use mesh::{BoundaryCase, ConnectivityTables, IgaMesh};
pub use optimize::{
    run_optimization, DensityField, IterationRecord, OptimizationConfig, OptimizationResult,
};
pub use splines::{ElementClass, ExtractionOperatorSet, KnotVector};
