//! Cell-centered finite volume solver for anisotropic diffusion problems
//! `-div(Lambda grad u) = f` with Dirichlet boundary conditions on
//! unstructured meshes satisfying the two-point orthogonality condition.
//!
//! The pieces, bottom up:
//! - [`mesh`]: admissible discretizations, generators, validation, file I/O;
//! - [`discrete`]: piecewise-constant fields, the edge bilinear form, and a
//!   per-cell gradient reconstructed from edge differences;
//! - [`assembly`]: the sparse SPD system combining the two-point part with
//!   the gradient part of the full diffusion tensor, plus conservative edge
//!   fluxes;
//! - [`linsolve`]: preconditioned conjugate gradient and a dense oracle;
//! - [`verify`]: manufactured-solution cases, convergence studies, the
//!   alpha sweep, and the mesh/field property suite.

pub mod assembly;
pub mod discrete;
pub mod error;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod verify;

pub use error::{AssemblyError, DiscreteError, MeshError, SolveError, VerifyError};
