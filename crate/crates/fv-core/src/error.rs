//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("cell {cell} references missing vertex {vertex}")]
    MissingVertex { cell: usize, vertex: usize },
    #[error("cell {cell} is not a counter-clockwise simple polygon")]
    NotCcw { cell: usize },
    #[error("cell {cell} needs an explicit center (not a triangle or axis-aligned rectangle)")]
    MissingCenter { cell: usize },
    #[error("edge shared by more than two cells (vertices {v0}-{v1})")]
    NonManifoldEdge { v0: usize, v1: usize },
    #[error("inadmissible mesh: cell {cell}: {reason}")]
    Inadmissible { cell: usize, reason: String },
    #[error("mesh file parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("mesh file field error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DiscreteError {
    #[error("field does not belong to this mesh")]
    MeshMismatch,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("coercivity failure: alpha = {value} at {location}")]
    Coercivity { value: f64, location: String },
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("tensor asymmetric at cell {cell}: |off-diagonal gap| = {gap}")]
    AsymmetricTensor { cell: usize, gap: f64 },
    #[error("coercivity violation at cell {cell}: alpha = {alpha} but min eigenvalue = {eig}")]
    Coercivity { cell: usize, alpha: f64, eig: f64 },
    #[error("inadmissible mesh geometry at cell {cell}: {reason}")]
    InadmissibleMesh { cell: usize, reason: String },
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("solver breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },
    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dense solve guard: {n} unknowns exceeds limit {limit}")]
    TooLarge { n: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("manufactured solution fails its residual gate at {point:?}: residual = {residual}")]
    ResidualGate { point: [f64; 2], residual: f64 },
    #[error("regression needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
}
