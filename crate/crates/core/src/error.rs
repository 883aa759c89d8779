use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("closest-point projection failed at ({}, {}, {})", .point[0], .point[1], .point[2])]
    Projection { point: [f64; 3] },

    #[error("vector is not tangent to the surface (normal component {normal_component:e})")]
    NotTangent { normal_component: f64 },

    #[error("degenerate tangent frame at boundary vertex {0}")]
    DegenerateFrame(usize),

    #[error("map violates the boundary constraint at vertex {vertex} (level value {value:e})")]
    BoundaryConstraint { vertex: usize, value: f64 },

    #[error("barrier is not admissible: {0}")]
    Barrier(String),

    #[error("homotopy path: {0}")]
    Path(String),

    #[error("bead spacing {spacing:.4} exceeds cap {cap:.4} between beads {index} and {}", .index + 1)]
    BeadSpacing { index: usize, spacing: f64, cap: f64 },

    #[error("sweepout has degree {ratio:.3} instead of 1")]
    Degree { ratio: f64 },

    #[error("matrix is singular or not positive definite at pivot {0}")]
    Singular(usize),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("{0} of triangles are branch points (limit 10%)")]
    Branching(f64),

    #[error("solver failed: {reason}")]
    Solve {
        reason: String,
        report: Box<crate::solver::SolveReport>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
