use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("connection is not flat (residual {residual:e})")]
    NotFlat { residual: f64 },
    #[error("degenerate face at ({j}, {k})")]
    DegenerateFace { j: i32, k: i32 },
    #[error("zero edge on face ({j}, {k})")]
    ZeroEdge { j: i32, k: i32 },
    #[error("edge differences of x and n are not parallel (residual {residual:e})")]
    NotPrincipal { residual: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("elliptic modulus out of range: {0}")]
    ModulusOutOfRange(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("degenerate edge at j = {j}")]
    DegenerateEdge { j: i32 },
    #[error("no admissible branch: {0}")]
    BranchFailure(String),
    #[error("kappa = {kappa} is outside the range of case {case}")]
    CaseMismatch { case: u8, kappa: f64 },
    #[error("repeated eigenvalue")]
    RepeatedEigenvalue,
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("Moebius pole hit (|denominator| = {denom:e})")]
    PoleHit { denom: f64 },
    #[error("propagation is path dependent (residual {residual:e})")]
    PathInconsistent { residual: f64 },
    #[error("degenerate delta data on edge {0}")]
    DegenerateDelta(i32),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("net leaves R^3 x S^2 (imaginary residue {residual:e})")]
    RealityViolated { residual: f64 },
    #[error("connection is not invariant along the rotation (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
