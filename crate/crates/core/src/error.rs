use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid channel set: {0}")]
    InvalidChannels(String),

    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),

    #[error("invalid parametrization: {0}")]
    InvalidParametrization(String),

    #[error("Jost matrix is singular at E = {energy} (condition estimate {condition:e})")]
    SingularJost { energy: f64, condition: f64 },

    #[error("S-matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("S-matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("eigenphase decomposition needs exactly 2 open channels, got {0}")]
    NotTwoChannel(usize),

    #[error("factorization solution is singular near r = {radius}")]
    SingularSigma { radius: f64 },

    #[error("matrix Y(r) is singular near r = {radius}")]
    SingularY { radius: f64 },

    #[error("symmetry condition D2^T C2 - C2^T D2 = 0 violated (defect {defect:e})")]
    SymmetryViolated { defect: f64 },

    #[error("block D22 of the canonical form is singular")]
    SingularD22,

    #[error("no invertible R x R pivot block found for rank {rank}")]
    RankDeficientPivot { rank: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("det[U(0) + kappa] vanishes (rank drops below 2); use the rank-1 canonical form")]
    RankDrop,

    #[error("integration unstable at r = {radius} (norm {norm:e})")]
    StepUnstable { radius: f64, norm: f64 },

    #[error("asymptotic matching ill-conditioned (condition estimate {condition:e})")]
    IllConditionedMatch { condition: f64 },
}
