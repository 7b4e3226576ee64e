use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix has numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("representative is not orthonormal (max |XᵀX − I| = {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("shortest geodesic is not unique (largest principal angle {max_angle})")]
    NotUnique { max_angle: f64 },

    #[error("ambient dimension {m} too small to place {r} complement directions (need m − r ≥ r)")]
    InsufficientDim { m: usize, r: usize },

    #[error("gradient is below tolerance but angle {angle} is not near 0 or π/2")]
    AmbiguousCritical { angle: f64 },

    #[error("point is not a saddle: no principal angle near π/2")]
    NotASaddle,

    #[error("{which} point lies outside the cap of radius {phi}")]
    OutsideCap { which: &'static str, phi: f64 },

    #[error("inner least squares is rank deficient in column {column}")]
    Degenerate { column: usize },

    #[error("iteration {iter}: inner least squares is rank deficient in column {column}")]
    DegenerateAt { iter: usize, column: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
