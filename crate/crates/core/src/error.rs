use thiserror::Error;

use crate::solver::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("label `{0}` appears in both operands")]
    LabelCollision(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("{0:?} is not a permutation of the layout labels")]
    NotPermutation(Vec<String>),

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter `{name}` = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("not a valid channel: {0}")]
    NotCptp(String),

    #[error("malformed problem: {0}")]
    MalformedProblem(String),

    #[error("solver finished with status {status} while computing {quantity}")]
    Solver {
        status: SolveStatus,
        quantity: String,
    },

    #[error("{location}: {message}")]
    ChannelFile { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
