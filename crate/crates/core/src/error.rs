use thiserror::Error;

#[derive(Debug, Error)]
pub enum MargitronError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("missing required input `{0}`")]
    MissingInput(&'static str),

    #[error("pattern index {index} out of range for {n} patterns")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("weight vector is zero, no direction is defined")]
    ZeroWeight,

    #[error("instance too large for the margin oracle: {0}")]
    OracleLimit(String),

    #[error("stage {stage} of the protocol did not converge within {epochs} full epochs")]
    ProtocolNotConverged { stage: u8, epochs: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MargitronError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, msg: impl Into<String>) -> MargitronError {
    MargitronError::InvalidParameter {
        name,
        msg: msg.into(),
    }
}
