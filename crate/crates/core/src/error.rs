use thiserror::Error;

/// Position inside a QASM source, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {span}: {msg}")]
    Syntax { span: Span, msg: String },

    #[error("unsupported gate `{name}` at {span}")]
    UnsupportedGate { name: String, span: Span },

    #[error("operand out of range: {0}")]
    OperandOutOfRange(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("routing failed: {0}")]
    Routing(String),

    #[error("benchmark: {0}")]
    Benchmark(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("missing calibration for {0}")]
    MissingCalibration(String),

    #[error("entanglement: {0}")]
    Entanglement(String),

    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("weight model: {0}")]
    WeightModel(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
