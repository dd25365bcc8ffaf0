use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot place {requested} orthonormal directions in a space of dimension {available}")]
    SubspaceTooSmall { requested: usize, available: usize },

    #[error("degenerate vector: {0}")]
    DegenerateVector(&'static str),

    #[error("degenerate objective: {0}")]
    DegenerateObjective(&'static str),

    /// The objective returned NaN or an infinity. `point` is the perturbed
    /// parameter vector that was evaluated.
    #[error("objective returned non-finite value {value} (|point| = {})", point.len())]
    Evaluation { value: f64, point: Vec<f64> },

    #[error("orthonormal sampling stayed degenerate after {0} redraws")]
    SamplingFailed(usize),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("label {label} at index {index} is outside [0, {num_classes})")]
    LabelOutOfRange { index: usize, label: usize, num_classes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
