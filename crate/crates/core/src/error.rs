use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid hyperparameter `{name}`: {reason}")]
    InvalidHyperParam { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dictionary is the zero matrix")]
    ZeroDictionary,

    #[error(
        "degenerate background reconstruction (‖q‖² = {q_norm_sq:e}){}",
        location_suffix(.bag, .instance)
    )]
    DegenerateBackground {
        q_norm_sq: f64,
        bag: Option<String>,
        instance: Option<usize>,
    },

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("covariance is singular even after ridge {ridge:e}; try a larger ridge")]
    SingularCovariance { ridge: f64 },

    #[error("score set needs at least one positive and one negative truth label")]
    SingleClass,

    #[error("score set entry `{0}` has no truth label")]
    MissingTruth(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown endmember `{0}`")]
    UnknownEndmember(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
}

fn location_suffix(bag: &Option<String>, instance: &Option<usize>) -> String {
    match (bag, instance) {
        (Some(b), Some(i)) => format!(" at bag `{b}` instance {i}"),
        (Some(b), None) => format!(" in bag `{b}`"),
        _ => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
