use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("pseudoinverse of a zero vector is undefined")]
    ZeroVector,

    #[error("degenerate training set: no centered eigenvalue above {cutoff:e}")]
    DegenerateTrainingSet { cutoff: f64 },

    #[error("projection of the anchor onto the retained components is zero")]
    ProjectionZero,

    #[error("fixed-point denominator collapsed to {value:e} at iteration {iteration}")]
    DenominatorCollapse { iteration: usize, value: f64 },

    #[error("pathway decode failed: {0}")]
    Decode(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    /// True for failures of the numerical kind (degenerate fits, collapsed iterations).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFit(_)
                | Error::ZeroVector
                | Error::DegenerateTrainingSet { .. }
                | Error::ProjectionZero
                | Error::DenominatorCollapse { .. }
                | Error::Decode(_)
        )
    }
}
