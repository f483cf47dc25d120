use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stability error: {0}")]
    Stability(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A parameter regime restriction was violated (e.g. the k_BT > ħΛ/π condition).
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("steady state is not unique: kernel dimension {kernel_dim}")]
    NonUniqueSteadyState { kernel_dim: usize },

    #[error("integration blew up at step {step}: {what}")]
    BlowUp { step: usize, what: String },

    #[error("step size too large at step {step}: {diagnostics}")]
    StepSize { step: usize, diagnostics: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::InvalidInput(_) => "invalid-input",
            Error::Domain(_) => "domain",
            Error::Stability(_) => "stability",
            Error::NumericalFailure(_) => "numerical-failure",
            Error::Constraint(_) => "constraint",
            Error::NonUniqueSteadyState { .. } => "non-unique-steady-state",
            Error::BlowUp { .. } => "blow-up",
            Error::StepSize { .. } => "step-size",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for a failed run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) => 3,
            Error::Constraint(_) | Error::Domain(_) | Error::InvalidInput(_) => 4,
            _ => 5,
        }
    }
}
