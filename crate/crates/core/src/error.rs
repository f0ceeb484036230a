use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Spectrum or ensemble description outside its valid range.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Physical parameters for which an occupation is undefined
    /// (e.g. a Bose level at or below the chemical potential).
    #[error("domain error at level {level}: {reason}")]
    Domain { level: usize, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("no sign change in bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Failure at one point of a parameter sweep.
    #[error("at T = {temperature}, P = {polarization}: {source}")]
    AtGridPoint {
        temperature: f64,
        polarization: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Innermost error, looking through sweep-point wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }
}
