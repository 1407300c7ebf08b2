use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration failed: {0}")]
    Numeric(String),

    #[error("transition grid cell (s_bar={s_bar}, alpha_deg={alpha_deg}): {source}")]
    Cell {
        s_bar: f64,
        alpha_deg: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("viability kernel is empty")]
    EmptyKernel,

    #[error("degenerate neutral curve: {0}")]
    DegenerateCurve(String),

    #[error("reference salient gradient set is empty; relative comparison undefined")]
    UndefinedComparison,

    #[error("non-finite learning update: {0}")]
    NonFinite(String),

    #[error("policy filter acceptance too low: {accepted} of {draws} draws")]
    FilterStarved { accepted: usize, draws: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
