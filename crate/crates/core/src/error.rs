use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel of user {user} is identically zero")]
    DegenerateChannel { user: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit needs at least 2 distinct sample sizes, got {distinct}")]
    InsufficientData { distinct: usize },

    #[error("fit grid is empty")]
    EmptyGrid,

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
