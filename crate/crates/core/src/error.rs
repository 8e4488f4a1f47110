use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters that do not describe a valid ensemble (e.g. `r` does not divide `n*l`).
    #[error("configuration error: {0}")]
    Config(String),
    /// Vector lengths or symbols that do not match the graph / function they are fed to.
    #[error("input error: {0}")]
    Input(String),
    /// A real argument outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no threshold found: {0}")]
    NoThreshold(String),
    /// Enumeration refused because it would blow up.
    #[error("resource guard: {0}")]
    Guard(String),
    #[error("typical set is empty for n={n}, epsilon={epsilon}")]
    EmptyTypicalSet { n: usize, epsilon: f64 },
    #[error("probability of symbol {index} is zero; drop it from the alphabet")]
    ReducedAlphabet { index: usize },
    #[error("malformed test function at {location}: {message}")]
    TestFunction { location: String, message: String },
    #[error("unknown curve id `{0}`")]
    UnknownCurve(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
