use crate::conic::Solution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input: bad dims, invalid POVM, unnormalized table.
    #[error("input error: {0}")]
    Input(String),
    /// The conic solver did not reach an optimal point. The last iterate is attached.
    #[error("solver failure ({status}): {message}")]
    Solver {
        status: String,
        message: String,
        partial: Option<Box<Solution>>,
    },
    /// A numerical check that a computed quantity must satisfy did not hold.
    #[error("check failed: {0}")]
    Check(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn check(msg: impl Into<String>) -> Self {
        Error::Check(msg.into())
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input(_))
    }
}
