//! Errors carrying their exit code: 1 for I/O and usage, 2 for validation
//! and semantic failures.

use std::fmt::Display;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }

    pub fn semantic(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

pub trait ResultExt<T> {
    fn usage(self) -> Result<T, Failure>;
    fn semantic(self) -> Result<T, Failure>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: Display + std::fmt::Debug + Send + Sync + 'static,
{
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::usage(anyhow::Error::msg(e)))
    }

    fn semantic(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::semantic(anyhow::Error::msg(e)))
    }
}
