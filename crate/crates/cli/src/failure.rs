use std::fmt;

/// Process exit codes. Stable across releases.
pub mod code {
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const VERIFY: u8 = 4;
    pub const UNREADABLE: u8 = 5;
    pub const BAD_GRID: u8 = 6;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(code::CONFIG, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<lasched::Error> for Failure {
    fn from(e: lasched::Error) -> Self {
        use lasched::Error as E;
        let code = match e {
            E::Infeasible(_) | E::SearchExhausted { .. } => code::INFEASIBLE,
            E::Parse(_) => code::UNREADABLE,
            E::InvalidGrid(_) => code::BAD_GRID,
            _ => code::CONFIG,
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
