use std::fmt;

use crate::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field singularity at ({:.6e}, {:.6e}, {:.6e}) m: {reason}", .position.x, .position.y, .position.z)]
    Singularity { position: Vec3, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric failure: {message}")]
    Numeric {
        message: String,
        diagnostics: Vec<String>,
    },

    #[error("insufficient statistics: {0}")]
    Statistics(String),

    #[error("spin integration accuracy: {0}")]
    Accuracy(String),

    #[error("schedule conflict: {0}")]
    Schedule(String),

    #[error("{path}:{line}: {key}: {message}")]
    Parse {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            diagnostics: Vec::new(),
        }
    }

    pub fn singular(position: Vec3, reason: impl Into<String>) -> Self {
        Error::Singularity {
            position,
            reason: reason.into(),
        }
    }

    /// Short machine-readable category used in `ERROR:<category>:` lines.
    pub fn category(&self) -> Category {
        match self {
            Error::InvalidInput(_) => Category::InvalidInput,
            Error::Singularity { .. } => Category::Singularity,
            Error::Geometry(_) => Category::Geometry,
            Error::Numeric { .. } => Category::Numeric,
            Error::Statistics(_) => Category::Statistics,
            Error::Accuracy(_) => Category::Accuracy,
            Error::Schedule(_) => Category::Schedule,
            Error::Parse { .. } => Category::Parse,
            Error::Io(_) => Category::Io,
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            Category::InvalidInput
            | Category::Geometry
            | Category::Schedule
            | Category::Parse
            | Category::Io => 1,
            Category::Singularity
            | Category::Numeric
            | Category::Statistics
            | Category::Accuracy => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(format!("json: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    InvalidInput,
    Singularity,
    Geometry,
    Numeric,
    Statistics,
    Accuracy,
    Schedule,
    Parse,
    Io,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::InvalidInput => "invalid-input",
            Category::Singularity => "singularity",
            Category::Geometry => "geometry",
            Category::Numeric => "numeric",
            Category::Statistics => "statistics",
            Category::Accuracy => "accuracy",
            Category::Schedule => "schedule",
            Category::Parse => "parse",
            Category::Io => "io",
        };
        f.write_str(s)
    }
}

pub(crate) fn ensure_finite(p: &Vec3, what: &str) -> Result<()> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite components")))
    }
}
