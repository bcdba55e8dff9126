use thiserror::Error;

/// Failures surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),

    /// A stored trace is missing or unreadable.
    #[error("{0}")]
    Trace(String),

    #[error(transparent)]
    Core(#[from] sstac_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Trace(_) => 2,
            HarnessError::Core(_) | HarnessError::Io { .. } => 3,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Trace(_) => "trace",
            HarnessError::Core(e) => e.class(),
            HarnessError::Io { .. } => "io",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.class(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
