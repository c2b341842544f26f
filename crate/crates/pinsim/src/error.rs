use std::path::PathBuf;

/// Errors from the std side, grouped by exit-code category.
#[derive(Debug, thiserror::Error)]
pub enum PinsimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error in {path}: {reason}")]
    Data { path: PathBuf, reason: String },
    #[error("corrupt or incompatible file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: pinsim_core::Error,
    },
}

impl PinsimError {
    /// Process exit code: 2 config, 3 data/format, 4 simulation, 5 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data { .. } | Self::Format { .. } => 3,
            Self::Core { .. } => 4,
            Self::Io { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Adds module context to core errors.
pub(crate) trait CoreContext<T> {
    fn context(self, context: &str) -> Result<T>;
}

impl<T> CoreContext<T> for std::result::Result<T, pinsim_core::Error> {
    fn context(self, context: &str) -> Result<T> {
        self.map_err(|source| PinsimError::Core {
            context: context.to_owned(),
            source,
        })
    }
}

pub type Result<T, E = PinsimError> = std::result::Result<T, E>;
