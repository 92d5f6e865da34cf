use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source}")]
    Core {
        stage: Option<usize>,
        #[source]
        source: towerplex_core::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no snapshots in {}", .0.display())]
    MissingSnapshot(PathBuf),
    #[error("{}: {detail}", path.display())]
    CorruptSnapshot { path: PathBuf, stage: Option<usize>, detail: String },
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {detail}", path.display())]
    Csv { path: PathBuf, detail: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn core(stage: Option<usize>) -> impl FnOnce(towerplex_core::Error) -> CliError {
        move |source| CliError::Core { stage, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core { source, .. } => source.code(),
            CliError::Config(_) => "InvalidConfig",
            CliError::MissingSnapshot(_) => "MissingSnapshot",
            CliError::CorruptSnapshot { .. } => "CorruptSnapshot",
            CliError::MissingInput(_) => "MissingInput",
            CliError::Io { .. } => "Io",
            CliError::Csv { .. } => "Csv",
        }
    }

    pub fn stage(&self) -> Option<usize> {
        match self {
            CliError::Core { stage, .. } | CliError::CorruptSnapshot { stage, .. } => *stage,
            _ => None,
        }
    }

    /// `ERROR <code> <stage> <detail>` on one line; `-` when no stage applies.
    pub fn error_line(&self) -> String {
        let stage = self.stage().map(|s| s.to_string()).unwrap_or_else(|| "-".into());
        let detail = self.to_string().replace(['\n', '\r'], " ");
        format!("ERROR {} {} {}", self.code(), stage, detail)
    }
}
