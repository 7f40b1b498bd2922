use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("article {article} is missing {field} metadata")]
    MetadataMissing { article: String, field: &'static str },
    #[error("cannot align an empty sequence")]
    EmptyInput,
    #[error("cluster {cluster} has {size} sentences, at least 2 are needed to build a lattice")]
    ClusterTooSmall { cluster: usize, size: usize },
    #[error("target slot {0} has no bound value")]
    UnboundSlot(u32),
    #[error("model not loaded from {path}: {reason}")]
    ModelNotLoaded { path: PathBuf, reason: String },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown inspect selector `{0}` (expected lattices, pairs, templates or clusters)")]
    UnknownSelector(String),
    #[error("corpus {0} contains no sentences")]
    EmptyCorpus(String),
    #[error("synthetic spec: {0}")]
    SynthSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// Data errors map to exit code 2, everything else is treated as usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::UnknownSelector(_) | Error::Config(_))
    }
}
