use std::path::PathBuf;

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("frame {frame:?} references missing file {path}")]
    MissingFile { frame: String, path: PathBuf },
    #[error("manifest declares no units")]
    MissingUnits,
    #[error("manifest units are {0:?}, only \"millimeters\" is supported")]
    UnitMismatch(String),
    #[error("unsupported schema version {found}, this build reads {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("frame {frame:?}: {message}")]
    Manifest { frame: String, message: String },
    #[error("frame {frame:?}, hand {hand}: {message}")]
    Annotation { frame: String, hand: usize, message: String },
    #[error("{path}: {message}")]
    Png { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Depth { path: PathBuf, source: voxhand_core::Error },
    #[error("{path}: not an exemplar database (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: exemplar database version {found}, this build reads {supported}")]
    VersionMismatch { path: PathBuf, found: u32, supported: u32 },
    #[error("{path}: checksum mismatch in {section}")]
    Checksum { path: PathBuf, section: String },
    #[error("{path}: file ends inside {section}")]
    Truncated { path: PathBuf, section: String },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("unknown import format {id:?}; registered: {}", registered.join(", "))]
    UnknownAdapter { id: String, registered: Vec<String> },
    #[error("{path}: {message}")]
    Import { path: PathBuf, message: String },
    #[error("{0} is locked by another writer")]
    Locked(PathBuf),
    #[error(transparent)]
    Core(#[from] voxhand_core::Error),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| DatasetError::Io { path, source }
    }
}
