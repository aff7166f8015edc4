use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("schema error in {location}: {message}")]
    Schema { location: String, message: String },

    #[error("trace parse error: {0}")]
    TraceParse(String),

    #[error("unknown shape kind `{0}`")]
    UnknownShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no system prompt registered for modality {0}")]
    UnregisteredModality(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("transport: {0}")]
    Transport(String),
}

impl Error {
    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
