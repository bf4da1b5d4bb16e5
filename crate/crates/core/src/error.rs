use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: usize, height: usize },

    #[error("views do not share a center: {0}")]
    NonSharedCenter(String),

    #[error("coverage violation: {0}")]
    Coverage(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("scene load failed{}: {msg}", frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    Load { frame: Option<usize>, msg: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("denoiser error: {0}")]
    Denoiser(String),

    #[error("codec error: {0}")]
    Codec(String),

    #[error("depth predictor failed on view {view}: {msg}")]
    Predictor { view: usize, msg: String },

    #[error("bridge error (request {request_id}): {msg}")]
    Bridge { request_id: u64, msg: String },

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// Innermost error, unwrapping stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
