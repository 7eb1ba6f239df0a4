use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid thresholds: {0}")]
    Thresholds(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("value for `{parameter}` does not match its kind: {detail}")]
    TypeMismatch { parameter: String, detail: String },

    #[error("row {row}, column `{column}`: {detail}")]
    Cell {
        row: usize,
        column: String,
        detail: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("parameter `{0}` is missing; impute the vector before predicting")]
    MissingValue(String),

    #[error("unknown decision label `{0}`")]
    UnknownLabel(String),

    #[error("no strategy named `{name}` registered for {kind}")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("session: {0}")]
    Session(String),

    #[error("answer given for `{0}`, which is not the pending question")]
    AnswerNotAsked(String),

    #[error("session is closed")]
    SessionClosed,

    #[error("unknown intervention `{0}` (no invasiveness weight configured)")]
    UnknownIntervention(String),

    #[error("config: {0}")]
    Config(String),

    #[error("archive: {0}")]
    Archive(String),

    #[error("access denied: {0}")]
    Denied(String),

    #[error("not authenticated")]
    Unauthenticated,

    #[error("invalid request: {0}")]
    Invalid(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
