use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event {event} is not enabled at this synchronization point")]
    NotEnabled { event: String },

    #[error("duplicate b-thread id `{0}`")]
    DuplicateThread(String),

    #[error("event {event} requested by `{thread}` is not in the program alphabet")]
    OutsideAlphabet { thread: String, event: String },

    #[error("b-thread `{0}` blocks on the non-deterministic choice attribute")]
    BlocksOnChoice(String),

    #[error("exploration limit exceeded after {states} states and {transitions} transitions")]
    LimitExceeded { states: usize, transitions: usize },

    #[error("liveness of a finite trace is only defined for deadlocked runs (trace ended by {0})")]
    NotDeadlocked(String),

    #[error("unrealizable specification: no live run exists ({0})")]
    Unrealizable(String),

    #[error("board parse error at row {row}, column {col}: {msg}")]
    BoardParse { row: usize, col: usize, msg: String },

    #[error("invalid board: {0}")]
    InvalidBoard(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed formula at offset {pos}: {msg}")]
    Formula { pos: usize, msg: String },

    #[error("pattern requires the non-deterministic choice attribute in the alphabet")]
    NondeterminismDisabled,

    #[error("malformed q-table: {0}")]
    QTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
