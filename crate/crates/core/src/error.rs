use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown letter {letter:?} at offset {pos}")]
    UnknownLetter { pos: usize, letter: char },
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("invalid presentation: {0}")]
    Presentation(String),
    #[error("presentation does not satisfy C'(1/6): {0}")]
    NotSmallCancellation(String),
    #[error("presentations have different alphabets")]
    AlphabetMismatch,
    #[error("ball of radius {radius} is too small; radius {need} is needed")]
    BallTooSmall { radius: usize, need: usize },
    #[error("ball exceeds the vertex limit of {0}")]
    VertexLimit(usize),
    #[error("strategy cannot be used here: {0}")]
    Strategy(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ball cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by inputs that violate an operation's
    /// preconditions (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NotSmallCancellation(_)
                | Error::AlphabetMismatch
                | Error::BallTooSmall { .. }
                | Error::VertexLimit(_)
                | Error::Strategy(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
