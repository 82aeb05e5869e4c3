use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input violated one of its documented bounds.
    #[error("violated bound `{bound}`: {detail}")]
    Invalid { bound: &'static str, detail: String },

    /// Input shapes disagree (grid vs. config, payload counts, strip sizes).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The XOR codec only handles single-check levels.
    #[error("unsupported codec: XOR coding needs k <= 1 and l <= 1 (got k={k}, l={l})")]
    UnsupportedCodec { k: usize, l: usize },
}

impl Error {
    pub(crate) fn invalid(bound: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            bound,
            detail: detail.into(),
        }
    }
}
