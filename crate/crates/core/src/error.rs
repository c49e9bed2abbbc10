use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fact {fact}: empty {field} field")]
    EmptyField { fact: usize, field: &'static str },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite gradient in parameter {param}; optimizer step skipped")]
    NonFiniteGradient { param: usize },
    #[error("question is untaggable: no token overlaps the gold subject")]
    Untaggable,
    #[error("config error: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, question {question}")]
    NonFiniteLoss { epoch: usize, question: usize },
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
