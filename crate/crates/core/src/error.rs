use std::fmt;

use thiserror::Error;

use crate::poly::VarId;
use crate::program::TempId;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no value for variable {0} in the assignment")]
    MissingVariable(VarId),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` listed more than once")]
    DuplicateSymbol(String),
    #[error("Horner order does not contain the variable with id {0}")]
    OrderMissingVariable(VarId),
    #[error("temporary Z{0} is used before it is defined")]
    UndefinedTemp(TempId),
    #[error("dependency cycle through temporary Z{0}")]
    Cycle(TempId),
    #[error("nothing to optimize: the input is empty")]
    EmptyInput,
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("the modulus divides the denominator of output `{0}`")]
    DenominatorVanishes(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// What went wrong while reading an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    UndeclaredSymbol(String),
    NonIntegerExponent,
    NegativeExponent,
    DivisionByNonConstant,
    DivisionByZero,
    NonIntegerCoefficient,
    MissingSymbolsHeader,
    Malformed(String),
}

/// A syntax or semantic error, with a byte offset into the offending text
/// and, when reading files, a 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub line: Option<usize>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, position: usize) -> Self {
        ParseError { kind, position, line: None }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {}, ", line)?;
        }
        write!(f, "offset {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{}`", c),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of expression"),
            ParseErrorKind::Expected(what) => write!(f, "expected {}", what),
            ParseErrorKind::UndeclaredSymbol(s) => write!(f, "undeclared symbol `{}`", s),
            ParseErrorKind::NonIntegerExponent => write!(f, "exponent must be an integer"),
            ParseErrorKind::NegativeExponent => write!(f, "exponent must be non-negative"),
            ParseErrorKind::DivisionByNonConstant => {
                write!(f, "division is only allowed by integer constants")
            }
            ParseErrorKind::DivisionByZero => write!(f, "division by zero"),
            ParseErrorKind::NonIntegerCoefficient => {
                write!(f, "expression has non-integer coefficients")
            }
            ParseErrorKind::MissingSymbolsHeader => write!(f, "missing `symbols:` header line"),
            ParseErrorKind::Malformed(msg) => write!(f, "{}", msg),
        }
    }
}
