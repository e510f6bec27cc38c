//! Reading expressions and writing code.

mod emit;
mod parse;

pub use emit::{emit, emit_comment, emit_debug_substitutions, Dialect, EmitSettings, TempNaming};
pub use parse::{
    parse, parse_expression, parse_file, parse_with_denominator, InputFile, ParsedOutput, SourceExpression,
};
