//! The MiniJ front end and interpreter.

pub mod ast;
pub mod check;
pub mod parser;
pub mod pretty;
pub mod token;
pub mod types;
pub mod vm;

use std::fmt;

pub use ast::{MethodRef, Program, TestCase};
pub use check::{check_tests, type_check, CheckedProgram, TypeError, TypeErrorKind};
pub use parser::{parse, parse_expression, parse_tests, SyntaxError};
pub use pretty::{pretty_print, pretty_print_tests};
pub use token::{lex, LexError, Span, Token, TokenKind, TokenStream};
pub use types::MiniJType;
pub use vm::{run_test, ExecConfig, ExecOutcome, Executable, RuntimeErrorKind, Value, Verdict};

/// First failing stage of the front end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrontendError {
    Lex(Vec<LexError>),
    Syntax(SyntaxError),
    Type(Vec<TypeError>),
}

impl FrontendError {
    /// Span of the first reported problem.
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex(e) => e[0].span(),
            FrontendError::Syntax(e) => e.span,
            FrontendError::Type(e) => e[0].span,
        }
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrontendError::Lex(errs) => {
                for (i, e) in errs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{}: lexical error: {e}", e.span())?;
                }
                Ok(())
            }
            FrontendError::Syntax(e) => write!(f, "{e}"),
            FrontendError::Type(errs) => {
                for (i, e) in errs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for FrontendError {}

/// Lexes, parses and type-checks a program.
pub fn compile_source(source: &str) -> Result<CheckedProgram, FrontendError> {
    let tokens = lex(source).map_err(FrontendError::Lex)?;
    let program = parse(&tokens).map_err(FrontendError::Syntax)?;
    type_check(program).map_err(FrontendError::Type)
}

/// Lexes and parses a `.mjtest` file. Tests are checked later, against the
/// program they run on.
pub fn parse_test_file(source: &str) -> Result<Vec<TestCase>, FrontendError> {
    let tokens = lex(source).map_err(FrontendError::Lex)?;
    parse_tests(&tokens).map_err(FrontendError::Syntax)
}
