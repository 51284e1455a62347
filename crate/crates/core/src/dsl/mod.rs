//! Front-end for domain (`.hatp`) and problem (`.hatpp`) files.

pub mod ast;
mod diag;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use diag::{Diagnostic, ParseError, Severity, Source};
pub use parser::{parse_domain, parse_goal, parse_problem};
pub use printer::{print_domain, print_problem};
pub use validate::{validate, validate_with_goal};
