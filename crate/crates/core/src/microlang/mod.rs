//! The Microlanguage: AST, parser, canonical printer and line-set analysis.

mod ast;
mod parser;
mod printer;
pub mod random;
mod syntax;

pub use ast::*;
pub use parser::{parse, ParseError};
pub use printer::{bool_expr as print_bool, command_expr as print_command, print};
pub use syntax::{normalize_line, normalized_lines, syntax_set, SyntaxSet};

/// Maximum for-loop nesting depth of `p`.
pub fn nesting_depth(p: &Program) -> usize {
    p.nesting_depth()
}
