//! The set-operation program language: lexing, parsing, canonical text and
//! static typing.
//!
//! ```text
//! program := expr
//! expr    := "objects" | OP "(" args ")"
//! FILTER  := expr "," cond {"," cond}
//! cond    := ident cmp literal | "relation" "=" 'text' ["," "ref" "=" expr]
//! SELECT  := (ident | "MIN(" ident ")" | "MAX(" ident ")") "," expr
//! SORT    := ident "," expr ["," ("asc" | "desc")]
//! MIN/MAX := ident "," expr
//! COUNT/EXISTS := expr
//! ```
//!
//! Operator names and attribute names are case-insensitive on input. The
//! canonical form uses uppercase operators, lowercase attributes, `", "`
//! between arguments and single-quoted text.

mod ast;
mod lexer;
mod parser;
mod types;

pub use ast::{Attribute, Comparator, Condition, Literal, NodeKind, Program, Projection, SortOrder};
pub use parser::parse;
pub use types::{node_types, validate_types, ResultType};

/// Deepest operator nesting accepted by [`parse`].
pub const MAX_NESTING: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("syntax error at {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("arity error at {position}: {operator} takes {expected} argument(s), got {found}")]
    Arity {
        position: usize,
        operator: NodeKind,
        expected: &'static str,
        found: usize,
    },
    #[error("unknown operator '{name}' at {position}")]
    UnknownOperator { position: usize, name: String },
    #[error("invalid condition at {position}: {message}")]
    InvalidCondition { position: usize, message: String },
    #[error("nesting deeper than {limit} at {position}")]
    DepthExceeded { position: usize, limit: usize },
    #[error("invalid attribute name '{name}'")]
    InvalidAttribute { name: String },
}

impl DslError {
    /// Stable error name used in machine-readable records.
    pub fn name(&self) -> &'static str {
        match self {
            DslError::Syntax { .. } => "SyntaxError",
            DslError::Arity { .. } => "ArityError",
            DslError::UnknownOperator { .. } => "UnknownOperator",
            DslError::InvalidCondition { .. } => "InvalidCondition",
            DslError::DepthExceeded { .. } => "DepthExceeded",
            DslError::InvalidAttribute { .. } => "SyntaxError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("type error at node {node_id}: {message}")]
pub struct TypeError {
    pub node_id: usize,
    pub message: String,
}

/// Parse and type-check in one go.
pub fn parse_typed(text: &str) -> Result<(Program, ResultType), ProgramError> {
    let program = parse(text)?;
    let ty = validate_types(&program)?;
    Ok((program, ty))
}

/// Either failure of [`parse_typed`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error(transparent)]
    Parse(#[from] DslError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl ProgramError {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramError::Parse(e) => e.name(),
            ProgramError::Type(_) => "TypeError",
        }
    }
}
