use thiserror::Error;

use crate::structure::Elem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FraisseError {
    #[error("unknown element {0}")]
    UnknownElement(Elem),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("arity mismatch for `{name}`: expected {expected}, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("class violation: {0}")]
    Violation(String),
    #[error("budget exhausted after {spent} extension steps: {context}")]
    BudgetExhausted { spent: usize, context: String },
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FraisseError>;

impl FraisseError {
    pub fn pre(msg: impl Into<String>) -> Self {
        FraisseError::Precondition(msg.into())
    }

    pub fn violation(msg: impl Into<String>) -> Self {
        FraisseError::Violation(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, FraisseError::BudgetExhausted { .. })
    }
}
