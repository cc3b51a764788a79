//! Term language: identifiers, types, terms, concrete syntax.

mod alpha;
mod ident;
mod parse;
mod print;
mod term;
mod types;
mod validate;

pub(crate) use alpha::alpha_key;
pub use alpha::{alpha_canonical, alpha_canonical_with, alpha_eq};
pub(crate) use ident::fresh_variant;
pub use ident::{Name, Trigger, TyVar, Var};
pub use parse::{parse, parse_document, parse_type, parse_with_triggers, Document, ParseError};
pub use print::print;
pub use term::{guarded_occurrence, Occurrence, SubstError, Term};
pub use types::Type;
pub use validate::{validate, ValidationError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid configuration: {0}")]
    Invalid(#[from] ValidationError),
}

/// Parses a document and runs the configuration validation pass.
pub fn load_document(src: &str) -> Result<Document, LoadError> {
    let doc = parse_document(src)?;
    validate(&doc.term)?;
    Ok(doc)
}
