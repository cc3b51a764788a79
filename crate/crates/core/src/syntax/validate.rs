use std::collections::BTreeSet;

use thiserror::Error;

use super::ident::Trigger;
use super::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("resource for trigger `{0}` appears more than once")]
    DuplicateResource(Trigger),
    #[error("resource `res {0} <= ..` must occur under `|` or `nu` only")]
    NestedResource(Trigger),
    #[error("expected a value, found process `{0}`")]
    NotAValue(String),
    #[error("expected a process, found value `{0}`")]
    NotAProcess(String),
}

/// Checks the well-formedness conditions of configurations: values in value
/// positions, processes elsewhere, resources only at configuration level and
/// at most one resource per trigger.
pub fn validate(c: &Term) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    config(c, &mut seen)
}

fn config(c: &Term, seen: &mut BTreeSet<Trigger>) -> Result<(), ValidationError> {
    match c {
        Term::Par(l, r) => {
            config(l, seen)?;
            config(r, seen)
        }
        Term::New(_, _, b) => config(b, seen),
        Term::Resource(k, v) => {
            if !seen.insert(k.clone()) {
                return Err(ValidationError::DuplicateResource(k.clone()));
            }
            value(v)
        }
        other => process(other),
    }
}

fn value(v: &Term) -> Result<(), ValidationError> {
    match v {
        Term::Lambda(_, _, body) => process(body),
        v if v.is_value() => Ok(()),
        other => Err(ValidationError::NotAValue(other.to_string())),
    }
}

fn process(p: &Term) -> Result<(), ValidationError> {
    match p {
        Term::Nil => Ok(()),
        Term::App(f, a) => {
            value(f)?;
            value(a)
        }
        Term::Input(s, _, _, b) => {
            value(s)?;
            process(b)
        }
        Term::Output(s, v, k) => {
            value(s)?;
            value(v)?;
            process(k)
        }
        Term::Match(l, r, t, e) => {
            value(l)?;
            value(r)?;
            process(t)?;
            process(e)
        }
        Term::New(_, _, b) | Term::Repl(b) => process(b),
        Term::Par(l, r) => {
            process(l)?;
            process(r)
        }
        Term::Resource(k, _) => Err(ValidationError::NestedResource(k.clone())),
        v => Err(ValidationError::NotAProcess(v.to_string())),
    }
}
