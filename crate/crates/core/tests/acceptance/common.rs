use std::collections::BTreeSet;

use hopi_core::syntax::{load_document, Document};
use hopi_core::{Env, Term, Trigger};

/// Loads `header` followed by `body`; panics with the source on failure.
pub fn doc(header: &str, body: &str) -> Document {
    let src = format!("{header}\n{body}");
    load_document(&src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn env_of(d: &Document) -> Env {
    Env::with_channels(d.channels.clone(), d.triggers.clone())
}

/// Triggers called anywhere in `t`.
pub fn called(t: &Term, out: &mut BTreeSet<Trigger>) {
    match t {
        Term::Call(k) => {
            out.insert(k.clone());
        }
        Term::Unit | Term::Name(_) | Term::Var(_) | Term::Nil => {}
        Term::Lambda(_, _, b) | Term::New(_, _, b) | Term::Repl(b) | Term::Resource(_, b) => called(b, out),
        Term::App(f, a) | Term::Par(f, a) => {
            called(f, out);
            called(a, out);
        }
        Term::Input(s, _, _, b) => {
            called(s, out);
            called(b, out);
        }
        Term::Output(s, v, k) => {
            called(s, out);
            called(v, out);
            called(k, out);
        }
        Term::Match(l, r, p, q) => {
            for c in [l, r, p, q] {
                called(c, out);
            }
        }
    }
}

/// Resources at configuration level, with their values.
pub fn stored(t: &Term, out: &mut Vec<(Trigger, Term)>) {
    match t {
        Term::Par(l, r) => {
            stored(l, out);
            stored(r, out);
        }
        Term::New(_, _, b) => stored(b, out),
        Term::Resource(k, v) => out.push((k.clone(), (**v).clone())),
        _ => {}
    }
}

pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Fails with `msg` and the first few offending cases.
pub fn verdict(checked: String, failures: Vec<String>) -> Result<String, String> {
    if failures.is_empty() {
        Ok(checked)
    } else {
        let shown: Vec<&str> = failures.iter().take(3).map(String::as_str).collect();
        Err(format!("{} failures; first: {}", failures.len(), shown.join(" || ")))
    }
}
