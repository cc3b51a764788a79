//! Canonical renaming of bound identifiers.
//!
//! A binder at nesting level `i` (counting enclosing binders of the same
//! namespace) receives the `i`-th name of a fixed enumeration that skips
//! the term's free identifiers. Two α-equivalent terms therefore render
//! identically.

use std::collections::BTreeSet;

use super::ident::{Name, Var};
use super::term::Term;

/// Enumerates `prefix0`, `prefix1`, ... skipping a reserved set.
struct Levels<'a> {
    prefix: &'a str,
    cache: Vec<String>,
    next: usize,
}

impl<'a> Levels<'a> {
    fn new(prefix: &'a str) -> Self {
        Levels { prefix, cache: Vec::new(), next: 0 }
    }

    fn at(&mut self, level: usize, skip: impl Fn(&str) -> bool) -> &str {
        while self.cache.len() <= level {
            let cand = format!("{}{}", self.prefix, self.next);
            self.next += 1;
            if !skip(&cand) {
                self.cache.push(cand);
            }
        }
        &self.cache[level]
    }
}

struct Renamer<'a> {
    names: Levels<'a>,
    vars: Levels<'a>,
    skip_names: &'a BTreeSet<Name>,
    skip_vars: &'a BTreeSet<Var>,
    name_scope: Vec<(Name, Name)>,
    var_scope: Vec<(Var, Var)>,
}

impl Renamer<'_> {
    fn bind_name(&mut self, a: &Name) -> Name {
        let skip = self.skip_names;
        let fresh = Name::new(self.names.at(self.name_scope.len(), |c| skip.contains(&Name::new(c))));
        self.name_scope.push((a.clone(), fresh.clone()));
        fresh
    }

    fn bind_var(&mut self, x: &Var) -> Var {
        let skip = self.skip_vars;
        let fresh = Var::new(self.vars.at(self.var_scope.len(), |c| skip.contains(&Var::new(c))));
        self.var_scope.push((x.clone(), fresh.clone()));
        fresh
    }

    fn go(&mut self, t: &Term) -> Term {
        match t {
            Term::Name(a) => Term::Name(
                self.name_scope.iter().rev().find(|(o, _)| o == a).map(|(_, n)| n.clone()).unwrap_or_else(|| a.clone()),
            ),
            Term::Var(x) => Term::Var(
                self.var_scope.iter().rev().find(|(o, _)| o == x).map(|(_, n)| n.clone()).unwrap_or_else(|| x.clone()),
            ),
            Term::Lambda(x, ty, body) => {
                let y = self.bind_var(x);
                let body = self.go(body);
                self.var_scope.pop();
                Term::Lambda(y, ty.clone(), Box::new(body))
            }
            Term::Input(s, x, ty, body) => {
                let s = self.go(s);
                let y = self.bind_var(x);
                let body = self.go(body);
                self.var_scope.pop();
                Term::Input(Box::new(s), y, ty.clone(), Box::new(body))
            }
            Term::New(a, ty, body) => {
                let b = self.bind_name(a);
                let body = self.go(body);
                self.name_scope.pop();
                Term::New(b, ty.clone(), Box::new(body))
            }
            _ => t.map_children(|c| self.go(c)),
        }
    }
}

fn rename_bound(
    t: &Term,
    name_prefix: &str,
    var_prefix: &str,
    skip_names: &BTreeSet<Name>,
    skip_vars: &BTreeSet<Var>,
) -> Term {
    let mut r = Renamer {
        names: Levels::new(name_prefix),
        vars: Levels::new(var_prefix),
        skip_names,
        skip_vars,
        name_scope: Vec::new(),
        var_scope: Vec::new(),
    };
    r.go(t)
}

/// Renames bound channels to `c0, c1, ...` and bound variables to
/// `x0, x1, ...` by nesting level, skipping the term's free identifiers.
pub fn alpha_canonical(t: &Term) -> Term {
    alpha_canonical_with(t, &BTreeSet::new())
}

/// As [`alpha_canonical`], additionally never choosing a name in `reserved`.
pub fn alpha_canonical_with(t: &Term, reserved: &BTreeSet<Name>) -> Term {
    let mut skip_names = t.free_names();
    skip_names.extend(reserved.iter().cloned());
    let skip_vars = t.free_vars();
    rename_bound(t, "c", "x", &skip_names, &skip_vars)
}

/// Internal comparison key: bound identifiers become `#0, #1, ...`.
/// `alpha_key(s) == alpha_key(t)` iff `s` and `t` are α-equivalent.
pub(crate) fn alpha_key(t: &Term) -> Term {
    rename_bound(t, "#", "#", &BTreeSet::new(), &BTreeSet::new())
}

pub fn alpha_eq(s: &Term, t: &Term) -> bool {
    alpha_key(s) == alpha_key(t)
}
