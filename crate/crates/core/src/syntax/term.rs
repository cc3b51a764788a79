use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::ident::{fresh_variant, Name, Trigger, Var};
use super::types::Type;

/// Unified syntax for values, processes and augmented configurations.
///
/// Values are `Unit`, `Name`, `Var`, `Lambda` and `Call`; the remaining
/// variants are processes, with `Resource` only legal at configuration level.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Unit,
    Name(Name),
    Var(Var),
    Lambda(Var, Type, Box<Term>),
    Call(Trigger),
    App(Box<Term>, Box<Term>),
    Input(Box<Term>, Var, Type, Box<Term>),
    Output(Box<Term>, Box<Term>, Box<Term>),
    Match(Box<Term>, Box<Term>, Box<Term>, Box<Term>),
    New(Name, Type, Box<Term>),
    Par(Box<Term>, Box<Term>),
    Repl(Box<Term>),
    Nil,
    Resource(Trigger, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("substituted term `{0}` is not a value")]
    NotAValue(String),
}

impl Term {
    pub fn name(a: &str) -> Term {
        Term::Name(Name::new(a))
    }

    pub fn var(x: &str) -> Term {
        Term::Var(Var::new(x))
    }

    pub fn call(k: &str) -> Term {
        Term::Call(Trigger::new(k))
    }

    pub fn lambda(x: &str, ty: Type, body: Term) -> Term {
        Term::Lambda(Var::new(x), ty, Box::new(body))
    }

    pub fn app(f: Term, arg: Term) -> Term {
        Term::App(Box::new(f), Box::new(arg))
    }

    pub fn input(subject: Term, x: &str, ty: Type, body: Term) -> Term {
        Term::Input(Box::new(subject), Var::new(x), ty, Box::new(body))
    }

    pub fn output(subject: Term, payload: Term, cont: Term) -> Term {
        Term::Output(Box::new(subject), Box::new(payload), Box::new(cont))
    }

    pub fn matching(l: Term, r: Term, then: Term, otherwise: Term) -> Term {
        Term::Match(Box::new(l), Box::new(r), Box::new(then), Box::new(otherwise))
    }

    pub fn new_name(a: &str, ty: Type, body: Term) -> Term {
        Term::New(Name::new(a), ty, Box::new(body))
    }

    pub fn par(l: Term, r: Term) -> Term {
        Term::Par(Box::new(l), Box::new(r))
    }

    /// Right-nested parallel composition; `0` for an empty list.
    pub fn par_all(items: impl IntoIterator<Item = Term>) -> Term {
        let mut items: Vec<Term> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Term::Nil;
        };
        while let Some(t) = items.pop() {
            acc = Term::par(t, acc);
        }
        acc
    }

    pub fn repl(body: Term) -> Term {
        Term::Repl(Box::new(body))
    }

    pub fn resource(k: &str, v: Term) -> Term {
        Term::Resource(Trigger::new(k), Box::new(v))
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Unit | Term::Name(_) | Term::Var(_) | Term::Lambda(..) | Term::Call(_))
    }

    /// First-order values: those that can appear in a base-type label.
    pub fn is_first_order_value(&self) -> bool {
        matches!(self, Term::Unit | Term::Name(_))
    }

    pub fn is_process(&self) -> bool {
        !self.is_value()
    }

    /// Number of constructors along the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        1 + self.children().map(Term::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().map(Term::size).sum::<usize>()
    }

    pub(crate) fn children(&self) -> impl Iterator<Item = &Term> {
        let v: Vec<&Term> = match self {
            Term::Unit | Term::Name(_) | Term::Var(_) | Term::Call(_) | Term::Nil => vec![],
            Term::Lambda(_, _, b) | Term::New(_, _, b) | Term::Repl(b) | Term::Resource(_, b) => {
                vec![b]
            }
            Term::App(f, a) | Term::Par(f, a) => vec![f, a],
            Term::Input(s, _, _, b) => vec![s, b],
            Term::Output(s, p, c) => vec![s, p, c],
            Term::Match(l, r, t, e) => vec![l, r, t, e],
        };
        v.into_iter()
    }

    // ----- free and bound identifiers ---------------------------------------

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_names(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_names(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Name(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            Term::New(a, _, b) => {
                bound.push(a.clone());
                b.collect_free_names(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free_names(bound, out);
                }
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lambda(x, _, b) => {
                bound.push(x.clone());
                b.collect_free_vars(bound, out);
                bound.pop();
            }
            Term::Input(s, x, _, b) => {
                s.collect_free_vars(bound, out);
                bound.push(x.clone());
                b.collect_free_vars(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free_vars(bound, out);
                }
            }
        }
    }

    pub fn mentions_var(&self, x: &Var) -> bool {
        match self {
            Term::Var(y) => y == x,
            Term::Lambda(y, _, b) => y != x && b.mentions_var(x),
            Term::Input(s, y, _, b) => s.mentions_var(x) || (y != x && b.mentions_var(x)),
            _ => self.children().any(|c| c.mentions_var(x)),
        }
    }

    pub fn mentions_name(&self, a: &Name) -> bool {
        match self {
            Term::Name(b) => b == a,
            Term::New(b, _, body) => b != a && body.mentions_name(a),
            _ => self.children().any(|c| c.mentions_name(a)),
        }
    }

    /// Every channel name occurring in the term, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Name(a) | Term::New(a, _, _) => {
                out.insert(a.clone());
            }
            _ => {}
        });
        out
    }

    /// Every variable occurring in the term, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Var(x) | Term::Lambda(x, _, _) | Term::Input(_, x, _, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    /// Trigger identifiers occurring in call position.
    pub fn calls(&self) -> BTreeSet<Trigger> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Call(k) = t {
                out.insert(k.clone());
            }
        });
        out
    }

    pub fn calls_trigger(&self, k: &Trigger) -> bool {
        match self {
            Term::Call(l) => l == k,
            _ => self.children().any(|c| c.calls_trigger(k)),
        }
    }

    /// All `Resource(k, v)` nodes, in left-to-right order.
    pub fn resources(&self) -> Vec<(Trigger, Term)> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let Term::Resource(k, v) = t {
                out.push((k.clone(), (**v).clone()));
            }
        });
        out
    }

    pub fn has_resources(&self) -> bool {
        match self {
            Term::Resource(..) => true,
            _ => self.children().any(Term::has_resources),
        }
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// True iff no trigger has both a call and a resource in the term.
    pub fn is_balanced(&self) -> bool {
        let calls = self.calls();
        self.resources().iter().all(|(k, _)| !calls.contains(k))
    }

    // ----- renaming and substitution ----------------------------------------

    /// Renames free occurrences of channel `from` to `to`. The caller
    /// guarantees `to` does not occur in the term at all.
    pub(crate) fn rename_name_fresh(&self, from: &Name, to: &Name) -> Term {
        match self {
            Term::Name(a) if a == from => Term::Name(to.clone()),
            Term::New(a, _, _) if a == from => self.clone(),
            _ => self.map_children(|c| c.rename_name_fresh(from, to)),
        }
    }

    /// Renames free occurrences of variable `from` to `to`, with the same
    /// freshness contract as [`Term::rename_name_fresh`].
    pub(crate) fn rename_var_fresh(&self, from: &Var, to: &Var) -> Term {
        match self {
            Term::Var(x) if x == from => Term::Var(to.clone()),
            Term::Lambda(x, _, _) if x == from => self.clone(),
            Term::Input(s, x, ty, b) if x == from => {
                Term::Input(Box::new(s.rename_var_fresh(from, to)), x.clone(), ty.clone(), b.clone())
            }
            _ => self.map_children(|c| c.rename_var_fresh(from, to)),
        }
    }

    /// Rebuilds the node with `f` applied to each direct child.
    pub fn map_children(&self, mut f: impl FnMut(&Term) -> Term) -> Term {
        let mut g = |b: &Term| Box::new(f(b));
        match self {
            Term::Unit | Term::Name(_) | Term::Var(_) | Term::Call(_) | Term::Nil => self.clone(),
            Term::Lambda(x, t, b) => Term::Lambda(x.clone(), t.clone(), g(b)),
            Term::App(a, b) => Term::App(g(a), g(b)),
            Term::Input(s, x, t, b) => Term::Input(g(s), x.clone(), t.clone(), g(b)),
            Term::Output(s, p, c) => Term::Output(g(s), g(p), g(c)),
            Term::Match(l, r, t, e) => Term::Match(g(l), g(r), g(t), g(e)),
            Term::New(a, t, b) => Term::New(a.clone(), t.clone(), g(b)),
            Term::Par(a, b) => Term::Par(g(a), g(b)),
            Term::Repl(b) => Term::Repl(g(b)),
            Term::Resource(k, v) => Term::Resource(k.clone(), g(v)),
        }
    }

    /// Capture-avoiding substitution `self[v/x]` of a value for a variable.
    pub fn subst_value(&self, x: &Var, v: &Term) -> Result<Term, SubstError> {
        if !v.is_value() {
            return Err(SubstError::NotAValue(v.to_string()));
        }
        let ctx = Capture::of(v);
        Ok(self.subst_var_with(x, v, &ctx))
    }

    fn subst_var_with(&self, x: &Var, v: &Term, ctx: &Capture) -> Term {
        if !self.mentions_var(x) {
            return self.clone();
        }
        match self {
            Term::Var(y) if y == x => v.clone(),
            Term::Lambda(y, ty, b) => {
                let (y, b) = ctx.avoid_var(y, b, x);
                Term::Lambda(y, ty.clone(), Box::new(b.subst_var_with(x, v, ctx)))
            }
            Term::Input(s, y, ty, b) => {
                let s = s.subst_var_with(x, v, ctx);
                if y == x {
                    return Term::Input(Box::new(s), y.clone(), ty.clone(), b.clone());
                }
                let (y, b) = ctx.avoid_var(y, b, x);
                Term::Input(Box::new(s), y, ty.clone(), Box::new(b.subst_var_with(x, v, ctx)))
            }
            Term::New(a, ty, b) => {
                let (a, b) = ctx.avoid_name(a, b);
                Term::New(a, ty.clone(), Box::new(b.subst_var_with(x, v, ctx)))
            }
            _ => self.map_children(|c| c.subst_var_with(x, v, ctx)),
        }
    }

    /// Replaces every call `call k` by the value `v`, avoiding capture.
    /// Resource identifiers are left untouched.
    pub fn subst_trigger(&self, k: &Trigger, v: &Term) -> Result<Term, SubstError> {
        if !v.is_value() {
            return Err(SubstError::NotAValue(v.to_string()));
        }
        let ctx = Capture::of(v);
        Ok(self.subst_trigger_with(k, v, &ctx))
    }

    fn subst_trigger_with(&self, k: &Trigger, v: &Term, ctx: &Capture) -> Term {
        if !self.calls_trigger(k) {
            return self.clone();
        }
        match self {
            Term::Call(l) if l == k => v.clone(),
            Term::Lambda(y, ty, b) => {
                let (y, b) = ctx.avoid_var_always(y, b);
                Term::Lambda(y, ty.clone(), Box::new(b.subst_trigger_with(k, v, ctx)))
            }
            Term::Input(s, y, ty, b) => {
                let s = s.subst_trigger_with(k, v, ctx);
                let (y, b) = ctx.avoid_var_always(y, b);
                Term::Input(Box::new(s), y, ty.clone(), Box::new(b.subst_trigger_with(k, v, ctx)))
            }
            Term::New(a, ty, b) => {
                let (a, b) = ctx.avoid_name(a, b);
                Term::New(a, ty.clone(), Box::new(b.subst_trigger_with(k, v, ctx)))
            }
            _ => self.map_children(|c| c.subst_trigger_with(k, v, ctx)),
        }
    }

    /// Renames free channel `from` to `to`, avoiding capture of `to`.
    pub fn rename_name(&self, from: &Name, to: &Name) -> Term {
        if from == to {
            return self.clone();
        }
        let ctx = Capture::of(&Term::Name(to.clone()));
        self.rename_name_with(from, to, &ctx)
    }

    fn rename_name_with(&self, from: &Name, to: &Name, ctx: &Capture) -> Term {
        if !self.mentions_name(from) {
            return self.clone();
        }
        match self {
            Term::Name(a) if a == from => Term::Name(to.clone()),
            Term::New(a, ty, b) => {
                let (a, b) = ctx.avoid_name(a, b);
                Term::New(a, ty.clone(), Box::new(b.rename_name_with(from, to, ctx)))
            }
            _ => self.map_children(|c| c.rename_name_with(from, to, ctx)),
        }
    }

    /// Renames trigger identifiers (in calls and resources) through `map`.
    pub fn rename_triggers(&self, map: &BTreeMap<Trigger, Trigger>) -> Term {
        match self {
            Term::Call(k) => Term::Call(map.get(k).cloned().unwrap_or_else(|| k.clone())),
            Term::Resource(k, v) => {
                Term::Resource(map.get(k).cloned().unwrap_or_else(|| k.clone()), Box::new(v.rename_triggers(map)))
            }
            _ => self.map_children(|c| c.rename_triggers(map)),
        }
    }
}

/// Identifiers a substituted value brings along; binders that clash with
/// them are renamed on the way down.
struct Capture {
    names: BTreeSet<Name>,
    vars: BTreeSet<Var>,
}

impl Capture {
    fn of(v: &Term) -> Capture {
        Capture { names: v.free_names(), vars: v.free_vars() }
    }

    fn avoid_name(&self, a: &Name, body: &Term) -> (Name, Term) {
        if !self.names.contains(a) {
            return (a.clone(), body.clone());
        }
        let used = body.all_names();
        let fresh = Name::new(fresh_variant(a.as_str(), |c| {
            let c = Name::new(c);
            used.contains(&c) || self.names.contains(&c)
        }));
        let renamed = body.rename_name_fresh(a, &fresh);
        (fresh, renamed)
    }

    fn avoid_var(&self, y: &Var, body: &Term, x: &Var) -> (Var, Term) {
        if !self.vars.contains(y) || !body.mentions_var(x) {
            return (y.clone(), body.clone());
        }
        self.avoid_var_always(y, body)
    }

    fn avoid_var_always(&self, y: &Var, body: &Term) -> (Var, Term) {
        if !self.vars.contains(y) {
            return (y.clone(), body.clone());
        }
        let used = body.all_vars();
        let fresh = Var::new(fresh_variant(y.as_str(), |c| {
            let c = Var::new(c);
            used.contains(&c) || self.vars.contains(&c)
        }));
        let renamed = body.rename_var_fresh(y, &fresh);
        (fresh, renamed)
    }
}

/// How a variable occurs in a process, following the guarded/unguarded
/// classification used by the substitutivity argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Occurrence {
    Absent,
    Guarded,
    Unguarded,
    /// Some occurrences are guarded and some are not.
    Mixed,
}

impl Occurrence {
    fn join(self, other: Occurrence) -> Occurrence {
        use Occurrence::*;
        match (self, other) {
            (Absent, o) | (o, Absent) => o,
            (a, b) if a == b => a,
            _ => Mixed,
        }
    }
}

/// Classifies the occurrences of `x` in the process `p`.
///
/// `x` is unguarded in `x(w)` when `x ∉ w`, guarded under any prefix,
/// conditional or non-`x` application, and the classification is propagated
/// through restriction, parallel composition and replication. Occurrences
/// that disagree yield [`Occurrence::Mixed`]; `x(w)` with `x ∈ w` is mixed.
pub fn guarded_occurrence(x: &Var, p: &Term) -> Occurrence {
    if !p.mentions_var(x) {
        return Occurrence::Absent;
    }
    match p {
        Term::App(f, arg) => match &**f {
            Term::Var(y) if y == x => {
                if arg.mentions_var(x) {
                    Occurrence::Mixed
                } else {
                    Occurrence::Unguarded
                }
            }
            _ => Occurrence::Guarded,
        },
        Term::New(_, _, b) | Term::Repl(b) => guarded_occurrence(x, b),
        Term::Par(l, r) => guarded_occurrence(x, l).join(guarded_occurrence(x, r)),
        _ => Occurrence::Guarded,
    }
}
