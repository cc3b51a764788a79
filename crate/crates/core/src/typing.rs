//! Type checking for configurations, including trigger calls and resources.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::reduction::{reduce_step, struct_normal, ReductionStep};
use crate::syntax::{Name, Term, Trigger, Type, Var};

/// Typing environment: channels (Δ), variables and triggers (Θ). A trigger
/// `k` maps to the argument type `T` of the abstraction it stands for.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Env {
    pub channels: BTreeMap<Name, Type>,
    pub vars: BTreeMap<Var, Type>,
    pub triggers: BTreeMap<Trigger, Type>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with_channels(channels: BTreeMap<Name, Type>, triggers: BTreeMap<Trigger, Type>) -> Env {
        Env { channels, vars: BTreeMap::new(), triggers }
    }

    pub fn channel(mut self, a: &str, ty: Type) -> Env {
        self.channels.insert(Name::new(a), ty);
        self
    }

    pub fn trigger(mut self, k: &str, ty: Type) -> Env {
        self.triggers.insert(Trigger::new(k), ty);
        self
    }

    /// Checks the environment invariants: channels carry channel types and
    /// every type is closed and guarded.
    pub fn check(&self) -> Result<(), TypeError> {
        for (a, t) in &self.channels {
            check_type(t)?;
            if t.as_chan().is_none() {
                return Err(TypeError::new("env", a.as_str(), "a channel type", t));
            }
        }
        for t in self.vars.values().chain(self.triggers.values()) {
            check_type(t)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{rule}: in `{subject}`: expected {expected}, found {found}")]
pub struct TypeError {
    pub rule: String,
    pub subject: String,
    pub expected: String,
    pub found: String,
}

impl TypeError {
    fn new(rule: &str, subject: impl fmt::Display, expected: impl fmt::Display, found: impl fmt::Display) -> Self {
        TypeError {
            rule: rule.to_string(),
            subject: subject.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

/// True iff every recursive binder is guarded.
pub fn check_guarded_type(t: &Type) -> bool {
    t.is_guarded()
}

/// One-step unfolding of a recursive type.
pub fn unfold_rec(t: &Type) -> Result<Type, TypeError> {
    t.unfold().ok_or_else(|| TypeError::new("unfold", t, "a recursive type", t))
}

/// Base types: those iso to `unit` or to a channel type.
pub fn is_base_type(t: &Type) -> bool {
    matches!(t.head_normal(), Type::Unit | Type::Chan(_))
}

fn check_type(t: &Type) -> Result<(), TypeError> {
    if !t.is_guarded() {
        return Err(TypeError::new("guard", t, "a guarded recursive type", t));
    }
    if let Some(z) = t.free_vars().into_iter().next() {
        return Err(TypeError::new("closed", t, "a closed type", format!("free type variable {z}")));
    }
    Ok(())
}

/// Decides `t ~iso u`: the least congruence identifying a recursive type
/// with its unfolding. Coinductive, over head-normalised types.
pub fn type_iso(t: &Type, u: &Type) -> bool {
    iso(t, u, &mut BTreeSet::new())
}

fn iso(t: &Type, u: &Type, assumed: &mut BTreeSet<(Type, Type)>) -> bool {
    if t == u {
        return true;
    }
    if !assumed.insert((t.clone(), u.clone())) {
        return true;
    }
    match (t.head_normal(), u.head_normal()) {
        (Type::Unit, Type::Unit) => true,
        (Type::Chan(a), Type::Chan(b)) | (Type::Abs(a), Type::Abs(b)) => iso(&a, &b, assumed),
        (Type::Var(y), Type::Var(z)) => y == z,
        _ => false,
    }
}

/// Infers the type of a value.
pub fn infer_value_type(env: &Env, v: &Term) -> Result<Type, TypeError> {
    match v {
        Term::Unit => Ok(Type::Unit),
        Term::Name(a) => {
            env.channels.get(a).cloned().ok_or_else(|| TypeError::new("name", a, "a bound channel", "an unbound name"))
        }
        Term::Var(x) => {
            env.vars.get(x).cloned().ok_or_else(|| TypeError::new("var", x, "a bound variable", "an unbound variable"))
        }
        Term::Call(k) => env
            .triggers
            .get(k)
            .map(|t| Type::abs(t.clone()))
            .ok_or_else(|| TypeError::new("call", v, "a declared trigger", "an undeclared trigger")),
        Term::Lambda(x, ty, body) => {
            check_type(ty)?;
            let mut inner = env.clone();
            inner.vars.insert(x.clone(), ty.clone());
            check_process(&inner, body)?;
            Ok(Type::abs(ty.clone()))
        }
        other => Err(TypeError::new("value", other, "a value", "a process")),
    }
}

fn expect_chan(env: &Env, rule: &str, s: &Term) -> Result<Type, TypeError> {
    let t = infer_value_type(env, s)?;
    t.as_chan().ok_or_else(|| TypeError::new(rule, s, "a channel type", &t))
}

fn check_process(env: &Env, p: &Term) -> Result<(), TypeError> {
    match p {
        Term::Nil => Ok(()),
        Term::App(f, arg) => {
            let ft = infer_value_type(env, f)?;
            let param = ft.as_abs().ok_or_else(|| TypeError::new("app", f, "an abstraction type", &ft))?;
            let at = infer_value_type(env, arg)?;
            if type_iso(&at, &param) {
                Ok(())
            } else {
                Err(TypeError::new("app", p, &param, &at))
            }
        }
        Term::Input(s, x, ty, body) => {
            check_type(ty)?;
            let payload = expect_chan(env, "in", s)?;
            if !type_iso(&payload, ty) {
                return Err(TypeError::new("in", p, &payload, ty));
            }
            let mut inner = env.clone();
            inner.vars.insert(x.clone(), ty.clone());
            check_process(&inner, body)
        }
        Term::Output(s, v, cont) => {
            let payload = expect_chan(env, "out", s)?;
            let vt = infer_value_type(env, v)?;
            if !type_iso(&payload, &vt) {
                return Err(TypeError::new("out", p, &payload, &vt));
            }
            check_process(env, cont)
        }
        Term::Match(l, r, then, otherwise) => {
            let lt = infer_value_type(env, l)?;
            let rt = infer_value_type(env, r)?;
            if lt.as_chan().is_none() {
                return Err(TypeError::new("match", l, "a channel type", &lt));
            }
            if rt.as_chan().is_none() {
                return Err(TypeError::new("match", r, "a channel type", &rt));
            }
            if !type_iso(&lt, &rt) {
                return Err(TypeError::new("match", p, &lt, &rt));
            }
            check_process(env, then)?;
            check_process(env, otherwise)
        }
        Term::New(a, ty, body) => {
            check_type(ty)?;
            if ty.as_chan().is_none() {
                return Err(TypeError::new("new", a, "a channel type", ty));
            }
            let mut inner = env.clone();
            inner.channels.insert(a.clone(), ty.clone());
            check_process(&inner, body)
        }
        Term::Par(l, r) => {
            check_process(env, l)?;
            check_process(env, r)
        }
        Term::Repl(b) => check_process(env, b),
        Term::Resource(k, v) => {
            let u = env
                .triggers
                .get(k)
                .ok_or_else(|| TypeError::new("res", k, "a declared trigger", "an undeclared trigger"))?;
            let vt = infer_value_type(env, v)?;
            let expected = Type::abs(u.clone());
            if type_iso(&vt, &expected) {
                Ok(())
            } else {
                Err(TypeError::new("res", p, &expected, &vt))
            }
        }
        v => Err(TypeError::new("process", v, "a process", "a value")),
    }
}

/// Checks `env ⊢ c` for a configuration.
pub fn check_config(env: &Env, c: &Term) -> Result<(), TypeError> {
    env.check()?;
    check_process(env, c)
}

/// A reduction sequence ending in an ill-typed configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub trace: Vec<ReductionStep>,
    pub error: TypeError,
}

/// Retypes every configuration reachable from `c` in at most `steps`
/// reductions.
pub fn check_subject_reduction(env: &Env, c: &Term, steps: usize) -> Result<(), Counterexample> {
    const MAX_STATES: usize = 5_000;
    let start = struct_normal(c);
    // each state with the step that produced it and its predecessor
    let mut states: Vec<(Term, Option<(ReductionStep, usize)>)> = vec![(start.clone(), None)];
    let mut seen = BTreeSet::from([start]);
    let mut frontier = vec![0usize];
    for _ in 0..steps {
        let mut next = Vec::new();
        for &i in &frontier {
            for step in reduce_step(&states[i].0) {
                if states.len() >= MAX_STATES || !seen.insert(step.target.clone()) {
                    continue;
                }
                let target = step.target.clone();
                states.push((target.clone(), Some((step, i))));
                let j = states.len() - 1;
                if let Err(error) = check_config(env, &target) {
                    let mut trace = Vec::new();
                    let mut cur = j;
                    while let Some((s, prev)) = &states[cur].1 {
                        trace.push(s.clone());
                        cur = *prev;
                    }
                    trace.reverse();
                    return Err(Counterexample { trace, error });
                }
                next.push(j);
            }
        }
        frontier = next;
    }
    Ok(())
}
