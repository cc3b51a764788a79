//! Translation of trigger calls and resources into plain processes, and
//! the testing contexts that observe single transitions.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use thiserror::Error;

use crate::lts::{weak_after, FoValue, Label, Subject, TypedNode};
use crate::reduction::soup::{Fresh, Soup};
use crate::reduction::{housekeeping_closure, reduce_multi, struct_normal};
use crate::syntax::{alpha_canonical_with, fresh_variant, Name, Term, Trigger, Type, Var};
use crate::typing::{check_config, Env, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("trigger `{0}` is also used as a channel name")]
    NameClash(String),
    #[error("`{0}` is not fresh for the environment")]
    FreshnessViolation(String),
    #[error("label subject `{0}` is not in the environment")]
    UnknownSubject(String),
    #[error("label `{0}` does not fit the subject's type")]
    IllTypedLabel(String),
    #[error("tau has no testing context")]
    Tau,
    #[error("success environment has {0} entries, at most one allowed")]
    SuccArity(usize),
    #[error("configuration is not balanced")]
    NotBalanced,
}

/// `base` itself when free, else its first free numbered variant.
fn pick(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if taken(base) {
        fresh_variant(base, taken)
    } else {
        base.to_string()
    }
}

fn trigger_channel(k: &Trigger) -> Name {
    Name::new(k.as_str())
}

/// `k : ⇑T` becomes the channel binding `k : ch<T>`.
pub fn translate_env(theta: &BTreeMap<Trigger, Type>) -> BTreeMap<Name, Type> {
    theta.iter().map(|(k, t)| (trigger_channel(k), Type::chan(t.clone()))).collect()
}

/// The plain environment `Δ, ⟦Θ⟧` a translated configuration lives in.
pub fn translated_env(env: &Env) -> Result<Env, TranslateError> {
    let mut channels = env.channels.clone();
    for (a, t) in translate_env(&env.triggers) {
        if channels.insert(a.clone(), t).is_some() {
            return Err(TranslateError::NameClash(a.to_string()));
        }
    }
    Ok(Env::with_channels(channels, BTreeMap::new()))
}

/// `⟦C⟧_Θ`: calls become output abstractions on the trigger channel and
/// resources become replicated servers.
pub fn translate_config(env: &Env, c: &Term) -> Result<Term, TranslateError> {
    check_config(env, c)?;
    translated_env(env)?;
    let reserved: BTreeSet<Name> = env.triggers.keys().map(trigger_channel).collect();
    let c =
        if c.all_names().iter().any(|a| reserved.contains(a)) { alpha_canonical_with(c, &reserved) } else { c.clone() };
    Ok(translate_term(&env.triggers, &c))
}

fn translate_term(theta: &BTreeMap<Trigger, Type>, t: &Term) -> Term {
    match t {
        Term::Call(k) => {
            let u = theta[k].clone();
            Term::lambda("x", u, Term::output(Term::Name(trigger_channel(k)), Term::var("x"), Term::Nil))
        }
        Term::Resource(k, v) => {
            let u = theta[k].clone();
            let serve = Term::app(translate_term(theta, v), Term::var("y"));
            Term::repl(Term::input(Term::Name(trigger_channel(k)), "y", u, serve))
        }
        other => other.map_children(|c| translate_term(theta, c)),
    }
}

/// `succ_∅ = δ!<()>.0` and `succ_{a:T} = δ!<a>.0`.
pub fn succ_process(delta_prime: &[(Name, Type)], succ: &Name) -> Result<Term, TranslateError> {
    let payload = match delta_prime {
        [] => Term::Unit,
        [(a, _)] => Term::Name(a.clone()),
        more => return Err(TranslateError::SuccArity(more.len())),
    };
    Ok(Term::output(Term::Name(succ.clone()), payload, Term::Nil))
}

/// `p ⊕ q` as a race on a private channel.
pub fn internal_choice(p: &Term, q: &Term) -> Term {
    let names: BTreeSet<Name> = p.all_names().into_iter().chain(q.all_names()).collect();
    let vars: BTreeSet<Var> = p.free_vars().into_iter().chain(q.free_vars()).collect();
    let c = Name::new(pick("c", |s| names.contains(&Name::new(s))));
    let x = pick("x", |s| vars.contains(&Var::new(s)));
    let ch = Term::Name(c.clone());
    let body = Term::par_all([
        Term::output(ch.clone(), Term::Unit, Term::Nil),
        Term::input(ch.clone(), &x, Type::Unit, p.clone()),
        Term::input(ch, &x, Type::Unit, q.clone()),
    ]);
    Term::New(c, Type::chan(Type::Unit), Box::new(body))
}

/// `if x ∉ names then P else Q` as a cascade of matches.
pub fn not_in_test(x: &Var, names: &[Name], then: &Term, otherwise: &Term) -> Term {
    match names {
        [] => then.clone(),
        [a, rest @ ..] => Term::matching(
            Term::Var(x.clone()),
            Term::Name(a.clone()),
            otherwise.clone(),
            not_in_test(x, rest, then, otherwise),
        ),
    }
}

/// Payload type carried by a label's subject.
fn subject_payload(env: &Env, d: &Subject) -> Result<Type, TranslateError> {
    match d {
        Subject::Chan(a) => {
            env.channels.get(a).and_then(Type::as_chan).ok_or_else(|| TranslateError::UnknownSubject(a.to_string()))
        }
        Subject::Trig(k) => env.triggers.get(k).cloned().ok_or_else(|| TranslateError::UnknownSubject(k.to_string())),
    }
}

fn subject_channel(d: &Subject) -> Term {
    match d {
        Subject::Chan(a) => Term::Name(a.clone()),
        Subject::Trig(k) => Term::Name(trigger_channel(k)),
    }
}

/// Type of the success channel for a label: `ch<T>` for bound-name rows,
/// `ch<unit>` otherwise.
pub fn succ_type(env: &Env, a: &Label) -> Result<Type, TranslateError> {
    match a {
        Label::BoundIn(d, _) | Label::BoundOut(d, _) => Ok(Type::chan(subject_payload(env, d)?)),
        Label::Tau => Err(TranslateError::Tau),
        _ => Ok(Type::chan(Type::Unit)),
    }
}

/// The process that signals on `succ` exactly when its partner performs
/// `a`. `dead` is reserved alongside `succ` and never used as a subject.
pub fn testing_context(env: &Env, a: &Label, succ: &Name, dead: &Name) -> Result<Term, TranslateError> {
    let known = translated_env(env)?;
    let mut taken: BTreeSet<Name> = known.channels.keys().cloned().collect();
    match a {
        Label::BoundIn(_, b) | Label::BoundOut(_, b) if !taken.insert(b.clone()) => {
            return Err(TranslateError::FreshnessViolation(b.to_string()));
        }
        Label::TrigIn(_, k) | Label::TrigOut(_, k)
            if env.triggers.contains_key(k) || !taken.insert(trigger_channel(k)) =>
        {
            return Err(TranslateError::FreshnessViolation(k.to_string()));
        }
        _ => {}
    }
    for s in [succ, dead] {
        if !taken.insert(s.clone()) {
            return Err(TranslateError::FreshnessViolation(s.to_string()));
        }
    }
    let ok = |payload: Term| Term::output(Term::Name(succ.clone()), payload, Term::Nil);
    let x = Var::new("x");
    let ill = || TranslateError::IllTypedLabel(a.to_string());
    let t = match a {
        Label::Tau => return Err(TranslateError::Tau),
        Label::In(d, v) => Term::output(subject_channel(d), v.to_term(), ok(Term::Unit)),
        Label::Out(d, v) => {
            let ty = subject_payload(env, d)?;
            let body = match v {
                FoValue::Unit => ok(Term::Unit),
                FoValue::Name(_) => Term::matching(Term::Var(x.clone()), v.to_term(), ok(Term::Unit), Term::Nil),
            };
            Term::input(subject_channel(d), "x", ty, body)
        }
        Label::BoundIn(d, b) => {
            let ty = subject_payload(env, d)?;
            let bn = Term::Name(b.clone());
            Term::New(b.clone(), ty, Box::new(Term::output(subject_channel(d), bn.clone(), ok(bn))))
        }
        Label::BoundOut(d, _) => {
            let ty = subject_payload(env, d)?;
            let same: Vec<Name> = known
                .channels
                .iter()
                .filter(|(_, t)| crate::typing::type_iso(t, &ty))
                .map(|(a, _)| a.clone())
                .collect();
            let body = not_in_test(&x, &same, &ok(Term::Var(x.clone())), &Term::Nil);
            Term::input(subject_channel(d), "x", ty, body)
        }
        Label::TrigIn(d, k) => {
            let u = subject_payload(env, d)?.as_abs().ok_or_else(ill)?;
            let serve = Term::lambda("x", u, Term::output(Term::Name(trigger_channel(k)), Term::var("x"), Term::Nil));
            Term::output(subject_channel(d), serve, ok(Term::Unit))
        }
        Label::TrigOut(d, k) => {
            let ty = subject_payload(env, d)?;
            let u = ty.as_abs().ok_or_else(ill)?;
            let server = Term::repl(Term::input(
                Term::Name(trigger_channel(k)),
                "y",
                u,
                Term::app(Term::var("x"), Term::var("y")),
            ));
            Term::input(subject_channel(d), "x", ty, Term::par(server, ok(Term::Unit)))
        }
    };
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeBudgets {
    pub max_steps: usize,
    pub max_states: usize,
    pub tau_budget: usize,
}

impl Default for ProbeBudgets {
    fn default() -> Self {
        ProbeBudgets { max_steps: 8, max_states: 4_000, tau_budget: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeResult {
    pub reached: bool,
    /// First success residue found, in breadth-first order.
    pub residue: Option<Term>,
    pub residues: BTreeSet<Term>,
    pub factorization_found: bool,
    pub dead_barbed: bool,
    pub truncated: bool,
    /// Targets of `⇒α⇒` in the transition system.
    pub lts_targets: usize,
}

impl ProbeResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "reached": self.reached,
            "residue": self.residue.as_ref().map(Term::to_string),
            "factorizationFound": self.factorization_found,
            "truncated": self.truncated,
        })
    }
}

/// Names that cannot be chosen for the success channels.
fn probe_taken(env: &Env, d: &Term, a: &Label) -> BTreeSet<Name> {
    let mut taken: BTreeSet<Name> = env.channels.keys().cloned().collect();
    taken.extend(env.triggers.keys().map(trigger_channel));
    taken.extend(d.all_names());
    match a {
        Label::BoundIn(_, b) | Label::BoundOut(_, b) => {
            taken.insert(b.clone());
        }
        Label::TrigIn(_, k) | Label::TrigOut(_, k) => {
            taken.insert(trigger_channel(k));
        }
        _ => {}
    }
    taken
}

/// The success and failure channels used when probing `d` with `a`: `delta`
/// and `dead` unless those names are taken.
pub fn probe_channels(env: &Env, d: &Term, a: &Label) -> (Name, Name) {
    let taken = probe_taken(env, d, a);
    let succ = Name::new(pick("delta", |s| taken.contains(&Name::new(s))));
    let dead = Name::new(pick("dead", |s| taken.contains(&Name::new(s)) || s == succ.as_str()));
    (succ, dead)
}

/// Splits `ν(succ!<payload>.0 | P)` into `P`, opening the restriction on an
/// extruded payload and renaming it to `bound`.
fn success_residue(state: &Term, succ: &Name, bound: Option<&Name>) -> Option<Term> {
    let mut soup = Soup::of(state, &mut Fresh::for_term(state));
    let pos = soup
        .comps
        .iter()
        .position(|t| matches!(t, Term::Output(s, _, k) if **s == Term::Name(succ.clone()) && **k == Term::Nil))?;
    let Term::Output(_, payload, _) = soup.comps.remove(pos) else { unreachable!() };
    if let (Term::Name(p), Some(b)) = (&*payload, bound) {
        if soup.binders.iter().any(|(n, _)| n == p) {
            soup.binders.retain(|(n, _)| n != p);
            soup.comps = soup.comps.iter().map(|t| t.rename_name(p, b)).collect();
        }
    }
    Some(struct_normal(&soup.assemble()))
}

fn has_output_on(state: &Term, c: &Name) -> bool {
    let soup = Soup::of(state, &mut Fresh::for_term(state));
    soup.comps.iter().any(|t| matches!(t, Term::Output(s, _, _) if **s == Term::Name(c.clone())))
}

/// Runs `T(α) | ⟦D⟧` and compares what it observes with `D ⇒α⇒ D'` in the
/// transition system.
pub fn probe_label(env: &Env, d: &Term, a: &Label, budgets: ProbeBudgets) -> Result<ProbeResult, TranslateError> {
    if !d.is_balanced() {
        return Err(TranslateError::NotBalanced);
    }
    let (succ, dead) = probe_channels(env, d, a);
    let test = testing_context(env, a, &succ, &dead)?;
    let system = Term::par(test, translate_config(env, d)?);
    let reach = reduce_multi(&system, budgets.max_steps, budgets.max_states);

    let bound = match a {
        Label::BoundIn(_, b) | Label::BoundOut(_, b) => Some(b),
        _ => None,
    };
    let mut residue = None;
    let mut residues = BTreeSet::new();
    let mut dead_barbed = false;
    for s in reach.terms() {
        dead_barbed |= has_output_on(s, &dead);
        if let Some(p) = success_residue(s, &succ, bound) {
            residue.get_or_insert_with(|| p.clone());
            residues.insert(p);
        }
    }

    let node = TypedNode::from_env(env, d);
    let after = weak_after(&node, a, budgets.tau_budget);
    let mut factorization_found = false;
    'outer: for target in &after.nodes {
        let plain = translate_config(&target.env(), &target.config)?;
        let (closure, _) = housekeeping_closure(&plain, 256);
        for p in &closure {
            if residues.contains(&struct_normal(p)) {
                factorization_found = true;
                break 'outer;
            }
        }
    }
    Ok(ProbeResult {
        reached: residue.is_some(),
        residue,
        residues,
        factorization_found,
        dead_barbed,
        truncated: reach.truncated || after.truncated,
        lts_targets: after.nodes.len(),
    })
}
