use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::normal::struct_normal;
use super::soup::{canonical_copies, Expansion, Fresh, Loc};
use crate::syntax::{Name, Term, Type};
use crate::typing::{type_iso, Env};

/// Replication copies examined per redex search, and how deeply nested
/// replications are unfolded.
const COPIES: usize = 2;
const NESTING: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    #[serde(rename = "comm")]
    Comm,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "cond-tt")]
    CondTT,
    #[serde(rename = "cond-ff")]
    CondFF,
    #[serde(rename = "h")]
    Housekeeping,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Comm => "comm",
            Rule::Beta => "beta",
            Rule::CondTT => "cond-tt",
            Rule::CondFF => "cond-ff",
            Rule::Housekeeping => "h",
        })
    }
}

/// Redex position: one location for single-component rules, output then
/// input for communication.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RedexPath(pub Vec<Loc>);

impl fmt::Display for RedexPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub source: Term,
    /// Normal form of the reduct.
    pub target: Term,
    pub rule: Rule,
    pub path: RedexPath,
}

/// Contracts a single-component redex.
fn contract(t: &Term, housekeeping_only: bool) -> Option<(Rule, Term)> {
    match t {
        Term::App(f, v) => match &**f {
            Term::Lambda(x, _, body) if v.is_value() => {
                let out = body.subst_value(x, v).ok()?;
                if is_housekeeping(t) {
                    Some((Rule::Housekeeping, out))
                } else if housekeeping_only {
                    None
                } else {
                    Some((Rule::Beta, out))
                }
            }
            _ => None,
        },
        Term::Match(l, r, then, otherwise) if !housekeeping_only => match (&**l, &**r) {
            (Term::Name(a), Term::Name(b)) if a == b => Some((Rule::CondTT, (**then).clone())),
            (Term::Name(_), Term::Name(_)) => Some((Rule::CondFF, (**otherwise).clone())),
            _ => None,
        },
        _ => None,
    }
}

/// `(\x:T -> k!<x>.0)(v)` with `k` a channel name.
fn is_housekeeping(t: &Term) -> bool {
    let Term::App(f, _) = t else { return false };
    let Term::Lambda(x, _, body) = &**f else { return false };
    matches!(&**body, Term::Output(s, p, k)
        if matches!(**s, Term::Name(_)) && **p == Term::Var(x.clone()) && **k == Term::Nil)
}

struct Redex {
    rule: Rule,
    path: RedexPath,
    edits: BTreeMap<Loc, Term>,
}

fn redexes(exp: &Expansion, housekeeping_only: bool) -> Vec<Redex> {
    let leaves = exp.leaves();
    let mut out = Vec::new();
    for (loc, t) in &leaves {
        if loc.hops.iter().any(|&(_, c)| c != 0) {
            continue;
        }
        if let Some((rule, res)) = contract(t, housekeeping_only) {
            let rule = if housekeeping_only {
                Rule::Housekeeping
            } else if rule == Rule::Housekeeping {
                Rule::Beta
            } else {
                rule
            };
            out.push(Redex { rule, path: RedexPath(vec![loc.clone()]), edits: BTreeMap::from([(loc.clone(), res)]) });
        }
    }
    if housekeeping_only {
        return out;
    }
    for (lo, to) in &leaves {
        let Term::Output(s, v, cont) = to else { continue };
        let Term::Name(a) = &**s else { continue };
        for (li, ti) in &leaves {
            if lo == li {
                continue;
            }
            let Term::Input(s2, x, ty, body) = ti else { continue };
            if **s2 != Term::Name(a.clone()) || !canonical_copies(&[lo, li]) {
                continue;
            }
            let applied = Term::app(Term::Lambda(x.clone(), ty.clone(), body.clone()), (**v).clone());
            out.push(Redex {
                rule: Rule::Comm,
                path: RedexPath(vec![lo.clone(), li.clone()]),
                edits: BTreeMap::from([(lo.clone(), (**cont).clone()), (li.clone(), applied)]),
            });
        }
    }
    out
}

fn steps(c: &Term, housekeeping_only: bool) -> Vec<ReductionStep> {
    let mut fresh = Fresh::for_term(c);
    let exp = Expansion::of(c, &mut fresh, COPIES, NESTING);
    redexes(&exp, housekeeping_only)
        .into_iter()
        .map(|r| ReductionStep {
            source: c.clone(),
            target: struct_normal(&exp.materialize(&r.edits).assemble()),
            rule: r.rule,
            path: r.path,
        })
        .collect()
}

/// All one-step reductions of `c`, each with its rule and redex position.
/// Replications are unfolded on demand.
pub fn reduce_step(c: &Term) -> Vec<ReductionStep> {
    steps(c, false)
}

/// Distinct one-step reducts in normal form.
pub fn reducts(c: &Term) -> BTreeSet<Term> {
    reduce_step(c).into_iter().map(|s| s.target).collect()
}

/// Reapplies `rule` at `path` in `source`, independently of the search
/// that produced the step.
pub fn apply_step(source: &Term, rule: Rule, path: &RedexPath) -> Option<Term> {
    let mut fresh = Fresh::for_term(source);
    let exp = Expansion::of(source, &mut fresh, COPIES, NESTING);
    let leaves = exp.leaves();
    let at = |l: &Loc| leaves.iter().find(|(m, _)| m == l).map(|(_, t)| *t);
    let mut edits = BTreeMap::new();
    match (rule, path.0.as_slice()) {
        (Rule::Comm, [lo, li]) => {
            let (Term::Output(s, v, cont), Term::Input(s2, x, ty, body)) = (at(lo)?, at(li)?) else {
                return None;
            };
            if s != s2 || !matches!(**s, Term::Name(_)) {
                return None;
            }
            edits.insert(lo.clone(), (**cont).clone());
            edits.insert(li.clone(), Term::app(Term::Lambda(x.clone(), ty.clone(), body.clone()), (**v).clone()));
        }
        (Rule::Beta | Rule::Housekeeping, [l]) => {
            let t = at(l)?;
            if rule == Rule::Housekeeping && !is_housekeeping(t) {
                return None;
            }
            let Term::App(f, v) = t else { return None };
            let Term::Lambda(x, _, body) = &**f else { return None };
            edits.insert(l.clone(), body.subst_value(x, v).ok()?);
        }
        (Rule::CondTT | Rule::CondFF, [l]) => {
            let Term::Match(a, b, then, otherwise) = at(l)? else { return None };
            let (Term::Name(a), Term::Name(b)) = (&**a, &**b) else { return None };
            let branch = match (rule, a == b) {
                (Rule::CondTT, true) => then,
                (Rule::CondFF, false) => otherwise,
                _ => return None,
            };
            edits.insert(l.clone(), (**branch).clone());
        }
        _ => return None,
    }
    Some(struct_normal(&exp.materialize(&edits).assemble()))
}

/// One-step housekeeping reductions `(\x:T -> k!<x>.0)(v) → k!<v>.0` in
/// evaluation contexts.
pub fn housekeeping_step(p: &Term) -> BTreeSet<Term> {
    steps(p, true).into_iter().map(|s| s.target).collect()
}

/// Everything reachable by zero or more housekeeping steps.
pub fn housekeeping_closure(p: &Term, max_states: usize) -> (BTreeSet<Term>, bool) {
    let start = struct_normal(p);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(t) = queue.pop_front() {
        for u in housekeeping_step(&t) {
            if seen.len() >= max_states {
                return (seen, true);
            }
            if seen.insert(u.clone()) {
                queue.push_back(u);
            }
        }
    }
    (seen, false)
}

/// Result of bounded breadth-first exploration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reachable {
    /// Normal forms in discovery order, with their distance from the start.
    pub states: Vec<(Term, usize)>,
    /// Set when a step or state bound cut exploration short.
    pub truncated: bool,
}

impl Reachable {
    pub fn contains(&self, t: &Term) -> bool {
        self.states.iter().any(|(s, _)| s == t)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.states.iter().map(|(t, _)| t)
    }
}

/// All configurations reachable in at most `max_steps` reductions, up to
/// structural equivalence, visiting at most `max_states` of them.
pub fn reduce_multi(c: &Term, max_steps: usize, max_states: usize) -> Reachable {
    let start = struct_normal(c);
    let mut index: BTreeMap<Term, usize> = BTreeMap::from([(start.clone(), 0)]);
    let mut states = vec![(start, 0usize)];
    let mut next = 0;
    let mut truncated = false;
    while next < states.len() {
        let (t, d) = states[next].clone();
        next += 1;
        for u in reducts(&t) {
            if index.contains_key(&u) {
                continue;
            }
            if d >= max_steps || states.len() >= max_states {
                truncated = true;
                continue;
            }
            index.insert(u.clone(), states.len());
            states.push((u, d + 1));
        }
    }
    Reachable { states, truncated }
}

/// Channels `a` with `env(a) ~iso ch<unit>` on which `c` can output after at
/// most `max_steps` reductions, outside the scope of any restriction.
pub fn barbs(env: &Env, c: &Term, max_steps: usize) -> BTreeSet<Name> {
    barbs_bounded(env, c, max_steps, 2_000)
}

pub fn barbs_bounded(env: &Env, c: &Term, max_steps: usize, max_states: usize) -> BTreeSet<Name> {
    let unit_chan = Type::chan(Type::Unit);
    let mut out = BTreeSet::new();
    for t in reduce_multi(c, max_steps, max_states).terms() {
        out.extend(
            immediate_outputs(t).into_iter().filter(|a| env.channels.get(a).is_some_and(|ty| type_iso(ty, &unit_chan))),
        );
    }
    out
}

/// Free channels carrying a top-level unit output, replication bodies
/// included.
fn immediate_outputs(t: &Term) -> BTreeSet<Name> {
    let mut fresh = Fresh::for_term(t);
    let exp = Expansion::of(t, &mut fresh, 1, NESTING);
    let mut out = BTreeSet::new();
    for (loc, leaf) in exp.leaves() {
        if let Term::Output(s, p, _) = leaf {
            if let (Term::Name(a), Term::Unit) = (&**s, &**p) {
                if !exp.binders_along(&loc).iter().any(|(b, _)| b == a) {
                    out.insert(a.clone());
                }
            }
        }
    }
    out
}

/// Renders a reduction sequence, one `rule @ path : term` line per step.
pub fn format_trace(steps: &[ReductionStep]) -> String {
    steps.iter().map(|s| format!("{} @ {} : {}\n", s.rule, s.path, s.target)).collect()
}

#[derive(Serialize)]
struct TraceEntry {
    rule: Rule,
    path: String,
    term: String,
}

/// JSON array of `{rule, path, term}` objects.
pub fn trace_json(steps: &[ReductionStep]) -> serde_json::Value {
    let entries: Vec<TraceEntry> = steps
        .iter()
        .map(|s| TraceEntry { rule: s.rule, path: s.path.to_string(), term: s.target.to_string() })
        .collect();
    serde_json::to_value(entries).expect("trace entries serialise")
}

/// Follows the first available step repeatedly, at most `max_steps` times.
pub fn first_trace(c: &Term, max_steps: usize) -> Vec<ReductionStep> {
    let mut out = Vec::new();
    let mut cur = struct_normal(c);
    for _ in 0..max_steps {
        let Some(step) = reduce_step(&cur).into_iter().next() else { break };
        cur = step.target.clone();
        out.push(step);
    }
    out
}
