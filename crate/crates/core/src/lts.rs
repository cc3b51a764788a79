//! The augmented labelled transition system over typed configurations.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::reduction::soup::{Expansion, Fresh, Loc};
use crate::reduction::{reduce_step, struct_normal_with};
use crate::syntax::{Name, Term, Trigger, Type};
use crate::typing::{check_config, type_iso, Env, TypeError};

/// How deeply nested replications are unfolded when looking for actions.
const NESTING: usize = 2;
/// States visited per weak closure before giving up.
const CLOSURE_STATES: usize = 4_000;

/// Subject of a visible action: a channel or a trigger identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Chan(Name),
    Trig(Trigger),
}

impl Subject {
    pub fn as_str(&self) -> &str {
        match self {
            Subject::Chan(a) => a.as_str(),
            Subject::Trig(k) => k.as_str(),
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// First-order payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoValue {
    Unit,
    Name(Name),
}

impl FoValue {
    pub fn to_term(&self) -> Term {
        match self {
            FoValue::Unit => Term::Unit,
            FoValue::Name(a) => Term::Name(a.clone()),
        }
    }
}

impl fmt::Display for FoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoValue::Unit => f.write_str("()"),
            FoValue::Name(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau,
    In(Subject, FoValue),
    Out(Subject, FoValue),
    BoundIn(Subject, Name),
    BoundOut(Subject, Name),
    TrigIn(Subject, Trigger),
    TrigOut(Subject, Trigger),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("tau has no complement")]
    Tau,
    #[error("cannot read label `{0}`")]
    Syntax(String),
}

impl Label {
    pub fn is_visible(&self) -> bool {
        *self != Label::Tau
    }

    pub fn subject(&self) -> Option<&Subject> {
        match self {
            Label::Tau => None,
            Label::In(d, _)
            | Label::Out(d, _)
            | Label::BoundIn(d, _)
            | Label::BoundOut(d, _)
            | Label::TrigIn(d, _)
            | Label::TrigOut(d, _) => Some(d),
        }
    }

    /// The class name used in reports: `in`, `out`, `bound-in`, ...
    pub fn class(&self) -> &'static str {
        match self {
            Label::Tau => "tau",
            Label::In(..) => "in",
            Label::Out(..) => "out",
            Label::BoundIn(..) => "bound-in",
            Label::BoundOut(..) => "bound-out",
            Label::TrigIn(..) => "trig-in",
            Label::TrigOut(..) => "trig-out",
        }
    }

    /// Parses the printed form of a label. Subjects declared in `triggers`
    /// are read as trigger identifiers, everything else as channels.
    pub fn parse(s: &str, triggers: &BTreeSet<Trigger>) -> Result<Label, LabelError> {
        let err = || LabelError::Syntax(s.to_string());
        let s = s.trim();
        if s == "tau" {
            return Ok(Label::Tau);
        }
        let subject = |d: &str| -> Result<Subject, LabelError> {
            if !is_ident(d) {
                return Err(err());
            }
            Ok(if triggers.contains(&Trigger::new(d)) {
                Subject::Trig(Trigger::new(d))
            } else {
                Subject::Chan(Name::new(d))
            })
        };
        if let Some(rest) = s.strip_prefix('(') {
            let (b, rest) = rest.split_once(')').ok_or_else(err)?;
            let (d, dir, payload) = split_action(rest).ok_or_else(err)?;
            if payload != b || !is_ident(b) {
                return Err(err());
            }
            let b = Name::new(b);
            return Ok(if dir == '?' { Label::BoundIn(subject(d)?, b) } else { Label::BoundOut(subject(d)?, b) });
        }
        let (d, dir, payload) = split_action(s).ok_or_else(err)?;
        let d = subject(d)?;
        let inner = payload.strip_prefix('(').and_then(|p| p.strip_suffix(')'));
        let fo = match (payload, inner) {
            ("()" | "(())", _) => Some(FoValue::Unit),
            (_, Some(k)) if is_ident(k) => {
                let k = Trigger::new(k);
                return Ok(if dir == '?' { Label::TrigIn(d, k) } else { Label::TrigOut(d, k) });
            }
            (p, None) if is_ident(p) => Some(FoValue::Name(Name::new(p))),
            _ => None,
        }
        .ok_or_else(err)?;
        Ok(if dir == '?' { Label::In(d, fo) } else { Label::Out(d, fo) })
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn split_action(s: &str) -> Option<(&str, char, &str)> {
    let i = s.find(['?', '!'])?;
    let dir = s[i..].chars().next()?;
    Some((&s[..i], dir, &s[i + 1..]))
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::In(d, v) => write!(f, "{d}?{v}"),
            Label::Out(d, v) => write!(f, "{d}!{v}"),
            Label::BoundIn(d, b) => write!(f, "({b}){d}?{b}"),
            Label::BoundOut(d, b) => write!(f, "({b}){d}!{b}"),
            Label::TrigIn(d, k) => write!(f, "{d}?({k})"),
            Label::TrigOut(d, k) => write!(f, "{d}!({k})"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Swaps input and output.
pub fn complement(a: &Label) -> Result<Label, LabelError> {
    Ok(match a.clone() {
        Label::Tau => return Err(LabelError::Tau),
        Label::In(d, v) => Label::Out(d, v),
        Label::Out(d, v) => Label::In(d, v),
        Label::BoundIn(d, b) => Label::BoundOut(d, b),
        Label::BoundOut(d, b) => Label::BoundIn(d, b),
        Label::TrigIn(d, k) => Label::TrigOut(d, k),
        Label::TrigOut(d, k) => Label::TrigIn(d, k),
    })
}

/// An LTS node `(Δ ; Θ ⊢ C)` with `C` in structural normal form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedNode {
    pub delta: BTreeMap<Name, Type>,
    pub theta: BTreeMap<Trigger, Type>,
    pub config: Term,
}

impl TypedNode {
    pub fn new(delta: BTreeMap<Name, Type>, theta: BTreeMap<Trigger, Type>, config: &Term) -> TypedNode {
        let reserved: BTreeSet<Name> = delta.keys().cloned().collect();
        let config = struct_normal_with(config, &reserved);
        TypedNode { delta, theta, config }
    }

    pub fn from_env(env: &Env, config: &Term) -> TypedNode {
        TypedNode::new(env.channels.clone(), env.triggers.clone(), config)
    }

    pub fn env(&self) -> Env {
        Env::with_channels(self.delta.clone(), self.theta.clone())
    }

    /// `Δ ; Θ ⊢ C`.
    pub fn check(&self) -> Result<(), TypeError> {
        check_config(&self.env(), &self.config)
    }

    fn with(&self, delta: Option<(Name, Type)>, theta: Option<(Trigger, Type)>, config: &Term) -> TypedNode {
        let mut d = self.delta.clone();
        let mut t = self.theta.clone();
        d.extend(delta);
        t.extend(theta);
        TypedNode::new(d, t, config)
    }
}

impl fmt::Display for TypedNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d: Vec<String> = self.delta.iter().map(|(a, t)| format!("{a}:{t}")).collect();
        let t: Vec<String> = self.theta.iter().map(|(k, u)| format!("{k}:{u}")).collect();
        let part = |xs: Vec<String>| if xs.is_empty() { "-".to_string() } else { xs.join(", ") };
        write!(f, "{} ; {} |- {}", part(d), part(t), self.config)
    }
}

/// Outgoing transitions of one node.
pub type Edges = Rc<Vec<(Label, TypedNode)>>;

/// Deterministic source of fresh identifiers for a node: the first `b{i}`
/// outside Δ and the first `k{i}` outside Θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocator {
    pub channel: Name,
    pub trigger: Trigger,
}

impl Allocator {
    pub fn for_node(n: &TypedNode) -> Allocator {
        let taken: BTreeSet<Name> = n.delta.keys().cloned().chain(n.config.all_names()).collect();
        let channel = (0..).map(|i| Name::new(format!("b{i}"))).find(|b| !taken.contains(b)).expect("unbounded");
        let trigger = (0..)
            .map(|i| Trigger::new(format!("k{i}")))
            .find(|k| !n.theta.contains_key(k) && !n.config.calls().contains(k))
            .expect("unbounded");
        Allocator { channel, trigger }
    }
}

struct Site<'a> {
    exp: &'a Expansion,
    loc: Loc,
}

impl Site<'_> {
    fn rebuild(&self, leaf: Term) -> Term {
        self.exp.materialize(&BTreeMap::from([(self.loc.clone(), leaf)])).assemble()
    }

    /// Replaces the leaf and opens the restriction on `old`, renaming it
    /// to `new`.
    fn rebuild_extruding(&self, leaf: Term, old: &Name, new: &Name) -> Term {
        let mut soup = self.exp.materialize(&BTreeMap::from([(self.loc.clone(), leaf)]));
        soup.binders.retain(|(b, _)| b != old);
        soup.comps = soup.comps.iter().map(|c| c.rename_name(old, new)).collect();
        soup.assemble()
    }
}

/// Every transition of `n` under the canonical allocator, sorted.
pub fn derive_transitions(n: &TypedNode) -> Vec<(Label, TypedNode)> {
    let mut out: BTreeSet<(Label, TypedNode)> = BTreeSet::new();
    for step in reduce_step(&n.config) {
        out.insert((Label::Tau, n.with(None, None, &step.target)));
    }
    let alloc = Allocator::for_node(n);
    let mut fresh = Fresh::for_term(&n.config);
    let exp = Expansion::of(&n.config, &mut fresh, 1, NESTING);
    for (loc, leaf) in exp.leaves() {
        let bound: BTreeSet<Name> = exp.binders_along(&loc).into_iter().map(|(b, _)| b).collect();
        let site = Site { exp: &exp, loc };
        match leaf {
            Term::Input(s, x, ty, body) => {
                let Term::Name(a) = &**s else { continue };
                if bound.contains(a) {
                    continue;
                }
                let Some(payload) = n.delta.get(a).and_then(Type::as_chan) else { continue };
                let apply = |v: Term| Term::app(Term::Lambda(x.clone(), ty.clone(), body.clone()), v);
                input_family(n, &alloc, Subject::Chan(a.clone()), &payload, apply, &site, &mut out);
            }
            Term::Output(s, v, cont) => {
                let Term::Name(a) = &**s else { continue };
                if bound.contains(a) {
                    continue;
                }
                let Some(payload) = n.delta.get(a).and_then(Type::as_chan) else { continue };
                let d = Subject::Chan(a.clone());
                output_family(n, &alloc, d, &payload, v, (**cont).clone(), &bound, &site, &mut out);
            }
            Term::App(f, v) => {
                let Term::Call(k) = &**f else { continue };
                let Some(u) = n.theta.get(k) else { continue };
                output_family(n, &alloc, Subject::Trig(k.clone()), u, v, Term::Nil, &bound, &site, &mut out);
            }
            Term::Resource(k, v) => {
                let Some(u) = n.theta.get(k) else { continue };
                let keep = Term::Resource(k.clone(), v.clone());
                let apply = |w: Term| Term::par(Term::app((**v).clone(), w), keep.clone());
                input_family(n, &alloc, Subject::Trig(k.clone()), u, apply, &site, &mut out);
            }
            _ => {}
        }
    }
    out.into_iter().collect()
}

/// Inputs at payload type `ty`: a fresh trigger at abstraction type, else
/// unit, the Δ names of matching type and one fresh name.
fn input_family(
    n: &TypedNode,
    alloc: &Allocator,
    d: Subject,
    ty: &Type,
    apply: impl Fn(Term) -> Term,
    site: &Site<'_>,
    out: &mut BTreeSet<(Label, TypedNode)>,
) {
    match ty.head_normal() {
        Type::Abs(u) => {
            let k = alloc.trigger.clone();
            let target = site.rebuild(apply(Term::Call(k.clone())));
            out.insert((Label::TrigIn(d, k.clone()), n.with(None, Some((k, *u)), &target)));
        }
        Type::Unit => {
            let target = site.rebuild(apply(Term::Unit));
            out.insert((Label::In(d, FoValue::Unit), n.with(None, None, &target)));
        }
        _ => {
            for (b, bt) in &n.delta {
                if type_iso(bt, ty) {
                    let target = site.rebuild(apply(Term::Name(b.clone())));
                    out.insert((Label::In(d.clone(), FoValue::Name(b.clone())), n.with(None, None, &target)));
                }
            }
            let b = alloc.channel.clone();
            let target = site.rebuild(apply(Term::Name(b.clone())));
            out.insert((Label::BoundIn(d, b.clone()), n.with(Some((b, ty.clone())), None, &target)));
        }
    }
}

/// Outputs of value `v` at payload type `ty`, continuing as `cont`.
#[allow(clippy::too_many_arguments)]
fn output_family(
    n: &TypedNode,
    alloc: &Allocator,
    d: Subject,
    ty: &Type,
    v: &Term,
    cont: Term,
    bound: &BTreeSet<Name>,
    site: &Site<'_>,
    out: &mut BTreeSet<(Label, TypedNode)>,
) {
    match (v, ty.head_normal()) {
        (Term::Lambda(..) | Term::Call(_), Type::Abs(u)) => {
            let k = alloc.trigger.clone();
            let leaf = Term::par(Term::Resource(k.clone(), Box::new(v.clone())), cont);
            let target = site.rebuild(leaf);
            out.insert((Label::TrigOut(d, k.clone()), n.with(None, Some((k, *u)), &target)));
        }
        (Term::Unit, _) => {
            out.insert((Label::Out(d, FoValue::Unit), n.with(None, None, &site.rebuild(cont))));
        }
        (Term::Name(b), _) if bound.contains(b) => {
            let fresh = alloc.channel.clone();
            let target = site.rebuild_extruding(cont, b, &fresh);
            out.insert((Label::BoundOut(d, fresh.clone()), n.with(Some((fresh, ty.clone())), None, &target)));
        }
        (Term::Name(b), _) => {
            let label = Label::Out(d, FoValue::Name(b.clone()));
            out.insert((label, n.with(None, None, &site.rebuild(cont))));
        }
        _ => {}
    }
}

/// A set of nodes, flagged when a budget cut the search short.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeakSet {
    pub nodes: BTreeSet<TypedNode>,
    pub truncated: bool,
}

/// Transition cache shared by weak-transition and bisimulation queries.
#[derive(Default)]
pub struct Lts {
    cache: RefCell<HashMap<TypedNode, Edges>>,
}

impl Lts {
    pub fn new() -> Lts {
        Lts::default()
    }

    pub fn transitions(&self, n: &TypedNode) -> Edges {
        if let Some(ts) = self.cache.borrow().get(n) {
            return ts.clone();
        }
        let ts = Rc::new(derive_transitions(n));
        self.cache.borrow_mut().insert(n.clone(), ts.clone());
        ts
    }

    /// Nodes reachable by at most `budget` τ-steps.
    pub fn tau_closure(&self, n: &TypedNode, budget: usize) -> WeakSet {
        let mut nodes = BTreeSet::from([n.clone()]);
        let mut queue = VecDeque::from([(n.clone(), 0usize)]);
        let mut truncated = false;
        while let Some((m, d)) = queue.pop_front() {
            for (l, t) in self.transitions(&m).iter() {
                if *l != Label::Tau || nodes.contains(t) {
                    continue;
                }
                if d >= budget || nodes.len() >= CLOSURE_STATES {
                    truncated = true;
                    continue;
                }
                nodes.insert(t.clone());
                queue.push_back((t.clone(), d + 1));
            }
        }
        WeakSet { nodes, truncated }
    }

    /// `n ⇒ --a--> ⇒`, or the τ-closure when `a` is τ.
    pub fn weak_after(&self, n: &TypedNode, a: &Label, budget: usize) -> WeakSet {
        let before = self.tau_closure(n, budget);
        if *a == Label::Tau {
            return before;
        }
        let mut out = WeakSet { nodes: BTreeSet::new(), truncated: before.truncated };
        for m in &before.nodes {
            for (l, t) in self.transitions(m).iter() {
                if l == a {
                    let after = self.tau_closure(t, budget);
                    out.truncated |= after.truncated;
                    out.nodes.extend(after.nodes);
                }
            }
        }
        out
    }

    /// Visible labels available after internal steps, with their targets.
    pub fn weak_labels(&self, n: &TypedNode, budget: usize) -> (BTreeSet<Label>, bool) {
        let closure = self.tau_closure(n, budget);
        let labels = closure
            .nodes
            .iter()
            .flat_map(|m| self.transitions(m).iter().map(|(l, _)| l.clone()).collect::<Vec<_>>())
            .filter(Label::is_visible)
            .collect();
        (labels, closure.truncated)
    }
}

pub fn weak_after(n: &TypedNode, a: &Label, budget: usize) -> WeakSet {
    Lts::new().weak_after(n, a, budget)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtsGraph {
    pub nodes: Vec<TypedNode>,
    pub edges: Vec<(usize, Label, usize)>,
    pub root: usize,
    pub truncated: bool,
}

/// Breadth-first exploration to `depth` transitions, keeping at most
/// `max_nodes` nodes.
pub fn build_lts(root: &TypedNode, depth: usize, max_nodes: usize) -> LtsGraph {
    let mut index: HashMap<TypedNode, usize> = HashMap::from([(root.clone(), 0)]);
    let mut nodes = vec![root.clone()];
    let mut level = vec![0usize];
    let mut edges = Vec::new();
    let mut truncated = false;
    let mut next = 0;
    while next < nodes.len() {
        let id = next;
        next += 1;
        let ts = derive_transitions(&nodes[id]);
        if level[id] >= depth {
            truncated |= !ts.is_empty();
            continue;
        }
        for (l, t) in ts {
            let dst = match index.get(&t) {
                Some(&j) => j,
                None if nodes.len() >= max_nodes => {
                    truncated = true;
                    continue;
                }
                None => {
                    let j = nodes.len();
                    index.insert(t.clone(), j);
                    nodes.push(t);
                    level.push(level[id] + 1);
                    j
                }
            };
            edges.push((id, l, dst));
        }
    }
    LtsGraph { nodes, edges, root: 0, truncated }
}

fn env_json<K: fmt::Display>(m: &BTreeMap<K, Type>) -> serde_json::Value {
    m.iter().map(|(k, t)| (k.to_string(), json!(t.to_string()))).collect::<serde_json::Map<_, _>>().into()
}

impl LtsGraph {
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                json!({"id": i, "delta": env_json(&n.delta), "theta": env_json(&n.theta), "term": n.config.to_string()})
            })
            .collect();
        let edges: Vec<_> =
            self.edges.iter().map(|(s, l, d)| json!({"src": s, "label": l.to_string(), "dst": d})).collect();
        json!({"nodes": nodes, "edges": edges, "root": self.root, "truncated": self.truncated})
    }
}
