//! Flattened views of a configuration in evaluation position.
//!
//! A *soup* lists the restrictions of an evaluation context (renamed apart)
//! together with its non-parallel components. An *expansion* additionally
//! unfolds replications into explicit copies on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{Name, Term, Type};

/// Supplies internal names `%0, %1, ...` that never clash with parsed input.
pub(crate) struct Fresh {
    next: usize,
}

impl Fresh {
    pub fn for_term(t: &Term) -> Fresh {
        let mut next = 0;
        for a in t.all_names() {
            if let Some(n) = a.as_str().strip_prefix('%').and_then(|s| s.parse::<usize>().ok()) {
                next = next.max(n + 1);
            }
        }
        Fresh { next }
    }

    pub fn name(&mut self) -> Name {
        let n = Name::new(format!("%{}", self.next));
        self.next += 1;
        n
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Soup {
    pub binders: Vec<(Name, Type)>,
    pub comps: Vec<Term>,
}

impl Soup {
    pub fn of(t: &Term, fresh: &mut Fresh) -> Soup {
        let mut s = Soup::default();
        s.absorb(t, fresh);
        s
    }

    fn absorb(&mut self, t: &Term, fresh: &mut Fresh) {
        match t {
            Term::Nil => {}
            Term::Par(l, r) => {
                self.absorb(l, fresh);
                self.absorb(r, fresh);
            }
            Term::New(a, ty, body) => {
                let b = fresh.name();
                self.binders.push((b.clone(), ty.clone()));
                self.absorb(&body.rename_name_fresh(a, &b), fresh);
            }
            other => self.comps.push(other.clone()),
        }
    }

    /// Drops restrictions no component mentions.
    pub fn collect_garbage(&mut self) {
        let used: BTreeSet<Name> = self.comps.iter().flat_map(Term::free_names).collect();
        self.binders.retain(|(b, _)| used.contains(b));
    }

    pub fn assemble(&self) -> Term {
        let mut t = Term::par_all(self.comps.iter().cloned());
        for (b, ty) in self.binders.iter().rev() {
            t = Term::New(b.clone(), ty.clone(), Box::new(t));
        }
        t
    }
}

/// Position of a component inside an expansion: the replication copies
/// traversed, then the index within the innermost soup.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub hops: Vec<(usize, usize)>,
    pub leaf: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in &self.hops {
            write!(f, "{i}[{c}].")?;
        }
        write!(f, "{}", self.leaf)
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Leaf(Term),
    Repl { body: Term, copies: Vec<Expansion> },
}

#[derive(Clone, Debug)]
pub(crate) struct Expansion {
    pub binders: Vec<(Name, Type)>,
    pub nodes: Vec<Node>,
}

impl Expansion {
    /// Flattens `t` and gives each replication `copies` unfolded copies,
    /// recursively up to `depth` nested replications.
    pub fn of(t: &Term, fresh: &mut Fresh, copies: usize, depth: usize) -> Expansion {
        let soup = Soup::of(t, fresh);
        let nodes = soup
            .comps
            .into_iter()
            .map(|c| match c {
                Term::Repl(body) if depth > 0 => Node::Repl {
                    copies: (0..copies).map(|_| Expansion::of(&body, fresh, copies, depth - 1)).collect(),
                    body: *body,
                },
                other => Node::Leaf(other),
            })
            .collect();
        Expansion { binders: soup.binders, nodes }
    }

    /// All leaves with their locations; a leaf that is itself an
    /// un-unfolded replication is reported as such.
    pub fn leaves(&self) -> Vec<(Loc, &Term)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut Vec::new(), &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, hops: &mut Vec<(usize, usize)>, out: &mut Vec<(Loc, &'a Term)>) {
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Leaf(t) => out.push((Loc { hops: hops.clone(), leaf: i }, t)),
                Node::Repl { copies, .. } => {
                    for (c, e) in copies.iter().enumerate() {
                        hops.push((i, c));
                        e.collect_leaves(hops, out);
                        hops.pop();
                    }
                }
            }
        }
    }

    /// Binders of every copy along `loc`, innermost last.
    pub fn binders_along(&self, loc: &Loc) -> Vec<(Name, Type)> {
        let mut out = self.binders.clone();
        let mut cur = self;
        for &(i, c) in &loc.hops {
            match &cur.nodes[i] {
                Node::Repl { copies, .. } => {
                    cur = &copies[c];
                    out.extend(cur.binders.iter().cloned());
                }
                Node::Leaf(_) => break,
            }
        }
        out
    }

    /// Rebuilds a flat soup in which the leaves in `edits` are replaced.
    /// Copies touched by an edit are materialised next to their
    /// replication, with their restrictions lifted to the top.
    pub fn materialize(&self, edits: &BTreeMap<Loc, Term>) -> Soup {
        let mut soup = Soup { binders: self.binders.clone(), comps: Vec::new() };
        self.emit(&mut Vec::new(), edits, &mut soup);
        soup
    }

    fn emit(&self, hops: &mut Vec<(usize, usize)>, edits: &BTreeMap<Loc, Term>, soup: &mut Soup) {
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Leaf(t) => {
                    let loc = Loc { hops: hops.clone(), leaf: i };
                    soup.comps.push(edits.get(&loc).cloned().unwrap_or_else(|| t.clone()));
                }
                Node::Repl { body, copies } => {
                    soup.comps.push(Term::repl(body.clone()));
                    for (c, e) in copies.iter().enumerate() {
                        hops.push((i, c));
                        let touched = edits.keys().any(|l| l.hops.starts_with(hops));
                        if touched {
                            soup.binders.extend(e.binders.iter().cloned());
                            e.emit(hops, edits, soup);
                        }
                        hops.pop();
                    }
                }
            }
        }
    }
}

/// Replication copies used by a set of locations must form a prefix
/// `{0}` or `{0, 1}` for every replication, so that copy indices carry no
/// information beyond what α-equivalence already identifies.
pub(crate) fn canonical_copies(locs: &[&Loc]) -> bool {
    let mut used: BTreeMap<Vec<(usize, usize)>, BTreeSet<usize>> = BTreeMap::new();
    for loc in locs {
        for k in 0..loc.hops.len() {
            let (node, copy) = loc.hops[k];
            let mut key = loc.hops[..k].to_vec();
            key.push((node, usize::MAX));
            used.entry(key).or_default().insert(copy);
        }
    }
    used.values().all(|set| set.iter().copied().eq(0..set.len()))
}
