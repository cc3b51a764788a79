//! The merge operator: resolving trigger calls against stored resources.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::reduction::soup::{Fresh, Soup};
use crate::reduction::struct_normal;
use crate::syntax::{Term, Trigger};

/// Reference graph: an edge `k -> l` when the value stored at `k` calls `l`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefGraph {
    pub vertices: BTreeSet<Trigger>,
    pub edges: BTreeSet<(Trigger, Trigger)>,
}

impl RefGraph {
    fn successors<'a>(&'a self, k: &'a Trigger) -> impl Iterator<Item = &'a Trigger> {
        self.edges.iter().filter(move |(a, _)| a == k).map(|(_, b)| b)
    }

    /// Some cycle as a closed walk `k0, k1, ..., k0`, if one exists.
    pub fn find_cycle(&self) -> Option<Vec<Trigger>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn dfs(
            g: &RefGraph,
            k: &Trigger,
            marks: &mut BTreeMap<Trigger, Mark>,
            stack: &mut Vec<Trigger>,
        ) -> Option<Vec<Trigger>> {
            marks.insert(k.clone(), Mark::Open);
            stack.push(k.clone());
            for l in g.successors(k) {
                match marks.get(l) {
                    Some(Mark::Open) => {
                        let start = stack.iter().position(|m| m == l).expect("open vertex is on the stack");
                        let mut cycle = stack[start..].to_vec();
                        cycle.push(l.clone());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        if let Some(c) = dfs(g, l, marks, stack) {
                            return Some(c);
                        }
                    }
                }
            }
            stack.pop();
            marks.insert(k.clone(), Mark::Done);
            None
        }
        let mut marks = BTreeMap::new();
        for k in &self.vertices {
            if !marks.contains_key(k) {
                if let Some(c) = dfs(self, k, &mut marks, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }
}

pub fn ref_graph(c: &Term) -> RefGraph {
    let mut g = RefGraph::default();
    for (k, v) in c.resources() {
        g.vertices.insert(k.clone());
        for l in v.calls() {
            g.edges.insert((k.clone(), l));
        }
    }
    g
}

pub fn is_acyclic(g: &RefGraph) -> bool {
    g.find_cycle().is_none()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeStep {
    Done,
    Next(Term),
    Stuck,
}

/// Eliminates resource `k` from the normal form of `c`, or `None` when `k`
/// has no resource or its value calls `k`.
fn eliminate(c: &Term, k: &Trigger) -> Option<Term> {
    let c = struct_normal(c);
    let mut soup = Soup::of(&c, &mut Fresh::for_term(&c));
    let pos = soup.comps.iter().position(|t| matches!(t, Term::Resource(l, _) if l == k))?;
    let Term::Resource(_, v) = soup.comps.remove(pos) else { unreachable!() };
    if v.calls_trigger(k) {
        return None;
    }
    soup.comps = soup.comps.iter().map(|t| t.subst_trigger(k, &v).expect("stored resources hold values")).collect();
    Some(struct_normal(&soup.assemble()))
}

/// One rewriting step, eliminating the least trigger whose value does not
/// call itself.
pub fn merge_step(c: &Term) -> MergeStep {
    let mut rs = c.resources();
    if rs.is_empty() {
        return MergeStep::Done;
    }
    rs.sort_by(|a, b| a.0.cmp(&b.0));
    for (k, v) in rs {
        if !v.calls_trigger(&k) {
            return MergeStep::Next(eliminate(c, &k).expect("eligible resource eliminates"));
        }
    }
    MergeStep::Stuck
}

/// Merge is undefined; carries a cycle of the reference graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Undefined {
    pub cycle: Vec<Trigger>,
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<&str> = self.cycle.iter().map(Trigger::as_str).collect();
        write!(f, "merge undefined: cycle {}", ks.join(" -> "))
    }
}

impl std::error::Error for Undefined {}

fn undefined(original: &Term, stuck: &Term) -> Undefined {
    let cycle = ref_graph(original).find_cycle().or_else(|| ref_graph(stuck).find_cycle()).unwrap_or_default();
    Undefined { cycle }
}

/// Rewrites to a resource-free configuration in normal form.
pub fn merge(c: &Term) -> Result<Term, Undefined> {
    let mut cur = struct_normal(c);
    loop {
        match merge_step(&cur) {
            MergeStep::Done => return Ok(cur),
            MergeStep::Next(t) => cur = t,
            MergeStep::Stuck => return Err(undefined(c, &cur)),
        }
    }
}

/// Eliminates resources in the given order; `None` if some step is not
/// possible or resources remain afterwards.
pub fn merge_with_order(c: &Term, order: &[Trigger]) -> Option<Term> {
    let mut cur = struct_normal(c);
    for k in order {
        cur = eliminate(&cur, k)?;
    }
    (!cur.has_resources()).then_some(cur)
}
