//! Structural normal forms.
//!
//! Normalisation works on evaluation contexts: it flattens `|`, `nu` and
//! `0`, drops unused restrictions, lets a replication absorb sibling copies
//! of its body (`!P | P ≡ !P`), groups components that share restricted
//! names, orders everything canonically and finally renames bound
//! identifiers by level. Replications are never unfolded.

use std::collections::{BTreeMap, BTreeSet};

use super::soup::{Fresh, Soup};
use crate::syntax::{alpha_canonical_with, alpha_key, Name, Term, Type};

/// Clusters up to this many restrictions are ordered by trying every
/// permutation; larger ones fall back to an occurrence-order heuristic.
const EXHAUSTIVE_BINDERS: usize = 6;

/// Canonical representative of `c` under the monoid laws, scope extrusion,
/// garbage collection of restrictions and replication absorption.
pub fn struct_normal(c: &Term) -> Term {
    struct_normal_with(c, &BTreeSet::new())
}

/// As [`struct_normal`], never choosing a bound name from `reserved`.
pub fn struct_normal_with(c: &Term, reserved: &BTreeSet<Name>) -> Term {
    let mut fresh = Fresh::for_term(c);
    let mut soup = Soup::of(c, &mut fresh);
    absorb_copies(&mut soup, &mut fresh);
    soup.collect_garbage();
    let mut clusters: Vec<Term> = clusters(&soup).into_iter().map(|(b, cs)| cluster_key(&b, &cs)).collect();
    clusters.sort();
    alpha_canonical_with(&Term::par_all(clusters), reserved)
}

/// Structural equivalence: equal normal forms, allowing one replication
/// unfolding on each side.
pub fn struct_equiv(c: &Term, d: &Term) -> bool {
    let n = struct_normal(c);
    let m = struct_normal(d);
    if n == m {
        return true;
    }
    let left = unfoldings(&n);
    let right = unfoldings(&m);
    left.iter().any(|l| right.contains(l))
}

/// `t` together with every normal form obtained by unfolding one top-level
/// replication once.
fn unfoldings(t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::from([t.clone()]);
    let mut fresh = Fresh::for_term(t);
    let soup = Soup::of(t, &mut fresh);
    for (i, c) in soup.comps.iter().enumerate() {
        if let Term::Repl(body) = c {
            let mut s = soup.clone();
            s.comps.insert(i + 1, (**body).clone());
            out.insert(struct_normal(&s.assemble()));
        }
    }
    out
}

fn absorb_copies(soup: &mut Soup, fresh: &mut Fresh) {
    let mut i = 0;
    while i < soup.comps.len() {
        if let Term::Repl(body) = &soup.comps[i] {
            let mut inner = Soup::of(body, fresh);
            inner.collect_garbage();
            if inner.binders.is_empty() && !inner.comps.is_empty() {
                let wanted: Vec<Term> = inner.comps.iter().map(alpha_key).collect();
                loop {
                    let keys: Vec<Term> = soup.comps.iter().map(alpha_key).collect();
                    let mut taken: Vec<usize> = Vec::new();
                    for w in &wanted {
                        match (0..keys.len()).find(|&j| j != i && !taken.contains(&j) && &keys[j] == w) {
                            Some(j) => taken.push(j),
                            None => break,
                        }
                    }
                    if taken.len() != wanted.len() {
                        break;
                    }
                    taken.sort_unstable();
                    for j in taken.into_iter().rev() {
                        soup.comps.remove(j);
                        if j < i {
                            i -= 1;
                        }
                    }
                }
            }
        }
        i += 1;
    }
}

/// Restrictions together with the components that use them.
type Cluster = (Vec<(Name, Type)>, Vec<Term>);

/// Partitions the soup into groups of components linked by shared
/// restricted names.
fn clusters(soup: &Soup) -> Vec<Cluster> {
    let n = soup.comps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let fns: Vec<BTreeSet<Name>> = soup.comps.iter().map(Term::free_names).collect();
    for (b, _) in &soup.binders {
        let users: Vec<usize> = (0..n).filter(|&j| fns[j].contains(b)).collect();
        for w in users.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[x] = y;
        }
    }
    let mut groups: BTreeMap<usize, Cluster> = BTreeMap::new();
    for j in 0..n {
        let r = find(&mut parent, j);
        groups.entry(r).or_default().1.push(soup.comps[j].clone());
    }
    for (b, ty) in &soup.binders {
        if let Some(j) = (0..n).find(|&j| fns[j].contains(b)) {
            let r = find(&mut parent, j);
            groups.get_mut(&r).expect("cluster exists").0.push((b.clone(), ty.clone()));
        }
    }
    groups.into_values().collect()
}

fn placeholder(i: usize) -> Name {
    Name::new(format!("@{i}"))
}

/// Canonical, position-independent form of one cluster: restrictions become
/// `@0, @1, ...` in the order minimising the sorted component list.
fn cluster_key(binders: &[(Name, Type)], comps: &[Term]) -> Term {
    let keyed: Vec<Term> = comps.iter().map(alpha_key).collect();
    let orders: Vec<Vec<usize>> = if binders.len() <= EXHAUSTIVE_BINDERS {
        permutations(binders.len())
    } else {
        vec![heuristic_order(binders, &keyed)]
    };
    let mut best: Option<(Vec<Type>, Vec<Term>)> = None;
    for order in orders {
        // order[j] is the placeholder index of binder j
        let mut cs: Vec<Term> = keyed
            .iter()
            .map(|c| {
                let mut c = c.clone();
                for (j, (b, _)) in binders.iter().enumerate() {
                    c = c.rename_name_fresh(b, &placeholder(order[j]));
                }
                c
            })
            .collect();
        cs.sort();
        let mut tys = vec![Type::Unit; binders.len()];
        for (j, (_, ty)) in binders.iter().enumerate() {
            tys[order[j]] = ty.clone();
        }
        let cand = (tys, cs);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    let (tys, cs) = best.expect("at least one order");
    let mut t = Term::par_all(cs);
    for (i, ty) in tys.into_iter().enumerate().rev() {
        t = Term::New(placeholder(i), ty, Box::new(t));
    }
    t
}

fn heuristic_order(binders: &[(Name, Type)], keyed: &[Term]) -> Vec<usize> {
    let erase = |c: &Term| {
        let mut c = c.clone();
        for (b, _) in binders {
            c = c.rename_name_fresh(b, &Name::new("@"));
        }
        c
    };
    let mut idx: Vec<usize> = (0..keyed.len()).collect();
    idx.sort_by_key(|&i| erase(&keyed[i]));
    let mut order = vec![usize::MAX; binders.len()];
    let mut next = 0;
    for i in idx {
        let mut seen = Vec::new();
        keyed[i].visit(&mut |t| {
            if let Term::Name(a) = t {
                seen.push(a.clone());
            }
        });
        for a in seen {
            if let Some(j) = binders.iter().position(|(b, _)| *b == a) {
                if order[j] == usize::MAX {
                    order[j] = next;
                    next += 1;
                }
            }
        }
    }
    order
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permute(cur, k + 1, out);
        cur.swap(k, i);
    }
}
