//! Seeded generators for well-typed terms, configurations and merge
//! instances.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{Name, Term, Trigger, Type, Var};
use crate::typing::{type_iso, Env};

/// Environment variable overriding the generator seed.
pub const SEED_VAR: &str = "HOPI_SEED";

/// The seed from `HOPI_SEED`, or `default` when unset or unparsable.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

/// `rec Z. ch<Z>`
pub fn rec_chan() -> Type {
    Type::rec("Z", Type::chan(Type::var("Z")))
}

/// Channels used by the generators: two unit channels, a channel of unit
/// channels, a channel of unit abstractions and a recursive channel.
pub fn standard_channels() -> BTreeMap<Name, Type> {
    let unit = Type::chan(Type::Unit);
    BTreeMap::from([
        (Name::new("a"), unit.clone()),
        (Name::new("b"), unit.clone()),
        (Name::new("c"), Type::chan(unit)),
        (Name::new("h"), Type::chan(Type::abs(Type::Unit))),
        (Name::new("r"), rec_chan()),
    ])
}

pub fn standard_env() -> Env {
    Env::with_channels(standard_channels(), BTreeMap::new())
}

/// Payload types of the channels the generators restrict.
fn restrictable() -> [Type; 3] {
    let unit = Type::chan(Type::Unit);
    [unit.clone(), Type::chan(unit), Type::chan(Type::abs(Type::Unit))]
}

pub struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 }
    }

    /// Seeded from `HOPI_SEED`, falling back to `default`.
    pub fn from_env(default: u64) -> Gen {
        Gen::new(seed_from_env(default))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh_var(&mut self) -> String {
        self.fresh += 1;
        format!("y{}", self.fresh)
    }

    fn fresh_name(&mut self, env: &Env) -> String {
        loop {
            self.fresh += 1;
            let n = format!("n{}", self.fresh);
            if !env.channels.contains_key(&Name::new(&n)) {
                return n;
            }
        }
    }

    /// Names and variables of a type isomorphic to `ty`.
    fn atoms_of(env: &Env, ty: &Type) -> Vec<Term> {
        let names = env.channels.iter().filter(|(_, t)| type_iso(t, ty)).map(|(a, _)| Term::Name(a.clone()));
        let vars = env.vars.iter().filter(|(_, t)| type_iso(t, ty)).map(|(x, _)| Term::Var(x.clone()));
        names.chain(vars).collect()
    }

    /// A value of type `ty`, or `None` when the scope has none.
    pub fn value(&mut self, env: &Env, ty: &Type, depth: usize) -> Option<Term> {
        match ty.head_normal() {
            Type::Unit => Some(Term::Unit),
            Type::Chan(_) => Self::atoms_of(env, ty).choose(&mut self.rng).cloned(),
            Type::Abs(u) => {
                let mut options = Self::atoms_of(env, ty);
                options
                    .extend(env.triggers.iter().filter(|(_, t)| type_iso(t, &u)).map(|(k, _)| Term::Call(k.clone())));
                if options.is_empty() || self.rng.gen_bool(0.5) {
                    let x = self.fresh_var();
                    let mut inner = env.clone();
                    inner.vars.insert(Var::new(&x), (*u).clone());
                    let body = self.process(&inner, depth.saturating_sub(1));
                    Some(Term::lambda(&x, (*u).clone(), body))
                } else {
                    options.choose(&mut self.rng).cloned()
                }
            }
            _ => None,
        }
    }

    /// Channel-typed subjects in scope, with their payload types.
    fn subjects(env: &Env) -> Vec<(Term, Type)> {
        let names = env.channels.iter().map(|(a, t)| (Term::Name(a.clone()), t));
        let vars = env.vars.iter().map(|(x, t)| (Term::Var(x.clone()), t));
        names.chain(vars).filter_map(|(s, t)| t.as_chan().map(|p| (s, p))).collect()
    }

    /// A well-typed process of nesting depth at most `depth`. Replication
    /// only guards inputs.
    pub fn process(&mut self, env: &Env, depth: usize) -> Term {
        let subjects = Self::subjects(env);
        if depth == 0 {
            return match (self.rng.gen_range(0..3), subjects.choose(&mut self.rng)) {
                (0, Some((s, p))) => match self.value(env, p, 0) {
                    Some(v) => Term::output(s.clone(), v, Term::Nil),
                    None => Term::Nil,
                },
                _ => Term::Nil,
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..16) {
            0 => Term::Nil,
            1..=4 => {
                let Some((s, p)) = subjects.choose(&mut self.rng).cloned() else { return Term::Nil };
                match self.value(env, &p, d) {
                    Some(v) => Term::output(s, v, self.process(env, d)),
                    None => Term::Nil,
                }
            }
            5..=7 => self.input(env, &subjects, d).unwrap_or(Term::Nil),
            8 => match self.input(env, &subjects, d) {
                Some(i) => Term::repl(i),
                None => Term::Nil,
            },
            9..=11 => Term::par(self.process(env, d), self.process(env, d)),
            12 => {
                let a = self.fresh_name(env);
                let ty = restrictable().choose(&mut self.rng).cloned().expect("non-empty");
                let mut inner = env.clone();
                inner.channels.insert(Name::new(&a), ty.clone());
                Term::new_name(&a, ty, self.process(&inner, d))
            }
            13 => {
                let Some((l, p)) = subjects.choose(&mut self.rng).cloned() else { return Term::Nil };
                let ty = Type::chan(p);
                let r = Self::atoms_of(env, &ty).choose(&mut self.rng).cloned().unwrap_or(l.clone());
                Term::matching(l, r, self.process(env, d), self.process(env, d))
            }
            _ => {
                let arg_ty = if self.rng.gen_bool(0.7) { Type::Unit } else { Type::chan(Type::Unit) };
                let f = self.value(env, &Type::abs(arg_ty.clone()), d);
                match (f, self.value(env, &arg_ty, d)) {
                    (Some(f), Some(v)) => Term::app(f, v),
                    _ => Term::Nil,
                }
            }
        }
    }

    /// Parallel components with matching outputs and inputs on shared
    /// channels, so that communication is likely.
    pub fn system(&mut self, env: &Env, depth: usize) -> Term {
        let d = depth.saturating_sub(1);
        let channels: Vec<(Term, Type)> =
            Self::subjects(env).into_iter().filter(|(s, _)| matches!(s, Term::Name(_))).collect();
        let mut comps = Vec::new();
        for _ in 0..self.rng.gen_range(1..=2) {
            let Some((s, p)) = channels.choose(&mut self.rng).cloned() else { break };
            if let Some(v) = self.value(env, &p, d) {
                comps.push(Term::output(s.clone(), v, self.process(env, d)));
            }
            if let Some(i) = self.input(env, &[(s, p)], d) {
                comps.push(if self.rng.gen_bool(0.25) { Term::repl(i) } else { i });
            }
        }
        if self.rng.gen_bool(0.5) {
            comps.push(self.process(env, depth));
        }
        comps.shuffle(&mut self.rng);
        Term::par_all(comps)
    }

    fn input(&mut self, env: &Env, subjects: &[(Term, Type)], depth: usize) -> Option<Term> {
        let (s, p) = subjects.choose(&mut self.rng).cloned()?;
        let x = self.fresh_var();
        let mut inner = env.clone();
        inner.vars.insert(Var::new(&x), p.clone());
        Some(Term::input(s, &x, p, self.process(&inner, depth)))
    }

    /// A balanced configuration over `delta` and `theta`: triggers are split
    /// into called ones and stored ones, resources are generated for the
    /// stored triggers and only called triggers appear in calls.
    pub fn balanced_config(
        &mut self,
        delta: &BTreeMap<Name, Type>,
        theta: &BTreeMap<Trigger, Type>,
        depth: usize,
    ) -> Term {
        let mut called = BTreeMap::new();
        let mut stored = BTreeMap::new();
        for (k, t) in theta {
            if self.rng.gen_bool(0.5) {
                called.insert(k.clone(), t.clone());
            } else {
                stored.insert(k.clone(), t.clone());
            }
        }
        let env = Env::with_channels(delta.clone(), called);
        let mut comps = vec![self.process(&env, depth)];
        for (k, u) in stored {
            let x = self.fresh_var();
            let mut inner = env.clone();
            inner.vars.insert(Var::new(&x), u.clone());
            let body = self.process(&inner, depth.saturating_sub(1));
            comps.push(Term::resource(k.as_str(), Term::lambda(&x, u, body)));
        }
        comps.shuffle(&mut self.rng);
        Term::par_all(comps)
    }

    /// A random configuration for merge: `n` resources on `k0..k{n-1}`, each
    /// value calling a random subset of the triggers, plus top-level calls.
    pub fn merge_instance(&mut self, n: usize) -> Term {
        let edges: Vec<Vec<usize>> = (0..n).map(|_| (0..n).filter(|_| self.rng.gen_bool(0.3)).collect()).collect();
        self.merge_from_edges(&edges)
    }

    /// As [`Gen::merge_instance`] with an acyclic reference graph.
    pub fn acyclic_merge_instance(&mut self, n: usize) -> Term {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        let mut edges = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if self.rng.gen_bool(0.4) {
                    edges[order[i]].push(order[j]);
                }
            }
        }
        self.merge_from_edges(&edges)
    }

    fn merge_from_edges(&mut self, edges: &[Vec<usize>]) -> Term {
        let n = edges.len();
        let mut comps = Vec::new();
        for (k, targets) in edges.iter().enumerate() {
            let mut body: Vec<Term> =
                targets.iter().map(|l| Term::app(Term::call(&format!("k{l}")), Term::var("x"))).collect();
            if self.rng.gen_bool(0.5) {
                body.push(Term::output(Term::name("a"), Term::var("x"), Term::Nil));
            }
            comps.push(Term::resource(&format!("k{k}"), Term::lambda("x", Type::Unit, Term::par_all(body))));
        }
        for _ in 0..self.rng.gen_range(0..=2) {
            if n > 0 {
                let k = self.rng.gen_range(0..n);
                comps.push(Term::app(Term::call(&format!("k{k}")), Term::Unit));
            }
        }
        comps.shuffle(&mut self.rng);
        Term::par_all(comps)
    }

    /// A random structurally congruent variant of `p`, obtained by rewriting
    /// in evaluation contexts.
    pub fn congruent_variant(&mut self, p: &Term, rounds: usize) -> Term {
        let mut cur = p.clone();
        for _ in 0..rounds {
            cur = self.rewrite(&cur);
        }
        cur
    }

    fn rewrite(&mut self, p: &Term) -> Term {
        // descend into an evaluation context half of the time
        if self.rng.gen_bool(0.5) {
            match p {
                Term::Par(l, r) => {
                    return if self.rng.gen_bool(0.5) {
                        Term::par(self.rewrite(l), (**r).clone())
                    } else {
                        Term::par((**l).clone(), self.rewrite(r))
                    };
                }
                Term::New(a, t, b) => return Term::New(a.clone(), t.clone(), Box::new(self.rewrite(b))),
                _ => {}
            }
        }
        let mut options: Vec<Term> = vec![Term::par(p.clone(), Term::Nil), Term::par(Term::Nil, p.clone())];
        match p {
            Term::Par(l, r) => {
                options.push(Term::par((**r).clone(), (**l).clone()));
                if let Term::Par(a, b) = &**l {
                    options.push(Term::par((**a).clone(), Term::par((**b).clone(), (**r).clone())));
                }
                if let Term::New(a, t, b) = &**l {
                    if !r.mentions_name(a) {
                        options.push(Term::New(
                            a.clone(),
                            t.clone(),
                            Box::new(Term::par((**b).clone(), (**r).clone())),
                        ));
                    }
                }
                if **r == Term::Nil {
                    options.push((**l).clone());
                }
            }
            Term::New(a, t, b) => {
                if let Term::Par(l, r) = &**b {
                    if !r.mentions_name(a) {
                        options.push(Term::par(Term::New(a.clone(), t.clone(), l.clone()), (**r).clone()));
                    }
                }
                if !b.mentions_name(a) {
                    options.push((**b).clone());
                }
                let taken = p.all_names();
                let fresh = (0..).map(|i| Name::new(format!("m{i}"))).find(|n| !taken.contains(n)).expect("unbounded");
                options.push(Term::New(fresh.clone(), t.clone(), Box::new(b.rename_name(a, &fresh))));
            }
            Term::Repl(b) => options.push(Term::par(p.clone(), (**b).clone())),
            _ => {}
        }
        let taken = p.all_names();
        if let Some(fresh) = (0..).map(|i| Name::new(format!("g{i}"))).find(|n| !taken.contains(n)) {
            options.push(Term::new_name(fresh.as_str(), Type::chan(Type::Unit), p.clone()));
        }
        options.choose(&mut self.rng).cloned().expect("non-empty")
    }
}

/// Triggers of `env` that `c` neither calls nor stores.
pub fn unused_triggers(env: &Env, c: &Term) -> BTreeSet<Trigger> {
    let used: BTreeSet<Trigger> = c.calls().into_iter().chain(c.resources().into_iter().map(|(k, _)| k)).collect();
    env.triggers.keys().filter(|k| !used.contains(*k)).cloned().collect()
}
