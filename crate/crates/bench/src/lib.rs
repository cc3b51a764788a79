//! Workloads shared by the benchmarks.

use std::collections::BTreeMap;

use hopi_core::gen::{standard_env, Gen};
use hopi_core::lts::{Label, TypedNode};
use hopi_core::syntax::load_document;
use hopi_core::{Env, Term, Trigger, Type};

pub const SEED: u64 = 0x6265_6e63;

/// A reduction workload: several communicating pairs behind replication.
pub fn relay() -> (Env, Term) {
    load(
        "chan a : ch<unit>
chan b : ch<unit>
chan c : ch<ch<unit>>
!a?(x:unit).b!<x>.0 | a!<()>.0 | a!<()>.0 | b?(y:unit).c!<a>.0 | c?(z:ch<unit>).z!<()>.0
| nu n:ch<unit>.(c!<n>.0 | n?(w:unit).b!<w>.0)",
    )
}

/// A configuration with stored higher-order values and trigger calls.
pub fn higher_order() -> (Env, Term) {
    load(
        "chan a : ch<unit>
chan h : ch<abs<unit>>
trigger s : unit
trigger u : abs<unit>
h!<\\x:unit -> a!<x>.0>.0 | h?(f:abs<unit>).(f(()) | h!<f>.0) | res u <= \\g:abs<unit> -> g(()) | call s (())",
    )
}

/// Two weakly bisimilar processes that differ by internal steps.
pub fn weak_pair() -> (Env, Term, Term) {
    let (env, p) = load(
        "chan a : ch<unit>
chan b : ch<unit>
a?(x:unit).b!<x>.a!<()>.0 | b?(y:unit).0",
    );
    let (_, q) = load(
        "chan a : ch<unit>
chan b : ch<unit>
a?(x:unit).nu n:ch<unit>.(n!<x>.0 | n?(y:unit).b!<y>.a!<()>.0) | b?(y:unit).0",
    );
    (env, p, q)
}

/// An acyclic merge instance over `n` triggers.
pub fn merge_chain(n: usize) -> Term {
    Gen::new(SEED).acyclic_merge_instance(n)
}

/// Generated balanced configurations over the standard channels.
pub fn balanced(count: usize) -> Vec<(Env, Term)> {
    let env = standard_env();
    let theta = BTreeMap::from([(Trigger::new("t0"), Type::Unit), (Trigger::new("t1"), Type::abs(Type::Unit))]);
    let cenv = Env::with_channels(env.channels.clone(), theta.clone());
    let mut g = Gen::new(SEED);
    (0..count).map(|_| (cenv.clone(), g.balanced_config(&env.channels, &theta, 2))).collect()
}

/// A probe target and a label it can perform.
pub fn probe_target() -> (Env, Term, Label) {
    let (env, c) = higher_order();
    let triggers = env.triggers.keys().cloned().collect();
    let label = Label::parse("h!(k0)", &triggers).expect("valid label");
    (env, c, label)
}

pub fn node(env: &Env, t: &Term) -> TypedNode {
    TypedNode::from_env(env, t)
}

fn load(src: &str) -> (Env, Term) {
    let d = load_document(src).expect("fixture parses");
    (Env::with_channels(d.channels, d.triggers), d.term)
}
