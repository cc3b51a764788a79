use std::collections::BTreeSet;

use hopi_core::bisim::{bisim_check_with, replay, Verdict};
use hopi_core::gen::{standard_env, Gen};
use hopi_core::lts::{Lts, TypedNode};
use hopi_core::reduction::{barbs_bounded, struct_equiv};
use hopi_core::syntax::parse;
use hopi_core::{Env, Name, Term};

use crate::common::verdict;

const DEPTH: usize = 4;
const TAU: usize = 4;
const WITNESS_DEPTH: usize = 6;
const CONTEXTS: usize = 10;
const BARB_STEPS: usize = 6;
/// Extra steps granted to the slower side of a weak pair.
const SLACK: usize = 2;
const BARB_STATES: usize = 20_000;

/// Weakly bisimilar but not structurally congruent.
const WEAK: &[(&str, &str)] = &[
    ("a!<()>.0", "nu n:ch<unit>.(n!<()>.0 | n?(x:unit).a!<()>.0)"),
    ("(\\x:unit -> a!<x>.0)(())", "a!<()>.0"),
    ("if a = a then b!<()>.0 else 0", "b!<()>.0"),
    ("if a = b then b!<()>.0 else a!<()>.0", "a!<()>.0"),
    ("nu n:ch<unit>.(n?(x:unit).0) | a!<()>.0", "a!<()>.0"),
    ("c!<a>.0", "nu n:ch<unit>.(n!<()>.0 | n?(z:unit).c!<a>.0)"),
    ("a?(x:unit).b!<()>.0", "a?(x:unit).(\\y:unit -> b!<y>.0)(x)"),
    ("h!<\\x:unit -> a!<x>.0>.0", "h!<\\x:unit -> (\\y:unit -> a!<y>.0)(x)>.0"),
];

/// Pairs some observer can tell apart.
const DISTINCT: &[(&str, &str)] = &[
    ("a!<()>.0", "b!<()>.0"),
    ("a!<()>.0", "0"),
    ("a!<()>.0", "a?(x:unit).0"),
    ("a!<()>.a!<()>.0", "a!<()>.0"),
    ("a!<()>.0 | b!<()>.0", "a!<()>.b!<()>.0"),
    ("a?(x:unit).b!<()>.0", "a?(x:unit).0"),
    ("h!<\\x:unit -> a!<x>.0>.0", "h!<\\x:unit -> b!<x>.0>.0"),
    ("h!<\\x:unit -> a!<x>.0>.0", "h!<\\x:unit -> 0>.0"),
    ("h!<\\x:unit -> a!<x>.0>.0", "h!<\\x:unit -> a!<x>.a!<x>.0>.0"),
    ("h?(f:abs<unit>).f(())", "h?(f:abs<unit>).0"),
    ("h?(f:abs<unit>).(f(()) | f(()))", "h?(f:abs<unit>).f(())"),
    ("c?(x:ch<unit>).if x = a then b!<()>.0 else 0", "c?(x:ch<unit>).b!<()>.0"),
    ("c!<a>.0", "c!<b>.0"),
    ("nu n:ch<unit>.(c!<n>.0)", "c!<a>.0"),
    ("nu n:ch<unit>.(n!<()>.0 | n?(x:unit).a!<()>.0 | n?(x:unit).b!<()>.0)", "a!<()>.0"),
    ("r!<r>.0", "r!<r>.r!<r>.0"),
    ("if a = b then a!<()>.0 else 0", "a!<()>.0"),
    ("c?(x:ch<unit>).x!<()>.0", "c?(x:ch<unit>).a!<()>.0"),
];

fn term(src: &str) -> Term {
    parse(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

struct Pair {
    p: Term,
    q: Term,
    congruent: bool,
}

fn equivalent(lts: &Lts, env: &Env, pair: &Pair) -> Result<(), String> {
    let (n, m) = (TypedNode::from_env(env, &pair.p), TypedNode::from_env(env, &pair.q));
    n.check().map_err(|e| format!("{}: {e}", pair.p))?;
    m.check().map_err(|e| format!("{}: {e}", pair.q))?;
    match bisim_check_with(lts, &n, &m, DEPTH, TAU).map_err(|e| e.to_string())? {
        Verdict::EquivalentToDepth { .. } => Ok(()),
        Verdict::Distinguished(w) => {
            Err(format!("{} and {} distinguished by {} from the {} side", pair.p, pair.q, w.label, w.side))
        }
    }
}

fn barbs(env: &Env, t: &Term, steps: usize) -> BTreeSet<Name> {
    barbs_bounded(env, t, steps, BARB_STATES)
}

/// Barbs of `P | R` and `Q | R` agree for random `R`. Weak pairs may need
/// up to `SLACK` extra steps on either side.
fn contexts(g: &mut Gen, env: &Env, pair: &Pair) -> Result<usize, String> {
    for _ in 0..CONTEXTS {
        let r = g.process(env, 2);
        let pr = Term::par(pair.p.clone(), r.clone());
        let qr = Term::par(pair.q.clone(), r.clone());
        let (bp, bq) = (barbs(env, &pr, BARB_STEPS), barbs(env, &qr, BARB_STEPS));
        let agree = if pair.congruent {
            bp == bq
        } else {
            bp.is_subset(&barbs(env, &qr, BARB_STEPS + SLACK)) && bq.is_subset(&barbs(env, &pr, BARB_STEPS + SLACK))
        };
        if !agree {
            return Err(format!("context {r}: barbs {bp:?} for {} but {bq:?} for {}", pair.p, pair.q));
        }
    }
    Ok(CONTEXTS)
}

pub fn criterion() -> Result<String, String> {
    let env = standard_env();
    let lts = Lts::new();
    let mut g = Gen::from_env(0x6571_7576);
    let mut failures = Vec::new();

    // (a) congruent pairs
    let mut pairs = Vec::new();
    for i in 0..200 {
        let p = if i % 2 == 0 { g.system(&env, 3) } else { g.process(&env, 3) };
        let q = g.congruent_variant(&p, 4);
        if !struct_equiv(&p, &q) {
            failures.push(format!("generator variant {q} of {p} is not congruent"));
        }
        pairs.push(Pair { p, q, congruent: true });
    }
    pairs.extend(WEAK.iter().map(|(p, q)| Pair { p: term(p), q: term(q), congruent: false }));
    let mut equal = 0;
    for pair in &pairs {
        match equivalent(&lts, &env, pair) {
            Ok(()) => equal += 1,
            Err(e) => failures.push(e),
        }
    }

    // (b) inequivalent pairs with replayable witnesses
    let mut distinguished = 0;
    for (p, q) in DISTINCT {
        let (n, m) = (TypedNode::from_env(&env, &term(p)), TypedNode::from_env(&env, &term(q)));
        match bisim_check_with(&lts, &n, &m, WITNESS_DEPTH, TAU) {
            Ok(Verdict::Distinguished(w)) => match replay(&w, TAU) {
                Ok(()) => distinguished += 1,
                Err(e) => failures.push(format!("{p} vs {q}: witness does not replay: {e}")),
            },
            Ok(v) => failures.push(format!("{p} vs {q}: {v:?}")),
            Err(e) => failures.push(format!("{p} vs {q}: {e}")),
        }
    }

    // (c) barbs under parallel contexts
    let mut probed = 0;
    for pair in &pairs {
        match contexts(&mut g, &env, pair) {
            Ok(n) => probed += n,
            Err(e) => failures.push(e),
        }
    }

    verdict(
        format!(
            "{equal} pairs equivalent to depth {DEPTH} ({} congruent, {} weak); {distinguished}/{} inequivalent pairs distinguished with replayed witnesses; {probed} context probes agree",
            pairs.len() - WEAK.len(),
            WEAK.len(),
            DISTINCT.len()
        ),
        failures,
    )
}
