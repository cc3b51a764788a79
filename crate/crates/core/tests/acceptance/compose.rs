use std::collections::{BTreeMap, BTreeSet};

use hopi_core::gen::{standard_env, Gen};
use hopi_core::lts::{complement, Label, Lts, Subject, TypedNode};
use hopi_core::merge::merge;
use hopi_core::reduction::{reduce_multi, reducts, struct_equiv, struct_normal};
use hopi_core::{Term, Trigger, Type};

use crate::common::{doc, env_of, verdict};

const HEADER: &str = "chan a : ch<unit>
chan e : ch<unit>
chan c : ch<ch<unit>>
chan h : ch<abs<unit>>
trigger s : unit
trigger t : ch<unit>
trigger u : abs<unit>";

/// (label class exercised, C, D)
const PAIRS: &[(&str, &str, &str)] = &[
    ("base", "a!<()>.0", "a?(x:unit).e!<x>.0"),
    ("base", "a!<()>.a!<()>.0", "a?(x:unit).0 | a?(y:unit).e!<()>.0"),
    ("base", "c!<e>.0", "c?(x:ch<unit>).x!<()>.0"),
    ("base", "c!<a>.e!<()>.0", "c?(x:ch<unit>).if x = a then e!<()>.0 else 0"),
    ("base", "!a?(x:unit).e!<()>.0", "a!<()>.0"),
    ("base", "a?(x:unit).0 | a!<()>.0", "a!<()>.0"),
    ("base", "c?(x:ch<unit>).x!<()>.0", "c!<a>.0 | a?(z:unit).0"),
    ("base", "a!<()>.0 | call s (())", "a?(x:unit).0 | res s <= \\y:unit -> e!<y>.0"),
    ("base", "c!<e>.0 | res t <= \\y:ch<unit> -> y!<()>.0", "c?(x:ch<unit>).call t (x)"),
    ("base", "a!<()>.0", "!a?(x:unit).a!<()>.0"),
    ("base", "e?(x:unit).a!<x>.0 | a!<()>.0", "a?(x:unit).e!<()>.0"),
    ("bound", "nu n:ch<unit>.(c!<n>.n?(x:unit).e!<()>.0)", "c?(y:ch<unit>).y!<()>.0"),
    ("bound", "nu n:ch<unit>.(c!<n>.0 | n!<()>.0)", "c?(y:ch<unit>).y?(z:unit).e!<()>.0"),
    ("bound", "nu n:ch<unit>.(c!<n>.n!<()>.0)", "c?(y:ch<unit>).if y = a then e!<()>.0 else y?(z:unit).0"),
    ("bound", "nu n:ch<unit>.(c!<n>.0 | c!<n>.0)", "c?(y:ch<unit>).c?(z:ch<unit>).if y = z then e!<()>.0 else 0"),
    ("bound", "c?(y:ch<unit>).y!<()>.0", "nu m:ch<unit>.(c!<m>.0 | m?(z:unit).e!<()>.0)"),
    ("bound", "nu n:ch<unit>.(c!<n>.0) | res t <= \\y:ch<unit> -> y!<()>.0", "c?(y:ch<unit>).call t (y)"),
    ("bound", "nu n:ch<unit>.(c!<n>.call t (n))", "c?(y:ch<unit>).y?(z:unit).0 | res t <= \\w:ch<unit> -> w!<()>.0"),
    ("bound", "c?(y:ch<unit>).c!<y>.0", "nu m:ch<unit>.(c!<m>.c?(z:ch<unit>).if z = m then e!<()>.0 else 0)"),
    (
        "bound",
        "nu n:ch<unit>.(nu o:ch<unit>.(c!<n>.c!<o>.0))",
        "c?(y:ch<unit>).c?(z:ch<unit>).if y = z then 0 else e!<()>.0",
    ),
    ("bound", "!c?(y:ch<unit>).y!<()>.0", "nu m:ch<unit>.(c!<m>.m?(z:unit).e!<()>.0)"),
    ("bound", "nu n:ch<unit>.(c!<n>.0 | n?(x:unit).a!<()>.0)", "c?(y:ch<unit>).y!<()>.0 | a?(x:unit).0"),
    ("higher-order", "h!<\\x:unit -> e!<x>.0>.0", "h?(f:abs<unit>).f(())"),
    ("higher-order", "h!<\\x:unit -> a!<x>.0>.0", "h?(f:abs<unit>).(f(()) | f(()))"),
    ("higher-order", "h?(f:abs<unit>).f(())", "h!<\\x:unit -> a!<()>.0>.0"),
    ("higher-order", "h!<\\x:unit -> 0>.a!<()>.0", "h?(f:abs<unit>).0"),
    ("higher-order", "h!<call s>.0", "h?(f:abs<unit>).f(()) | res s <= \\y:unit -> e!<y>.0"),
    ("higher-order", "nu n:ch<unit>.(h!<\\x:unit -> n!<x>.0>.n?(z:unit).e!<()>.0)", "h?(f:abs<unit>).f(())"),
    ("higher-order", "h!<\\x:unit -> h!<\\y:unit -> e!<y>.0>.0>.0", "h?(f:abs<unit>).(f(()) | h?(g:abs<unit>).g(()))"),
    ("higher-order", "h?(f:abs<unit>).h!<f>.0", "h!<\\x:unit -> e!<x>.0>.h?(g:abs<unit>).g(())"),
    ("higher-order", "!h?(f:abs<unit>).f(())", "h!<\\x:unit -> a!<x>.0>.0"),
    ("higher-order", "h!<\\x:unit -> call s (x)>.0", "h?(f:abs<unit>).f(()) | res s <= \\y:unit -> a!<y>.0"),
    ("higher-order", "h!<\\x:unit -> 0>.0 | h!<\\x:unit -> e!<x>.0>.0", "h?(f:abs<unit>).f(())"),
    ("trigger", "res s <= \\x:unit -> e!<x>.0", "call s (())"),
    ("trigger", "res s <= \\x:unit -> a!<x>.0", "call s (()) | call s (())"),
    ("trigger", "res t <= \\y:ch<unit> -> y!<()>.0", "call t (a)"),
    ("trigger", "res t <= \\y:ch<unit> -> y!<()>.0", "nu n:ch<unit>.(call t (n) | n?(z:unit).e!<()>.0)"),
    ("trigger", "res s <= \\x:unit -> e!<x>.0 | a!<()>.0", "a?(x:unit).call s (x) | call s (())"),
    ("trigger", "call s (())", "res s <= \\x:unit -> 0"),
    ("trigger", "res s <= \\x:unit -> call t (a)", "res t <= \\y:ch<unit> -> y!<()>.0 | call s (())"),
    ("trigger", "res u <= \\f:abs<unit> -> f(())", "call u (\\x:unit -> e!<x>.0)"),
    ("trigger", "call u (\\x:unit -> a!<x>.0)", "res u <= \\f:abs<unit> -> (f(()) | f(()))"),
    ("trigger", "res t <= \\y:ch<unit> -> y?(z:unit).e!<()>.0", "nu n:ch<unit>.(call t (n) | n!<()>.0)"),
    ("trigger", "res u <= \\f:abs<unit> -> h!<f>.0", "call u (\\x:unit -> 0) | h?(g:abs<unit>).g(())"),
];

const STEPS: usize = 4;
const STATES: usize = 5_000;
const TAU: usize = 2;
const GENERATED: usize = 200;

fn class(l: &Label) -> &'static str {
    match l.subject() {
        Some(Subject::Trig(_)) => "trigger",
        _ => match l {
            Label::In(..) | Label::Out(..) => "base",
            Label::BoundIn(..) | Label::BoundOut(..) => "bound",
            _ => "higher-order",
        },
    }
}

fn mg(t: &Term) -> Result<Term, String> {
    merge(t).map_err(|u| format!("{t}: {u}"))
}

/// `mg(νΔ'(C' | D'))` where Δ' are the channels both sides gained.
fn compose(base: &TypedNode, c: &TypedNode, d: &TypedNode) -> Result<Term, String> {
    if c.delta != d.delta || c.theta != d.theta {
        return Err(format!("misaligned environments: {c} / {d}"));
    }
    let mut t = Term::par(c.config.clone(), d.config.clone());
    for (b, ty) in c.delta.iter().filter(|(b, _)| !base.delta.contains_key(*b)) {
        t = Term::new_name(b.as_str(), ty.clone(), t);
    }
    mg(&t)
}

fn in_reach(states: &[Term], t: &Term) -> bool {
    let n = struct_normal(t);
    states.iter().any(|s| *s == n || struct_equiv(s, t))
}

/// Reductions of a configuration survive merging. Starts from states up to
/// two steps out so each check covers a reduction of length <= 3.
fn merged_reductions(start: &Term) -> Result<usize, String> {
    let mut n = 0;
    for x in reduce_multi(start, 2, STATES).terms() {
        let ex = mg(x)?;
        let ered: Vec<Term> = reducts(&ex).into_iter().collect();
        for x1 in reducts(x) {
            let ex1 = mg(&x1)?;
            if !in_reach(&ered, &ex1) {
                return Err(format!("(ii) {x} -> {x1}, but {ex} does not reduce to {ex1}"));
            }
            n += 1;
        }
    }
    Ok(n)
}

struct Tally {
    composed: usize,
    commuted: usize,
    classified: [usize; 3],
    classes: BTreeSet<&'static str>,
}

fn check_pair(lts: &Lts, want: &str, c_src: &str, d_src: &str, tally: &mut Tally) -> Result<(), String> {
    let cd = doc(HEADER, c_src);
    let dd = doc(HEADER, d_src);
    let env = env_of(&cd);
    let base = TypedNode::from_env(&env, &Term::Nil);
    let cn = TypedNode::from_env(&env, &cd.term);
    let dn = TypedNode::from_env(&env, &dd.term);
    cn.check().map_err(|e| format!("{c_src}: {e}"))?;
    dn.check().map_err(|e| format!("{d_src}: {e}"))?;
    let whole = Term::par(cd.term.clone(), dd.term.clone());
    let e = mg(&whole)?;

    // (i) complementary strong transitions compose
    let reach: Vec<Term> = reduce_multi(&e, STEPS, STATES).terms().cloned().collect();
    let mut seen_class = false;
    for (alpha, c1) in lts.transitions(&cn).iter().filter(|(l, _)| l.is_visible()) {
        let co = complement(alpha).map_err(|e| e.to_string())?;
        for (_, d1) in lts.transitions(&dn).iter().filter(|(l, _)| *l == co) {
            let target = compose(&base, c1, d1)?;
            if !in_reach(&reach, &target) {
                return Err(format!("(i) {c_src} || {d_src}: {alpha} / {co} gives {target}, not reached from {e}"));
            }
            tally.composed += 1;
            tally.classes.insert(class(alpha));
            seen_class |= class(alpha) == want;
        }
    }
    if !seen_class {
        return Err(format!("{c_src} || {d_src}: no complementary {want} transitions"));
    }

    for start in [&cd.term, &dd.term, &whole] {
        tally.commuted += merged_reductions(start)?;
    }

    // (iii) every reduct of the merge comes from one side or from an
    // interaction
    let c_red = reducts(&cd.term);
    let d_red = reducts(&dd.term);
    let (labels, _) = lts.weak_labels(&cn, TAU);
    for e1 in reducts(&e) {
        if c_red.iter().any(|c1| mg(&Term::par(c1.clone(), dd.term.clone())).is_ok_and(|m| struct_equiv(&m, &e1))) {
            tally.classified[0] += 1;
            continue;
        }
        if d_red.iter().any(|d1| mg(&Term::par(cd.term.clone(), d1.clone())).is_ok_and(|m| struct_equiv(&m, &e1))) {
            tally.classified[1] += 1;
            continue;
        }
        let mut found = false;
        'labels: for alpha in &labels {
            let co = complement(alpha).map_err(|e| e.to_string())?;
            let cs = lts.weak_after(&cn, alpha, TAU);
            let ds = lts.weak_after(&dn, &co, TAU);
            for c1 in &cs.nodes {
                for d1 in &ds.nodes {
                    if compose(&base, c1, d1).is_ok_and(|m| struct_equiv(&m, &e1)) {
                        found = true;
                        break 'labels;
                    }
                }
            }
        }
        if !found {
            return Err(format!("(iii) {c_src} || {d_src}: reduct {e1} of {e} unexplained"));
        }
        tally.classified[2] += 1;
    }
    Ok(())
}

pub fn criterion() -> Result<String, String> {
    let lts = Lts::new();
    let mut tally = Tally { composed: 0, commuted: 0, classified: [0; 3], classes: BTreeSet::new() };
    let mut failures = Vec::new();
    for (want, c, d) in PAIRS {
        if let Err(e) = check_pair(&lts, want, c, d, &mut tally) {
            failures.push(e);
        }
    }
    let env = standard_env();
    let theta = BTreeMap::from([(Trigger::new("t0"), Type::Unit), (Trigger::new("t1"), Type::chan(Type::Unit))]);
    let mut g = Gen::from_env(0x636f_6d70);
    for _ in 0..GENERATED {
        let c = Term::par(g.balanced_config(&env.channels, &theta, 3), g.system(&env, 2));
        match merged_reductions(&c) {
            Ok(n) => tally.commuted += n,
            Err(e) => failures.push(e),
        }
    }
    if tally.classes.len() < 4 {
        failures.push(format!("label classes covered: {:?}", tally.classes));
    }
    verdict(
        format!(
            "{} pairs over {} label classes: {} composed transitions; {} merged reductions incl. {GENERATED} generated configurations; reducts split {}/{}/{} (C/D/interaction)",
            PAIRS.len(),
            tally.classes.len(),
            tally.composed,
            tally.commuted,
            tally.classified[0],
            tally.classified[1],
            tally.classified[2]
        ),
        failures,
    )
}
