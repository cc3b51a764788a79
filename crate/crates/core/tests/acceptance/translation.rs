use std::collections::{BTreeMap, BTreeSet};

use hopi_core::gen::{standard_env, Gen};
use hopi_core::lts::{Allocator, FoValue, Label, Subject, TypedNode};
use hopi_core::reduction::{housekeeping_closure, reduce_multi, struct_equiv, struct_normal};
use hopi_core::translate::{probe_label, translate_config, translated_env, ProbeBudgets};
use hopi_core::typing::{check_config, type_iso};
use hopi_core::{Env, Name, Term, Trigger, Type};

use crate::common::{doc, env_of, verdict};

const HEADER: &str = "chan a : ch<unit>
chan e : ch<unit>
chan c : ch<ch<unit>>
chan h : ch<abs<unit>>
trigger s : unit
trigger t : ch<unit>
trigger u : abs<unit>";

const CURATED: &[&str] = &[
    "a!<()>.0 | a?(x:unit).call s (x)",
    "h!<call s>.0 | h?(f:abs<unit>).f(())",
    "res s <= \\x:unit -> a!<x>.0 | a?(y:unit).e!<()>.0",
    "c!<a>.0 | c?(y:ch<unit>).call t (y) | res s <= \\x:unit -> 0",
    "nu n:ch<unit>.(c!<n>.0 | n?(z:unit).call s (z)) | c?(y:ch<unit>).y!<()>.0",
    "call u (\\x:unit -> a!<x>.0) | h!<call s>.0",
    "res u <= \\f:abs<unit> -> f(()) | h!<\\x:unit -> e!<x>.0>.0 | h?(g:abs<unit>).g(())",
    "!a?(x:unit).call s (x) | a!<()>.0 | a!<()>.0",
    "h?(f:abs<unit>).(f(()) | f(())) | h!<call s>.0",
    "res t <= \\y:ch<unit> -> y!<()>.0 | c!<e>.0 | c?(z:ch<unit>).e?(w:unit).call s (w)",
    "call t (a) | a?(x:unit).0 | a!<()>.0",
    "if a = e then call s (()) else a!<()>.0 | a?(x:unit).0",
    "nu n:ch<unit>.(h!<\\x:unit -> n!<x>.0>.0 | n?(z:unit).call s (z)) | h?(f:abs<unit>).f(())",
    "c?(y:ch<unit>).call t (y) | c!<a>.0 | c!<e>.0",
    "res s <= \\x:unit -> call t (a) | a!<()>.0 | a?(z:unit).0",
    "h!<\\x:unit -> call s (x)>.0 | h?(f:abs<unit>).(f(()) | h!<f>.0) | h?(g:abs<unit>).0",
];

const STEPS: usize = 4;
const STATES: usize = 20_000;

fn curated() -> Vec<(Env, Term)> {
    CURATED
        .iter()
        .map(|src| {
            let d = doc(HEADER, src);
            (env_of(&d), d.term)
        })
        .collect()
}

fn generated(seed: u64, n: usize, depth: usize) -> Vec<(Env, Term)> {
    let env = standard_env();
    let theta = BTreeMap::from([(Trigger::new("t0"), Type::Unit), (Trigger::new("t1"), Type::abs(Type::Unit))]);
    let cenv = Env::with_channels(env.channels.clone(), theta.clone());
    let mut g = Gen::from_env(seed);
    (0..n)
        .map(|_| {
            let c = Term::par(g.balanced_config(&env.channels, &theta, depth), g.system(&env, depth));
            (cenv.clone(), c)
        })
        .collect()
}

fn matches_any<'a>(mut pool: impl Iterator<Item = &'a Term>, t: &Term) -> bool {
    let n = struct_normal(t);
    pool.any(|s| *s == n || struct_equiv(s, t))
}

/// Both directions of the operational correspondence for one configuration.
fn correspond(env: &Env, c: &Term) -> Result<(usize, usize), String> {
    if !c.is_balanced() {
        return Err(format!("{c} is not balanced"));
    }
    check_config(env, c).map_err(|e| format!("{c}: {e}"))?;
    let tenv = translated_env(env).map_err(|e| e.to_string())?;
    let tc = translate_config(env, c).map_err(|e| e.to_string())?;
    check_config(&tenv, &tc).map_err(|e| format!("translation of {c} ill-typed: {e}"))?;

    let source = reduce_multi(c, STEPS, STATES);
    let target = reduce_multi(&tc, STEPS, STATES);
    if source.truncated && source.states.len() >= STATES || target.states.len() >= STATES {
        return Err(format!("{c}: state bound hit"));
    }
    let translated: Vec<Term> =
        source.terms().map(|d| translate_config(env, d).map_err(|e| format!("{d}: {e}"))).collect::<Result<_, _>>()?;

    // every reduct of C is matched by the translation
    for (d, td) in source.terms().zip(&translated) {
        if !matches_any(target.terms(), td) {
            return Err(format!("{c} reaches {d}, but the translation never reaches {td}"));
        }
    }
    // every reduct of the translation is a housekeeping residue of some
    // translated reduct
    let closures: Vec<BTreeSet<Term>> = translated.iter().map(|td| housekeeping_closure(td, 256).0).collect();
    for p in target.terms() {
        if !closures.iter().any(|cl| matches_any(cl.iter(), p)) {
            return Err(format!("translation of {c} reaches {p}, which is no housekeeping residue"));
        }
    }
    Ok((source.states.len(), target.states.len()))
}

pub fn correspondence() -> Result<String, String> {
    let mut configs = curated();
    configs.extend(generated(0x7472_616e, 24, 2));
    let mut failures = Vec::new();
    let (mut src, mut tgt) = (0, 0);
    for (env, c) in &configs {
        match correspond(env, c) {
            Ok((s, t)) => {
                src += s;
                tgt += t;
            }
            Err(e) => failures.push(e),
        }
    }
    verdict(
        format!("{} balanced configurations: {src} source states matched, {tgt} target states factored", configs.len()),
        failures,
    )
}

/// Labels worth probing at `n`: every action its environment could type,
/// whether or not the configuration can perform it.
fn candidates(n: &TypedNode) -> Vec<Label> {
    let fresh = Allocator::for_node(n);
    let mut subjects: Vec<(Subject, Type)> =
        n.delta.iter().filter_map(|(a, t)| Some((Subject::Chan(a.clone()), t.as_chan()?))).collect();
    subjects.extend(n.theta.iter().map(|(k, t)| (Subject::Trig(k.clone()), t.clone())));
    let mut out = Vec::new();
    for (d, payload) in subjects {
        if payload.as_chan().is_some() {
            let names: Vec<&Name> = n.delta.iter().filter(|(_, t)| type_iso(t, &payload)).map(|(a, _)| a).collect();
            for a in names {
                out.push(Label::In(d.clone(), FoValue::Name(a.clone())));
                out.push(Label::Out(d.clone(), FoValue::Name(a.clone())));
            }
            out.push(Label::BoundIn(d.clone(), fresh.channel.clone()));
            out.push(Label::BoundOut(d, fresh.channel.clone()));
        } else if payload.as_abs().is_some() {
            out.push(Label::TrigIn(d.clone(), fresh.trigger.clone()));
            out.push(Label::TrigOut(d, fresh.trigger.clone()));
        } else {
            out.push(Label::In(d.clone(), FoValue::Unit));
            out.push(Label::Out(d, FoValue::Unit));
        }
    }
    out
}

pub fn testing_contexts() -> Result<String, String> {
    let mut configs = curated();
    configs.extend(generated(0x7465_7374, 8, 1));
    let budgets = ProbeBudgets { max_steps: 24, max_states: 20_000, tau_budget: 8 };
    let mut failures = Vec::new();
    let mut hits: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    let mut probes = 0;
    for (env, d) in &configs {
        let node = TypedNode::from_env(env, d);
        for a in candidates(&node) {
            probes += 1;
            let r = match probe_label(env, d, &a, budgets) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{d} with {a}: {e}"));
                    continue;
                }
            };
            let entry = hits.entry(a.class()).or_default();
            if r.reached {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
            if r.truncated {
                failures.push(format!("{d} with {a}: budgets truncated the probe"));
            } else if r.reached != (r.lts_targets > 0) {
                failures
                    .push(format!("{d} with {a}: probe reached = {}, weak transitions = {}", r.reached, r.lts_targets));
            } else if r.reached && !r.factorization_found {
                failures.push(format!("{d} with {a}: residue {:?} does not factor", r.residue.map(|t| t.to_string())));
            }
            if r.dead_barbed {
                failures.push(format!("{d} with {a}: failure channel barbed"));
            }
        }
    }
    for class in ["in", "out", "bound-in", "bound-out", "trig-in", "trig-out"] {
        if hits.get(class).is_none_or(|h| h.0 == 0) {
            failures.push(format!("no successful probe for class {class}"));
        }
    }
    let per_class: Vec<String> = hits.iter().map(|(c, (y, n))| format!("{c} {y}+/{n}-")).collect();
    verdict(
        format!(
            "{} balanced configurations, {probes} probes agree with the transition system ({})",
            configs.len(),
            per_class.join(", ")
        ),
        failures,
    )
}
