use std::collections::BTreeMap;

use hopi_core::gen::{rec_chan, standard_env, Gen};
use hopi_core::syntax::parse_type;
use hopi_core::typing::{check_config, check_guarded_type, check_subject_reduction, type_iso};
use hopi_core::{Env, Term, Trigger, Type};

use crate::common::{doc, env_of, verdict};

const BINDERS: [&str; 2] = ["Z", "W"];

/// All types of depth at most `d` whose free variables lie in `scope`.
fn enumerate(d: usize, scope: &[&'static str]) -> Vec<Type> {
    let mut out = vec![Type::Unit];
    out.extend(scope.iter().map(|z| Type::var(z)));
    if d > 1 {
        for t in enumerate(d - 1, scope) {
            out.push(Type::chan(t.clone()));
            out.push(Type::abs(t));
        }
        for z in BINDERS {
            let mut inner: Vec<&'static str> = scope.iter().copied().filter(|s| *s != z).collect();
            inner.push(z);
            for t in enumerate(d - 1, &inner) {
                out.push(Type::rec(z, t));
            }
        }
    }
    out
}

fn free_in(t: &Type, z: &str) -> bool {
    match t {
        Type::Unit => false,
        Type::Var(v) => v.as_str() == z,
        Type::Chan(u) | Type::Abs(u) => free_in(u, z),
        Type::Rec(v, u) => v.as_str() != z && free_in(u, z),
    }
}

/// Free occurrences of `z` not under `ch` or `abs`.
fn exposed(t: &Type, z: &str) -> bool {
    match t {
        Type::Var(v) => v.as_str() == z,
        Type::Rec(v, u) => v.as_str() != z && exposed(u, z),
        _ => false,
    }
}

fn guarded_oracle(t: &Type) -> bool {
    match t {
        Type::Unit | Type::Var(_) => true,
        Type::Chan(u) | Type::Abs(u) => guarded_oracle(u),
        Type::Rec(z, u) => !exposed(u, z.as_str()) && guarded_oracle(u),
    }
}

fn closed(t: &Type) -> bool {
    BINDERS.iter().all(|z| !free_in(t, z))
}

/// Substitution for closed `by`, so no capture can happen.
fn subst(t: &Type, z: &str, by: &Type) -> Type {
    match t {
        Type::Unit => Type::Unit,
        Type::Var(v) if v.as_str() == z => by.clone(),
        Type::Var(_) => t.clone(),
        Type::Chan(u) => Type::chan(subst(u, z, by)),
        Type::Abs(u) => Type::abs(subst(u, z, by)),
        Type::Rec(v, _) if v.as_str() == z => t.clone(),
        Type::Rec(v, u) => Type::Rec(v.clone(), Box::new(subst(u, z, by))),
    }
}

fn size(t: &Type) -> usize {
    match t {
        Type::Unit | Type::Var(_) => 1,
        Type::Chan(u) | Type::Abs(u) | Type::Rec(_, u) => 1 + size(u),
    }
}

/// The infinite unfolding of a closed guarded type, cut at depth `n`.
fn tree(t: &Type, n: usize) -> String {
    if n == 0 {
        return "*".into();
    }
    match t {
        Type::Unit => "u".into(),
        Type::Chan(u) => format!("c({})", tree(u, n - 1)),
        Type::Abs(u) => format!("a({})", tree(u, n - 1)),
        Type::Rec(z, u) => tree(&subst(u, z.as_str(), t), n),
        Type::Var(_) => unreachable!("closed types only"),
    }
}

/// Two regular trees with `m` and `n` distinct subtrees agree everywhere
/// once they agree to depth `m + n`.
fn iso_oracle(t: &Type, u: &Type) -> bool {
    let n = size(t) + size(u) + 1;
    tree(t, n) == tree(u, n)
}

fn iso_laws() -> Result<usize, Vec<String>> {
    let all = enumerate(4, &[]);
    let mut failures = Vec::new();
    for t in &all {
        if check_guarded_type(t) != guarded_oracle(t) {
            failures.push(format!("guardedness of {t}"));
        }
    }
    let types: Vec<Type> = all.into_iter().filter(|t| closed(t) && guarded_oracle(t)).collect();
    // one cut depth for all, at least the pairwise bound
    let cut = 2 * types.iter().map(size).max().unwrap_or(1) + 1;
    let keys: Vec<String> = types.iter().map(|t| tree(t, cut)).collect();
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in types.iter().enumerate() {
        if !type_iso(t, t) {
            failures.push(format!("reflexivity at {t}"));
        }
        if let Type::Rec(z, b) = t {
            if !type_iso(t, &subst(b, z.as_str(), t)) || !type_iso(&subst(b, z.as_str(), t), t) {
                failures.push(format!("unfolding law at {t}"));
            }
        }
        classes.entry(&keys[i]).or_default().push(i);
        for u in types.iter().skip(i + 1) {
            let got = type_iso(t, u);
            if got != iso_oracle(t, u) {
                failures.push(format!("{t} ~ {u}: got {got}"));
            }
            if got != type_iso(u, t) {
                failures.push(format!("symmetry at {t}, {u}"));
            }
            if got
                && !(type_iso(&Type::chan(t.clone()), &Type::chan(u.clone()))
                    && type_iso(&Type::abs(t.clone()), &Type::abs(u.clone())))
            {
                failures.push(format!("congruence at {t}, {u}"));
            }
        }
    }
    // transitivity inside each class of the oracle
    for members in classes.values().filter(|m| m.len() > 2) {
        let m: Vec<&Type> = members.iter().take(12).map(|&i| &types[i]).collect();
        for a in &m {
            for b in &m {
                for c in &m {
                    if type_iso(a, b) && type_iso(b, c) && !type_iso(a, c) {
                        failures.push(format!("transitivity at {a}, {b}, {c}"));
                    }
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(types.len())
    } else {
        Err(failures)
    }
}

fn recursive_types() -> Vec<String> {
    let mut failures = Vec::new();
    let sharp = parse_type("rec Z. ch<Z>").expect("parses");
    if sharp != rec_chan() || !check_guarded_type(&sharp) {
        failures.push("rec Z. ch<Z> must be guarded".to_string());
    }
    let d = doc("chan r : rec Z. ch<Z>", "r!<r>.0 | r?(x:rec Z. ch<Z>).x!<x>.0 | r?(y:ch<rec Z. ch<Z>>).y!<r>.0");
    if let Err(e) = check_config(&env_of(&d), &d.term) {
        failures.push(format!("rec Z. ch<Z> example rejected: {e}"));
    }
    let bad = parse_type("rec Z. Z").expect("parses");
    if check_guarded_type(&bad) {
        failures.push("rec Z. Z accepted as guarded".into());
    }
    let env = Env::new().channel("a", Type::chan(bad.clone()));
    if env.check().is_ok() || check_config(&env, &Term::Nil).is_ok() {
        failures.push("environment with rec Z. Z accepted".into());
    }
    let p = Term::new_name("n", Type::chan(bad), Term::Nil);
    if check_config(&Env::new(), &p).is_ok() {
        failures.push("restriction at rec Z. Z accepted".into());
    }
    failures
}

fn subject_reduction() -> (usize, Vec<String>) {
    let env = standard_env();
    let theta = BTreeMap::from([(Trigger::new("t0"), Type::Unit), (Trigger::new("t1"), Type::chan(Type::Unit))]);
    let cenv = Env::with_channels(env.channels.clone(), theta.clone());
    let mut g = Gen::from_env(0x7479_7065);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let (e, c) =
            if i % 4 == 3 { (&cenv, g.balanced_config(&env.channels, &theta, 3)) } else { (&env, g.system(&env, 3)) };
        if let Err(err) = check_config(e, &c) {
            failures.push(format!("generator produced ill-typed {c}: {err}"));
            continue;
        }
        if let Err(cex) = check_subject_reduction(e, &c, 4) {
            failures.push(format!("{c}: after {} steps: {}", cex.trace.len(), cex.error));
        }
    }
    (1000, failures)
}

pub fn criterion() -> Result<String, String> {
    let mut failures = recursive_types();
    let (terms, sr) = subject_reduction();
    failures.extend(sr);
    let types = match iso_laws() {
        Ok(n) => n,
        Err(f) => {
            failures.extend(f);
            0
        }
    };
    verdict(
        format!("rec Z. ch<Z> accepted, rec Z. Z rejected; subject reduction on {terms} terms x 4 steps; iso laws on {types} closed types"),
        failures,
    )
}
