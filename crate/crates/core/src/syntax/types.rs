use std::collections::BTreeSet;
use std::fmt;

use super::ident::{fresh_variant, TyVar};

/// Value types: unit, channels, abstractions and (guarded) recursive types.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Type {
    Unit,
    Chan(Box<Type>),
    Abs(Box<Type>),
    Var(TyVar),
    Rec(TyVar, Box<Type>),
}

/// Bound on consecutive unfoldings when looking for a type's head; only an
/// unguarded recursive type can exhaust it.
const MAX_HEAD_UNFOLDINGS: usize = 64;

impl Type {
    pub fn chan(payload: Type) -> Type {
        Type::Chan(Box::new(payload))
    }

    pub fn abs(arg: Type) -> Type {
        Type::Abs(Box::new(arg))
    }

    pub fn var(z: &str) -> Type {
        Type::Var(TyVar::new(z))
    }

    pub fn rec(z: &str, body: Type) -> Type {
        Type::Rec(TyVar::new(z), Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Unit => {}
            Type::Chan(t) | Type::Abs(t) => t.collect_free(bound, out),
            Type::Var(z) => {
                if !bound.contains(z) {
                    out.insert(z.clone());
                }
            }
            Type::Rec(z, body) => {
                bound.push(z.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    fn all_vars(&self, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Unit => {}
            Type::Chan(t) | Type::Abs(t) => t.all_vars(out),
            Type::Var(z) => {
                out.insert(z.clone());
            }
            Type::Rec(z, body) => {
                out.insert(z.clone());
                body.all_vars(out);
            }
        }
    }

    /// Capture-avoiding substitution `self[by/z]`.
    pub fn subst(&self, z: &TyVar, by: &Type) -> Type {
        match self {
            Type::Unit => Type::Unit,
            Type::Chan(t) => Type::chan(t.subst(z, by)),
            Type::Abs(t) => Type::abs(t.subst(z, by)),
            Type::Var(y) if y == z => by.clone(),
            Type::Var(_) => self.clone(),
            Type::Rec(y, _) if y == z => self.clone(),
            Type::Rec(y, body) => {
                let by_free = by.free_vars();
                if by_free.contains(y) && body.free_vars().contains(z) {
                    let mut used = BTreeSet::new();
                    body.all_vars(&mut used);
                    used.extend(by_free);
                    used.insert(z.clone());
                    let fresh = TyVar::new(fresh_variant(y.as_str(), |c| used.contains(&TyVar::new(c))));
                    let renamed = body.subst(y, &Type::Var(fresh.clone()));
                    Type::Rec(fresh, Box::new(renamed.subst(z, by)))
                } else {
                    Type::Rec(y.clone(), Box::new(body.subst(z, by)))
                }
            }
        }
    }

    /// One-step unfolding `T[μZ.T/Z]` of a recursive type; `None` otherwise.
    pub fn unfold(&self) -> Option<Type> {
        match self {
            Type::Rec(z, body) => Some(body.subst(z, self)),
            _ => None,
        }
    }

    /// Unfolds recursive binders until a non-recursive head appears.
    pub fn head_normal(&self) -> Type {
        let mut cur = self.clone();
        for _ in 0..MAX_HEAD_UNFOLDINGS {
            match cur.unfold() {
                Some(next) => cur = next,
                None => return cur,
            }
        }
        cur
    }

    /// True iff every recursive binder occurs only under `ch<..>` or `abs<..>`.
    pub fn is_guarded(&self) -> bool {
        match self {
            Type::Unit | Type::Var(_) => true,
            Type::Chan(t) | Type::Abs(t) => t.is_guarded(),
            Type::Rec(z, body) => !body.unguarded_vars().contains(z) && body.is_guarded(),
        }
    }

    /// Free type variables reachable without passing a `ch` or `abs` constructor.
    fn unguarded_vars(&self) -> BTreeSet<TyVar> {
        match self {
            Type::Unit | Type::Chan(_) | Type::Abs(_) => BTreeSet::new(),
            Type::Var(z) => BTreeSet::from([z.clone()]),
            Type::Rec(z, body) => {
                let mut s = body.unguarded_vars();
                s.remove(z);
                s
            }
        }
    }

    /// Payload type if this type is (iso to) a channel type.
    pub fn as_chan(&self) -> Option<Type> {
        match self.head_normal() {
            Type::Chan(t) => Some(*t),
            _ => None,
        }
    }

    /// Argument type if this type is (iso to) an abstraction type.
    pub fn as_abs(&self) -> Option<Type> {
        match self.head_normal() {
            Type::Abs(t) => Some(*t),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Type::Unit | Type::Var(_) => 1,
            Type::Chan(t) | Type::Abs(t) => 1 + t.depth(),
            Type::Rec(_, t) => 1 + t.depth(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("unit"),
            Type::Chan(t) => write!(f, "ch<{t}>"),
            Type::Abs(t) => write!(f, "abs<{t}>"),
            Type::Var(z) => write!(f, "{z}"),
            Type::Rec(z, t) => write!(f, "rec {z}. {t}"),
        }
    }
}
