//! Identifier namespaces.
//!
//! Channel names, variables, trigger identifiers and type variables live in
//! four disjoint namespaces. Each is a cheap-to-clone interned string.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! identifier {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                Self(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Ok(Self::new(s))
            }
        }
    };
}

identifier!(
    /// A channel name (`a`, `b`, ...).
    Name
);
identifier!(
    /// A term variable bound by an abstraction or an input prefix.
    Var
);
identifier!(
    /// An indirect-reference identifier `k` naming a stored abstraction.
    Trigger
);
identifier!(
    /// A type variable bound by a recursive type.
    TyVar
);

/// First of `base_1`, `base_2`, ... not rejected by `taken`.
pub(crate) fn fresh_variant(base: &str, mut taken: impl FnMut(&str) -> bool) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let stem = if stem.is_empty() { base } else { stem };
    (1..).map(|i| format!("{stem}_{i}")).find(|cand| !taken(cand)).expect("unbounded candidate stream")
}
