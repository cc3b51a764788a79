//! Surface-syntax rendering. `parse(print(t))` is α-equivalent to `t`.

use std::fmt::{self, Write};

use super::term::Term;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    /// Parallel composition allowed without parentheses.
    Top,
    /// Operand of a prefix, replication, branch or abstraction body.
    Prefix,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_value() {
            write_value(self, f, false)
        } else {
            write_process(self, f, Level::Top)
        }
    }
}

/// Renders `t` in the concrete grammar.
pub fn print(t: &Term) -> String {
    t.to_string()
}

fn write_value(v: &Term, f: &mut impl Write, guard_lambda: bool) -> fmt::Result {
    match v {
        Term::Unit => f.write_str("()"),
        Term::Name(a) => write!(f, "{a}"),
        Term::Var(x) => write!(f, "{x}"),
        Term::Call(k) => write!(f, "call {k}"),
        Term::Lambda(x, ty, body) => {
            if guard_lambda {
                f.write_char('(')?;
            }
            write!(f, "\\{x}:{ty} -> ")?;
            write_process(body, f, Level::Prefix)?;
            if guard_lambda {
                f.write_char(')')?;
            }
            Ok(())
        }
        other => {
            f.write_char('(')?;
            write_process(other, f, Level::Top)?;
            f.write_char(')')
        }
    }
}

fn write_process(p: &Term, f: &mut impl Write, level: Level) -> fmt::Result {
    match p {
        Term::Nil => f.write_char('0'),
        Term::App(fun, arg) => {
            match &**fun {
                Term::Call(k) => write!(f, "call {k} ")?,
                other => write_value(other, f, true)?,
            }
            f.write_char('(')?;
            write_value(arg, f, false)?;
            f.write_char(')')
        }
        Term::Input(s, x, ty, body) => {
            write_value(s, f, true)?;
            write!(f, "?({x}:{ty}).")?;
            write_process(body, f, Level::Prefix)
        }
        Term::Output(s, payload, cont) => {
            write_value(s, f, true)?;
            f.write_str("!<")?;
            write_value(payload, f, false)?;
            f.write_str(">.")?;
            write_process(cont, f, Level::Prefix)
        }
        Term::Match(l, r, then, otherwise) => {
            f.write_str("if ")?;
            write_value(l, f, true)?;
            f.write_str(" = ")?;
            write_value(r, f, true)?;
            f.write_str(" then ")?;
            write_process(then, f, Level::Prefix)?;
            f.write_str(" else ")?;
            write_process(otherwise, f, Level::Prefix)
        }
        Term::New(a, ty, body) => {
            write!(f, "nu {a}:{ty}.(")?;
            write_process(body, f, Level::Top)?;
            f.write_char(')')
        }
        Term::Par(l, r) => {
            if level == Level::Prefix {
                f.write_char('(')?;
            }
            // `|` reads right-nested, so a nested left operand needs brackets
            let left = if matches!(**l, Term::Par(..)) { Level::Prefix } else { Level::Top };
            write_process(l, f, left)?;
            f.write_str(" | ")?;
            write_process(r, f, Level::Top)?;
            if level == Level::Prefix {
                f.write_char(')')?;
            }
            Ok(())
        }
        Term::Repl(body) => {
            f.write_char('!')?;
            write_process(body, f, Level::Prefix)
        }
        Term::Resource(k, v) => {
            write!(f, "res {k} <= ")?;
            write_value(v, f, false)
        }
        value => write_value(value, f, false),
    }
}
