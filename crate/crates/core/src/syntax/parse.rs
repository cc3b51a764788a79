//! Lexer and recursive-descent parser for the concrete grammar.
//!
//! ```text
//! types:  unit | ch<T> | abs<T> | rec Z. T | Z
//! values: () | name | variable | \x:T -> P | call k
//! procs:  v(w) | c?(x:T).P | c!<v>.P | if v = w then P else Q
//!         | nu a:T.(P) | P | Q | !P | 0 | res k <= v
//! header: chan a : T | trigger k : T      (optionally `;`-terminated)
//! ```
//!
//! Prefixes bind tighter than `|`; `--` starts a comment. An identifier in
//! term position is a variable when an enclosing binder introduced it and a
//! channel name otherwise. Trigger identifiers must be declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ident::{Name, Trigger, TyVar, Var};
use super::term::Term;
use super::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.column)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

/// A parsed input file: declared environments plus the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub channels: BTreeMap<Name, Type>,
    pub triggers: BTreeMap<Trigger, Type>,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    LParen,
    RParen,
    Lt,
    Gt,
    LtEq,
    Arrow,
    Backslash,
    Colon,
    Dot,
    Bang,
    Question,
    Pipe,
    Eq,
    Semi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Zero => "`0`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::LtEq => "`<=`",
            Tok::Arrow => "`->`",
            Tok::Backslash => "`\\`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Bang => "`!`",
            Tok::Question => "`?`",
            Tok::Pipe => "`|`",
            Tok::Eq => "`=`",
            Tok::Semi => "`;`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

/// Declared channels and trigger identifiers.
type Header = (BTreeMap<Name, Type>, BTreeMap<Trigger, Type>);

const KEYWORDS: &[&str] = &["unit", "ch", "abs", "rec", "call", "res", "nu", "if", "then", "else", "chan", "trigger"];

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: l0, column: c0 });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'=') => push(Tok::LtEq, 2, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '<' => push(Tok::Lt, 1, &mut i, &mut col),
            '>' => push(Tok::Gt, 1, &mut i, &mut col),
            '\\' => push(Tok::Backslash, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '!' => push(Tok::Bang, 1, &mut i, &mut col),
            '?' => push(Tok::Question, 1, &mut i, &mut col),
            '|' => push(Tok::Pipe, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '0' if !chars.get(i + 1).is_some_and(|d| d.is_alphanumeric()) => push(Tok::Zero, 1, &mut i, &mut col),
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(word), line: l0, column: c0 });
            }
            other => {
                return Err(ParseError {
                    line,
                    column: col,
                    expected: vec!["a token".into()],
                    found: format!("character `{other}`"),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vars: Vec<Var>,
    triggers: &'a BTreeSet<Trigger>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let here = &self.toks[self.pos];
        ParseError {
            line: here.line,
            column: here.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: here.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn trigger(&mut self) -> Result<Trigger, ParseError> {
        let save = self.pos;
        let k = Trigger::new(self.ident("a trigger identifier")?);
        if !self.triggers.contains(&k) {
            self.pos = save;
            return Err(self.error(&["a declared trigger identifier"]));
        }
        Ok(k)
    }

    // ----- types ------------------------------------------------------------

    fn ty(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "unit" => {
                self.bump();
                Ok(Type::Unit)
            }
            Tok::Ident(s) if s == "ch" || s == "abs" => {
                self.bump();
                self.expect(Tok::Lt)?;
                let inner = self.ty()?;
                self.expect(Tok::Gt)?;
                Ok(if s == "ch" { Type::chan(inner) } else { Type::abs(inner) })
            }
            Tok::Ident(s) if s == "rec" => {
                self.bump();
                let z = self.ident("a type variable")?;
                self.expect(Tok::Dot)?;
                let body = self.ty()?;
                Ok(Type::Rec(TyVar::new(z), Box::new(body)))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Type::Var(TyVar::new(s)))
            }
            _ => Err(self.error(&["`unit`", "`ch`", "`abs`", "`rec`", "a type variable"])),
        }
    }

    // ----- values -----------------------------------------------------------

    fn resolve(&self, id: String) -> Term {
        let x = Var::new(&id);
        if self.vars.contains(&x) {
            Term::Var(x)
        } else {
            Term::Name(Name::new(id))
        }
    }

    fn value(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::LParen if *self.peek_at(1) == Tok::RParen => {
                self.bump();
                self.bump();
                Ok(Term::Unit)
            }
            Tok::LParen => {
                self.bump();
                let v = self.value()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Backslash => self.lambda(),
            Tok::Ident(s) if s == "call" => {
                self.bump();
                Ok(Term::Call(self.trigger()?))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(self.resolve(s))
            }
            _ => Err(self.error(&["`()`", "a name", "a variable", "`\\`", "`call`"])),
        }
    }

    fn lambda(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Backslash)?;
        let x = Var::new(self.ident("a variable")?);
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(Tok::Arrow)?;
        self.vars.push(x.clone());
        let body = self.prefix();
        self.vars.pop();
        Ok(Term::Lambda(x, ty, Box::new(body?)))
    }

    // ----- processes --------------------------------------------------------

    /// Top level: a process, or a bare abstraction.
    fn top(&mut self) -> Result<Term, ParseError> {
        if *self.peek() == Tok::Backslash {
            self.lambda()
        } else {
            self.process()
        }
    }

    fn process(&mut self) -> Result<Term, ParseError> {
        let mut items = vec![self.prefix()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            items.push(self.prefix()?);
        }
        Ok(Term::par_all(items))
    }

    fn application(&mut self, fun: Term) -> Result<Term, ParseError> {
        self.expect(Tok::LParen)?;
        let arg = self.value()?;
        self.expect(Tok::RParen)?;
        Ok(Term::app(fun, arg))
    }

    fn prefix(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::Bang => {
                self.bump();
                Ok(Term::repl(self.prefix()?))
            }
            Tok::LParen if *self.peek_at(1) == Tok::Backslash => {
                self.bump();
                let fun = self.lambda()?;
                self.expect(Tok::RParen)?;
                self.application(fun)
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(s) => match s.as_str() {
                "nu" => {
                    self.bump();
                    let a = Name::new(self.ident("a channel name")?);
                    self.expect(Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(Tok::Dot)?;
                    self.expect(Tok::LParen)?;
                    let body = self.process()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::New(a, ty, Box::new(body)))
                }
                "if" => {
                    self.bump();
                    let l = self.value()?;
                    self.expect(Tok::Eq)?;
                    let r = self.value()?;
                    self.keyword("then")?;
                    let then = self.prefix()?;
                    self.keyword("else")?;
                    let otherwise = self.prefix()?;
                    Ok(Term::matching(l, r, then, otherwise))
                }
                "res" => {
                    self.bump();
                    let k = self.trigger()?;
                    self.expect(Tok::LtEq)?;
                    let v = self.value()?;
                    Ok(Term::Resource(k, Box::new(v)))
                }
                "call" => {
                    self.bump();
                    let k = self.trigger()?;
                    self.application(Term::Call(k))
                }
                kw if KEYWORDS.contains(&kw) => Err(self.process_start_error()),
                _ => {
                    self.bump();
                    let subject = self.resolve(s);
                    self.after_subject(subject)
                }
            },
            _ => Err(self.process_start_error()),
        }
    }

    fn after_subject(&mut self, subject: Term) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Question => {
                self.bump();
                self.expect(Tok::LParen)?;
                let x = Var::new(self.ident("a variable")?);
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                self.vars.push(x.clone());
                let body = self.prefix();
                self.vars.pop();
                Ok(Term::Input(Box::new(subject), x, ty, Box::new(body?)))
            }
            Tok::Bang => {
                self.bump();
                self.expect(Tok::Lt)?;
                let payload = self.value()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let cont = self.prefix()?;
                Ok(Term::output(subject, payload, cont))
            }
            Tok::LParen => self.application(subject),
            _ => Err(self.error(&["`?`", "`!`", "`(`"])),
        }
    }

    fn process_start_error(&self) -> ParseError {
        self.error(&["`0`", "`!`", "`(`", "`nu`", "`if`", "`res`", "`call`", "a name", "a variable"])
    }

    fn header(&mut self) -> Result<Header, ParseError> {
        let mut channels = BTreeMap::new();
        let mut triggers = BTreeMap::new();
        loop {
            if self.is_keyword("chan") {
                self.bump();
                let a = Name::new(self.ident("a channel name")?);
                self.expect(Tok::Colon)?;
                channels.insert(a, self.ty()?);
            } else if self.is_keyword("trigger") {
                self.bump();
                let k = Trigger::new(self.ident("a trigger identifier")?);
                self.expect(Tok::Colon)?;
                triggers.insert(k, self.ty()?);
            } else {
                return Ok((channels, triggers));
            }
            if *self.peek() == Tok::Semi {
                self.bump();
            }
        }
    }
}

/// Parses a configuration; triggers must be declared in a header.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    parse_document(src).map(|d| d.term)
}

/// Parses a configuration that may mention the given triggers without a
/// header declaring them.
pub fn parse_with_triggers(src: &str, triggers: &BTreeSet<Trigger>) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, vars: Vec::new(), triggers };
    let t = p.top()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`|`", "end of input"]));
    }
    Ok(t)
}

/// Parses a full input file: `chan`/`trigger` declarations, then a term.
pub fn parse_document(src: &str) -> Result<Document, ParseError> {
    let toks = lex(src)?;
    let empty = BTreeSet::new();
    let mut p = Parser { toks, pos: 0, vars: Vec::new(), triggers: &empty };
    let (channels, triggers) = p.header()?;
    let declared: BTreeSet<Trigger> = triggers.keys().cloned().collect();
    let mut p = Parser { toks: p.toks, pos: p.pos, vars: Vec::new(), triggers: &declared };
    let term = p.top()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`|`", "end of input"]));
    }
    Ok(Document { channels, triggers, term })
}

/// Parses a type in the concrete grammar.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let toks = lex(src)?;
    let empty = BTreeSet::new();
    let mut p = Parser { toks, pos: 0, vars: Vec::new(), triggers: &empty };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(t)
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, t) in &self.channels {
            writeln!(f, "chan {a} : {t}")?;
        }
        for (k, t) in &self.triggers {
            writeln!(f, "trigger {k} : {t}")?;
        }
        write!(f, "{}", self.term)
    }
}
