//! Line-oriented constraint syntax.
//!
//! ```text
//! rule    := family name "on" (object-type | "store") ":" body
//! body    := ltlf | count | structural-kind
//! count   := "count(" state ["before" state] ")" ("<=" | ">=") integer
//! ```
//!
//! LTLf precedence, tightest first: `!`, then `X WX F G`, then `U`
//! (right-associative), `&`, `|`, `->` (right-associative). Atoms are
//! `etype = "..."`, `attr("name") <op> literal`, `has("name")`,
//! `observed <op> integer`, `true` and `false`. Literals are strings,
//! integers, decimals, booleans and `instant("...")`. `#` starts a comment.

use std::collections::HashSet;

use thiserror::Error;

use super::formula::{Atom, CmpOp, Field, Formula};
use super::{Body, Constraint, CountBound, Family, Scope, Sense, StructuralKind};
use crate::value::{parse_instant, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: expected {expected}")]
    SyntaxError { line: usize, col: usize, expected: String },
    #[error("line {line}: duplicate constraint name `{name}`")]
    DuplicateConstraintName { line: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Dec(f64),
    LParen,
    RParen,
    Colon,
    Not,
    And,
    Or,
    Arrow,
    Cmp(CmpOp),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "a string".into(),
            Tok::Int(_) | Tok::Dec(_) => "a number".into(),
            Tok::End => "end of line".into(),
            other => format!("{other:?}"),
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

type Spanned = (Tok, usize);

impl Lexer {
    fn new(src: &str, line: usize) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, line }
    }

    fn error(&self, col: usize, expected: impl Into<String>) -> ParseError {
        ParseError::SyntaxError { line: self.line, col, expected: expected.into() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
                self.pos += 1;
            }
            let col = self.pos + 1;
            let Some(&c) = self.chars.get(self.pos) else {
                out.push((Tok::End, col));
                return Ok(out);
            };
            let peek = self.chars.get(self.pos + 1).copied();
            let tok = match c {
                '#' => {
                    out.push((Tok::End, col));
                    return Ok(out);
                }
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                ':' => self.single(Tok::Colon),
                '&' | '∧' => self.single(Tok::And),
                '|' | '∨' => self.single(Tok::Or),
                '¬' => self.single(Tok::Not),
                '→' => self.single(Tok::Arrow),
                '≠' => self.single(Tok::Cmp(CmpOp::Ne)),
                '≤' => self.single(Tok::Cmp(CmpOp::Le)),
                '≥' => self.single(Tok::Cmp(CmpOp::Ge)),
                '!' if peek == Some('=') => self.double(Tok::Cmp(CmpOp::Ne)),
                '!' => self.single(Tok::Not),
                '-' if peek == Some('>') => self.double(Tok::Arrow),
                '=' if peek == Some('=') => self.double(Tok::Cmp(CmpOp::Eq)),
                '=' => self.single(Tok::Cmp(CmpOp::Eq)),
                '<' if peek == Some('=') => self.double(Tok::Cmp(CmpOp::Le)),
                '<' => self.single(Tok::Cmp(CmpOp::Lt)),
                '>' if peek == Some('=') => self.double(Tok::Cmp(CmpOp::Ge)),
                '>' => self.single(Tok::Cmp(CmpOp::Gt)),
                '"' => self.string(col)?,
                c if c.is_ascii_digit() || c == '-' => self.number(col)?,
                c if c.is_alphabetic() || c == '_' => self.ident(),
                _ => return Err(self.error(col, "a token")),
            };
            out.push((tok, col));
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.pos += 1;
        tok
    }

    fn double(&mut self, tok: Tok) -> Tok {
        self.pos += 2;
        tok
    }

    fn string(&mut self, col: usize) -> Result<Tok, ParseError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(&c) = self.chars.get(self.pos) else {
                return Err(self.error(col, "closing `\"`"));
            };
            self.pos += 1;
            match c {
                '"' => return Ok(Tok::Str(out)),
                '\\' => {
                    let esc = self.chars.get(self.pos).copied();
                    self.pos += 1;
                    match esc {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some(c @ ('"' | '\\')) => out.push(c),
                        _ => return Err(self.error(self.pos, "an escape (\\n \\t \\r \\\" \\\\)")),
                    }
                }
                c => out.push(c),
            }
        }
    }

    fn number(&mut self, col: usize) -> Result<Tok, ParseError> {
        let start = self.pos;
        if self.chars[self.pos] == '-' {
            self.pos += 1;
        }
        let mut decimal = false;
        while let Some(&c) = self.chars.get(self.pos) {
            let exp_sign =
                (c == '-' || c == '+') && matches!(self.chars[self.pos - 1], 'e' | 'E') && decimal;
            if c.is_ascii_digit() || exp_sign {
                self.pos += 1;
            } else if matches!(c, '.' | 'e' | 'E') {
                decimal = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if decimal {
            match text.parse::<f64>() {
                Ok(d) if d.is_finite() => Ok(Tok::Dec(d)),
                _ => Err(self.error(col, "a number")),
            }
        } else {
            text.parse().map(Tok::Int).map_err(|_| self.error(col, "a number"))
        }
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        while let Some(&c) = self.chars.get(self.pos) {
            let inner_hyphen = c == '-'
                && self.pos > start
                && self.chars.get(self.pos + 1).is_some_and(|n| n.is_alphabetic());
            if c.is_alphanumeric() || c == '_' || inner_hyphen {
                self.pos += 1;
            } else {
                break;
            }
        }
        Tok::Ident(self.chars[start..self.pos].iter().collect())
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError::SyntaxError {
            line: self.line,
            col: self.col(),
            expected: format!("{}, found {}", expected.into(), self.peek().describe()),
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ParseError> {
        if self.is_ident(word) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("`{word}`")))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("a string")),
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or || self.is_ident("or") {
            self.bump();
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And || self.is_ident("and") {
            self.bump();
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Not || self.is_ident("not") {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if let Tok::Ident(word) = self.peek() {
            let op: Option<fn(Formula) -> Formula> = match word.as_str() {
                "X" => Some(Formula::next),
                "WX" => Some(Formula::weak_next),
                "F" => Some(Formula::eventually),
                "G" => Some(Formula::globally),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                return Ok(op(self.unary()?));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                "etype" => {
                    self.bump();
                    let op = self.cmp_op()?;
                    if op.is_ordering() {
                        return Err(self.error("`=` or `!=` (event types are unordered)"));
                    }
                    let value = Value::Str(self.string()?);
                    Ok(Formula::Atom(Atom::Compare { field: Field::EventType, op, value }))
                }
                "observed" => {
                    self.bump();
                    let op = self.cmp_op()?;
                    match self.bump() {
                        Tok::Int(n) => Ok(Formula::Atom(Atom::Compare {
                            field: Field::Observed,
                            op,
                            value: Value::Int(n),
                        })),
                        _ => Err(self.error("an integer")),
                    }
                }
                "has" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let name = self.string()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Formula::Atom(Atom::Present(name)))
                }
                "attr" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let name = self.string()?;
                    self.expect(Tok::RParen, "`)`")?;
                    let op = self.cmp_op()?;
                    let col = self.col();
                    let value = self.literal()?;
                    if op.is_ordering() && !value.is_ordered() {
                        return Err(ParseError::SyntaxError {
                            line: self.line,
                            col,
                            expected: "an integer, decimal or instant for an ordering comparison"
                                .into(),
                        });
                    }
                    Ok(Formula::Atom(Atom::Compare { field: Field::Attr(name), op, value }))
                }
                _ => Err(self.error("a formula")),
            },
            _ => Err(self.error("a formula")),
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp, ParseError> {
        match self.peek() {
            Tok::Cmp(op) => {
                let op = *op;
                self.bump();
                Ok(op)
            }
            _ => Err(self.error("a comparison operator")),
        }
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Value::Int(i))
            }
            Tok::Dec(d) => {
                self.bump();
                Ok(Value::Dec(d))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Ok(Value::Bool(w == "true"))
            }
            Tok::Ident(w) if w == "instant" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let col = self.col();
                let text = self.string()?;
                self.expect(Tok::RParen, "`)`")?;
                parse_instant(&text).map(Value::Instant).ok_or(ParseError::SyntaxError {
                    line: self.line,
                    col,
                    expected: "an ISO-8601 instant".into(),
                })
            }
            _ => Err(self.error("a literal")),
        }
    }

    fn state_formula(&mut self) -> Result<Formula, ParseError> {
        let col = self.col();
        let f = self.implication()?;
        if f.is_temporal() {
            return Err(ParseError::SyntaxError {
                line: self.line,
                col,
                expected: "a formula without temporal operators".into(),
            });
        }
        Ok(f)
    }

    fn count(&mut self) -> Result<CountBound, ParseError> {
        self.expect_ident("count")?;
        self.expect(Tok::LParen, "`(`")?;
        let counted = self.state_formula()?;
        let delimiter = if self.is_ident("before") {
            self.bump();
            Some(self.state_formula()?)
        } else {
            None
        };
        self.expect(Tok::RParen, "`)` or `before`")?;
        let sense = match self.bump() {
            Tok::Cmp(CmpOp::Le) => Sense::AtMost,
            Tok::Cmp(CmpOp::Ge) => Sense::AtLeast,
            _ => {
                self.pos -= 1;
                return Err(self.error("`<=` or `>=`"));
            }
        };
        let bound = match self.peek() {
            Tok::Int(n) if *n >= 0 => *n as u64,
            _ => return Err(self.error("a non-negative integer")),
        };
        self.bump();
        Ok(CountBound { counted, delimiter, bound, sense })
    }

    fn end(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error("end of rule"))
        }
    }
}

fn family(word: &str) -> Option<Family> {
    Some(match word {
        "safety" => Family::Safety,
        "cardinality" => Family::Cardinality,
        "liveness" => Family::Liveness,
        "fairness" => Family::Fairness,
        "consistency" => Family::Consistency,
        "structural" => Family::Structural,
        _ => return None,
    })
}

fn parse_rule(text: &str, line: usize) -> Result<Option<Constraint>, ParseError> {
    let toks = Lexer::new(text, line).tokens()?;
    if toks[0].0 == Tok::End {
        return Ok(None);
    }
    let mut p = Parser { toks, pos: 0, line };
    let family = match p.peek() {
        Tok::Ident(w) => family(w),
        _ => None,
    }
    .ok_or_else(|| p.error("a constraint family (safety, cardinality, liveness, fairness, consistency, structural)"))?;
    p.bump();
    let name = p.name("a constraint name")?;
    p.expect_ident("on")?;
    let scope = match p.peek().clone() {
        Tok::Ident(w) if w == "store" => Scope::Store,
        Tok::Ident(w) | Tok::Str(w) => Scope::ObjectType(w),
        _ => return Err(p.error("an object type or `store`")),
    };
    p.bump();
    p.expect(Tok::Colon, "`:`")?;

    let structural = match p.peek() {
        Tok::Ident(w) => StructuralKind::from_keyword(w),
        _ => None,
    };
    if let Some(kind) = structural {
        if scope != Scope::Store {
            return Err(p.error("a temporal or count body (structural checks need scope `store`)"));
        }
        p.bump();
        p.end()?;
        return Ok(Some(Constraint { name, family, scope, body: Body::Structural(kind) }));
    }
    let body = if p.is_ident("count") {
        Body::Count(p.count()?)
    } else {
        Body::Ltlf(p.implication()?)
    };
    p.end()?;
    Ok(Some(Constraint { name, family, scope, body }))
}

/// Parses a constraint file. Blank and comment-only lines are ignored.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(c) = parse_rule(line, i + 1)? {
            if !names.insert(c.name.clone()) {
                return Err(ParseError::DuplicateConstraintName { line: i + 1, name: c.name });
            }
            out.push(c);
        }
    }
    Ok(out)
}

/// Parses a single formula, e.g. for programmatic use or tests.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = Lexer::new(text, 1).tokens()?;
    let mut p = Parser { toks, pos: 0, line: 1 };
    let f = p.implication()?;
    p.end()?;
    Ok(f)
}
