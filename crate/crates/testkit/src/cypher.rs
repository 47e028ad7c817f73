//! A reader for the openCypher subset the exporter writes: `CREATE` of a
//! single node pattern and `MATCH` of node patterns followed by `CREATE` of
//! one relationship. Lexical rules (string escapes, backtick names, number
//! forms, case-insensitive keywords) follow openCypher. Statements are then
//! replayed against an in-memory graph to check what a database would build.

use chrono::SecondsFormat;
use foced_core::graph::PropertyGraph;
use foced_core::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl Lit {
    /// How a store value should read back after export.
    pub fn expected(v: &Value) -> Lit {
        match v {
            Value::Str(s) => Lit::Str(s.clone()),
            Value::Int(i) => Lit::Int(*i),
            Value::Dec(d) => Lit::Float(*d),
            Value::Bool(b) => Lit::Bool(*b),
            Value::Instant(t) => Lit::Str(t.to_rfc3339_opts(SecondsFormat::Millis, true)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePattern {
    pub var: Option<String>,
    pub labels: Vec<String>,
    pub props: Vec<(String, Lit)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    CreateNode(NodePattern),
    MatchCreate { matched: Vec<NodePattern>, from: String, rel: String, to: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    /// Backtick-quoted name; never a keyword.
    Quoted(String),
    Str(String),
    Num(String),
    Punct(char),
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Name(chars[start..i].iter().collect()));
        } else if c == '`' {
            let mut name = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated backtick name".into()),
                    Some('`') if chars.get(i + 1) == Some(&'`') => {
                        name.push('`');
                        i += 2;
                    }
                    Some('`') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        name.push(ch);
                        i += 1;
                    }
                }
            }
            if name.is_empty() {
                return Err("empty backtick name".into());
            }
            out.push(Tok::Quoted(name));
        } else if c == '\'' || c == '"' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            loop {
                let Some(&ch) = chars.get(i) else { return Err("unterminated string".into()) };
                i += 1;
                if ch == quote {
                    break;
                }
                if ch != '\\' {
                    s.push(ch);
                    continue;
                }
                let Some(&esc) = chars.get(i) else { return Err("dangling escape".into()) };
                i += 1;
                match esc {
                    '\\' => s.push('\\'),
                    '\'' => s.push('\''),
                    '"' => s.push('"'),
                    'b' => s.push('\u{8}'),
                    'f' => s.push('\u{c}'),
                    'n' => s.push('\n'),
                    'r' => s.push('\r'),
                    't' => s.push('\t'),
                    'u' | 'U' => {
                        let len = if esc == 'u' { 4 } else { 8 };
                        let hex: String = chars.get(i..i + len).ok_or("short unicode escape")?.iter().collect();
                        let code = u32::from_str_radix(&hex, 16).map_err(|_| "bad unicode escape")?;
                        s.push(char::from_u32(code).ok_or("invalid code point")?);
                        i += len;
                    }
                    other => return Err(format!("invalid escape \\{other}")),
                }
            }
            out.push(Tok::Str(s));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                i += 1;
                if matches!(chars.get(i), Some('+' | '-')) {
                    i += 1;
                }
                if !chars.get(i).is_some_and(|d| d.is_ascii_digit()) {
                    return Err("malformed exponent".into());
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if "()[]{}:,;->".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.pos).cloned().ok_or("unexpected end of script")?;
        self.pos += 1;
        Ok(t)
    }

    fn punct(&mut self, c: char) -> Result<(), String> {
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => Err(format!("expected `{c}`, found {other:?}")),
        }
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), String> {
        match self.next()? {
            Tok::Name(n) if n.eq_ignore_ascii_case(kw) => Ok(()),
            other => Err(format!("expected {kw}, found {other:?}")),
        }
    }

    fn name(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Name(n) | Tok::Quoted(n) => Ok(n),
            other => Err(format!("expected a name, found {other:?}")),
        }
    }

    fn literal(&mut self) -> Result<Lit, String> {
        let negative = self.at_punct('-');
        if negative {
            self.pos += 1;
        }
        let tok = self.next()?;
        let lit = match tok {
            Tok::Str(s) if !negative => Lit::Str(s),
            Tok::Num(n) => {
                let text = if negative { format!("-{n}") } else { n };
                if text.contains(['.', 'e', 'E']) {
                    Lit::Float(text.parse().map_err(|_| format!("bad float {text}"))?)
                } else {
                    Lit::Int(text.parse().map_err(|_| format!("integer out of range {text}"))?)
                }
            }
            Tok::Name(n) if !negative && n.eq_ignore_ascii_case("true") => Lit::Bool(true),
            Tok::Name(n) if !negative && n.eq_ignore_ascii_case("false") => Lit::Bool(false),
            Tok::Name(n) if !negative && n.eq_ignore_ascii_case("null") => Lit::Null,
            other => return Err(format!("expected a literal, found {other:?}")),
        };
        Ok(lit)
    }

    fn map(&mut self) -> Result<Vec<(String, Lit)>, String> {
        self.punct('{')?;
        let mut props = Vec::new();
        if self.at_punct('}') {
            self.pos += 1;
            return Ok(props);
        }
        loop {
            let key = self.name()?;
            self.punct(':')?;
            let value = self.literal()?;
            if props.iter().any(|(k, _)| *k == key) {
                return Err(format!("duplicate map key {key}"));
            }
            props.push((key, value));
            if self.at_punct(',') {
                self.pos += 1;
                continue;
            }
            self.punct('}')?;
            return Ok(props);
        }
    }

    fn node(&mut self) -> Result<NodePattern, String> {
        self.punct('(')?;
        let var = match self.peek() {
            Some(Tok::Name(_) | Tok::Quoted(_)) => Some(self.name()?),
            _ => None,
        };
        let mut labels = Vec::new();
        while self.at_punct(':') {
            self.pos += 1;
            labels.push(self.name()?);
        }
        let props = if self.at_punct('{') { self.map()? } else { Vec::new() };
        self.punct(')')?;
        Ok(NodePattern { var, labels, props })
    }

    fn statement(&mut self) -> Result<Statement, String> {
        match self.peek() {
            Some(Tok::Name(n)) if n.eq_ignore_ascii_case("CREATE") => {
                self.pos += 1;
                let node = self.node()?;
                if node.labels.len() != 1 {
                    return Err("created node needs exactly one label".into());
                }
                Ok(Statement::CreateNode(node))
            }
            Some(Tok::Name(n)) if n.eq_ignore_ascii_case("MATCH") => {
                self.pos += 1;
                let mut matched = vec![self.node()?];
                while self.at_punct(',') {
                    self.pos += 1;
                    matched.push(self.node()?);
                }
                self.keyword("CREATE")?;
                let from = self.node()?;
                self.punct('-')?;
                self.punct('[')?;
                self.punct(':')?;
                let rel = self.name()?;
                self.punct(']')?;
                self.punct('-')?;
                self.punct('>')?;
                let to = self.node()?;
                let bare = |n: &NodePattern| n.labels.is_empty() && n.props.is_empty();
                let endpoints_bare = bare(&from) && bare(&to);
                match (from.var, to.var) {
                    (Some(f), Some(t)) if endpoints_bare => {
                        Ok(Statement::MatchCreate { matched, from: f, rel, to: t })
                    }
                    _ => Err("relationship endpoints must be bound variables".into()),
                }
            }
            other => Err(format!("expected CREATE or MATCH, found {other:?}")),
        }
    }
}

/// Parses a whole script; every statement must end with `;`.
pub fn parse_script(text: &str) -> Result<Vec<Statement>, String> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
        p.punct(';')?;
    }
    Ok(out)
}

/// What a database holds after running a script.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Replayed {
    pub nodes: Vec<(String, Vec<(String, Lit)>)>,
    /// `(source node index, type, target node index)`.
    pub edges: Vec<(usize, String, usize)>,
}

/// Runs the statements. Each `MATCH` pattern must select exactly one node.
pub fn replay(statements: &[Statement]) -> Result<Replayed, String> {
    let mut g = Replayed::default();
    for s in statements {
        match s {
            Statement::CreateNode(n) => g.nodes.push((n.labels[0].clone(), n.props.clone())),
            Statement::MatchCreate { matched, from, rel, to } => {
                let mut bound: Vec<(&str, usize)> = Vec::new();
                for m in matched {
                    let hits: Vec<usize> = g
                        .nodes
                        .iter()
                        .enumerate()
                        .filter(|(_, (label, props))| {
                            m.labels.iter().all(|l| l == label)
                                && m.props.iter().all(|kv| props.contains(kv))
                        })
                        .map(|(i, _)| i)
                        .collect();
                    if hits.len() != 1 {
                        return Err(format!("pattern {m:?} matches {} nodes", hits.len()));
                    }
                    let var = m.var.as_deref().ok_or("matched node without a variable")?;
                    bound.push((var, hits[0]));
                }
                let lookup = |v: &str| {
                    bound.iter().find(|(b, _)| *b == v).map(|(_, i)| *i).ok_or(format!("unbound variable {v}"))
                };
                g.edges.push((lookup(from)?, rel.clone(), lookup(to)?));
            }
        }
    }
    Ok(g)
}

/// The replayed graph a faithful export of `graph` must produce.
pub fn expected(graph: &PropertyGraph) -> Replayed {
    let nodes = graph
        .nodes
        .iter()
        .map(|n| {
            let props = n.props.iter().map(|(k, v)| (k.clone(), Lit::expected(v))).collect();
            (n.label.as_str().to_string(), props)
        })
        .collect();
    let index = |key: &str| graph.nodes.iter().position(|n| n.key == key).expect("edge endpoint");
    let edges = graph.edges.iter().map(|e| (index(&e.source), e.etype.clone(), index(&e.target))).collect();
    Replayed { nodes, edges }
}
