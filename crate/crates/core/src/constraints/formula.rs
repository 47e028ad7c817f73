use std::fmt;

use crate::store::OcedEvent;
use crate::value::{format_decimal, format_instant, Value};

/// What an atom inspects on an event.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    EventType,
    Attr(String),
    /// Number of objects the event observes.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// An event predicate. Comparisons against an attribute the event does not
/// carry are false, whatever the operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Compare { field: Field, op: CmpOp, value: Value },
    Present(String),
}

impl Atom {
    pub fn holds(&self, event: &OcedEvent) -> bool {
        match self {
            Atom::Present(name) => event.attr(name).is_some(),
            Atom::Compare { field, op, value } => {
                let actual = match field {
                    Field::EventType => Value::Str(event.etype.clone()),
                    Field::Observed => Value::Int(event.observed.len() as i64),
                    Field::Attr(name) => match event.attr(name) {
                        Some(v) => v.into_owned(),
                        None => return false,
                    },
                };
                let ord = actual.compare(value);
                match op {
                    CmpOp::Eq => ord == Some(std::cmp::Ordering::Equal),
                    CmpOp::Ne => ord != Some(std::cmp::Ordering::Equal),
                    _ if !(actual.is_ordered() && value.is_ordered()) => false,
                    CmpOp::Lt => ord.is_some_and(|o| o.is_lt()),
                    CmpOp::Le => ord.is_some_and(|o| o.is_le()),
                    CmpOp::Gt => ord.is_some_and(|o| o.is_gt()),
                    CmpOp::Ge => ord.is_some_and(|o| o.is_ge()),
                }
            }
        }
    }

    /// Attribute names this atom reads.
    pub fn attr_name(&self) -> Option<&str> {
        match self {
            Atom::Present(name) | Atom::Compare { field: Field::Attr(name), .. } => Some(name),
            _ => None,
        }
    }
}

/// Finite-trace temporal formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Strong next: false at the last position.
    Next(Box<Formula>),
    /// Weak next: true at the last position.
    WeakNext(Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    pub fn etype_is(name: &str) -> Self {
        Formula::Atom(Atom::Compare {
            field: Field::EventType,
            op: CmpOp::Eq,
            value: Value::Str(name.to_string()),
        })
    }

    pub fn attr(name: &str, op: CmpOp, value: impl Into<Value>) -> Self {
        Formula::Atom(Atom::Compare { field: Field::Attr(name.to_string()), op, value: value.into() })
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn weak_next(f: Formula) -> Self {
        Formula::WeakNext(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn is_temporal(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => false,
            Formula::Not(f) => f.is_temporal(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.is_temporal() || b.is_temporal()
            }
            _ => true,
        }
    }

    /// Evaluates a formula without temporal operators on a single event.
    pub fn holds_on(&self, event: &OcedEvent) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(event),
            Formula::Not(f) => !f.holds_on(event),
            Formula::And(a, b) => a.holds_on(event) && b.holds_on(event),
            Formula::Or(a, b) => a.holds_on(event) || b.holds_on(event),
            Formula::Implies(a, b) => !a.holds_on(event) || b.holds_on(event),
            _ => panic!("temporal operator in a state formula"),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::WeakNext(f)
            | Formula::Eventually(f)
            | Formula::Globally(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn for_each_atom<'a>(&'a self, visit: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => visit(a),
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::WeakNext(f)
            | Formula::Eventually(f)
            | Formula::Globally(f) => f.for_each_atom(visit),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                a.for_each_atom(visit);
                b.for_each_atom(visit);
            }
        }
    }

    fn is_compound(&self) -> bool {
        matches!(
            self,
            Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Until(..)
        )
    }
}

pub(crate) fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn render_literal(value: &Value) -> String {
    match value {
        Value::Str(s) => quote(s),
        Value::Int(i) => i.to_string(),
        Value::Dec(d) => format_decimal(*d),
        Value::Bool(b) => b.to_string(),
        Value::Instant(t) => format!("instant({})", quote(&format_instant(t))),
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Present(name) => write!(f, "has({})", quote(name)),
            Atom::Compare { field, op, value } => {
                match field {
                    Field::EventType => f.write_str("etype")?,
                    Field::Observed => f.write_str("observed")?,
                    Field::Attr(name) => write!(f, "attr({})", quote(name))?,
                }
                write!(f, " {} {}", op.symbol(), render_literal(value))
            }
        }
    }
}

struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_compound() {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Renders in the constraint-file syntax; compound operands are always
/// parenthesised, so the output parses back to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "!{}", Operand(g)),
            Formula::Next(g) => write!(f, "X {}", Operand(g)),
            Formula::WeakNext(g) => write!(f, "WX {}", Operand(g)),
            Formula::Eventually(g) => write!(f, "F {}", Operand(g)),
            Formula::Globally(g) => write!(f, "G {}", Operand(g)),
            Formula::And(a, b) => write!(f, "{} & {}", Operand(a), Operand(b)),
            Formula::Or(a, b) => write!(f, "{} | {}", Operand(a), Operand(b)),
            Formula::Implies(a, b) => write!(f, "{} -> {}", Operand(a), Operand(b)),
            Formula::Until(a, b) => write!(f, "{} U {}", Operand(a), Operand(b)),
        }
    }
}
