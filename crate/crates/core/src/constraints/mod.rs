//! Declarative constraints over per-object traces and whole stores.
//!
//! A [`Constraint`] pairs a family label (metadata only) with a scope and a
//! body. Scoped bodies are judged on the trace of every object of the scoped
//! type at position 0; structural bodies are judged once per store.

mod check;
mod eval;
mod formula;
mod pack;
mod parser;

use std::fmt;

use serde::Serialize;

pub use check::{check_store, structural_offenders, Offender, CheckError, Violation, ViolationReport, Witness};
pub use eval::{eval_count_bound, eval_ltlf, ltlf_table, localize};
pub use formula::{Atom, CmpOp, Field, Formula};
pub use pack::{bpic13_pack_with, builtin_bpic13_pack, ConsistencyTable};
pub use parser::{parse_constraints, parse_formula, ParseError};

use crate::store::OcedEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Safety,
    Cardinality,
    Liveness,
    Fairness,
    Consistency,
    Structural,
}

impl Family {
    pub fn keyword(self) -> &'static str {
        match self {
            Family::Safety => "safety",
            Family::Cardinality => "cardinality",
            Family::Liveness => "liveness",
            Family::Fairness => "fairness",
            Family::Consistency => "consistency",
            Family::Structural => "structural",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scope {
    ObjectType(String),
    Store,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// Counts events satisfying `counted` strictly before the first event
/// satisfying `delimiter` (or over the whole trace), then compares.
#[derive(Debug, Clone, PartialEq)]
pub struct CountBound {
    pub counted: Formula,
    pub delimiter: Option<Formula>,
    pub bound: u64,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructuralKind {
    MaxObserves,
    ReferentialIntegrity,
    AttributeDomain,
    RelationTypeValidity,
}

impl StructuralKind {
    pub const ALL: [StructuralKind; 4] = [
        StructuralKind::MaxObserves,
        StructuralKind::ReferentialIntegrity,
        StructuralKind::AttributeDomain,
        StructuralKind::RelationTypeValidity,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            StructuralKind::MaxObserves => "max-observes",
            StructuralKind::ReferentialIntegrity => "referential-integrity",
            StructuralKind::AttributeDomain => "attribute-domain",
            StructuralKind::RelationTypeValidity => "relation-type-validity",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Ltlf(Formula),
    Count(CountBound),
    Structural(StructuralKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub scope: Scope,
    pub body: Body,
}

impl Constraint {
    /// Judges a scoped body on one trace at position 0. Structural bodies
    /// are not trace properties and always hold here.
    pub fn holds_on_trace(&self, trace: &[&OcedEvent]) -> bool {
        match &self.body {
            Body::Ltlf(f) => eval_ltlf(f, trace, 0),
            Body::Count(cb) => eval_count_bound(cb, trace),
            Body::Structural(_) => true,
        }
    }

    /// Attribute names the body reads.
    pub fn mentioned_attrs(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut visit = |a: &Atom| {
            if let Some(name) = a.attr_name() {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
        };
        match &self.body {
            Body::Ltlf(f) => f.for_each_atom(&mut visit),
            Body::Count(cb) => {
                cb.counted.for_each_atom(&mut visit);
                if let Some(d) = &cb.delimiter {
                    d.for_each_atom(&mut visit);
                }
            }
            Body::Structural(_) => {}
        }
        out
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn render_name(s: &str) -> String {
    if is_plain_ident(s) {
        s.to_string()
    } else {
        formula::quote(s)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Store => f.write_str("store"),
            Scope::ObjectType(t) if t == "store" => f.write_str(&formula::quote(t)),
            Scope::ObjectType(t) => f.write_str(&render_name(t)),
        }
    }
}

impl fmt::Display for CountBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "count({}", self.counted)?;
        if let Some(d) = &self.delimiter {
            write!(f, " before {d}")?;
        }
        let op = match self.sense {
            Sense::AtMost => "<=",
            Sense::AtLeast => ">=",
        };
        write!(f, ") {op} {}", self.bound)
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Ltlf(g) => write!(f, "{g}"),
            Body::Count(cb) => write!(f, "{cb}"),
            Body::Structural(k) => f.write_str(k.keyword()),
        }
    }
}

/// One rule line in the constraint-file syntax.
impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} on {}: {}",
            self.family.keyword(),
            render_name(&self.name),
            self.scope,
            self.body
        )
    }
}

/// Renders a constraint list as a parseable file.
pub fn render_constraints(constraints: &[Constraint]) -> String {
    constraints.iter().map(|c| format!("{c}\n")).collect()
}
