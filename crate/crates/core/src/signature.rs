//! Finite sorts and bounds that a store can be bound to.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Error, PartialEq)]
pub enum SignatureError {
    #[error("signature declares no {0}")]
    EmptySort(&'static str),
    #[error("max_observes must be at least 1")]
    ZeroMaxObserves,
    #[error("attribute `{0}` has an empty value domain")]
    EmptyDomain(String),
    #[error("reflexive relation `{0}` is not a declared relation type")]
    UnknownReflexive(String),
    #[error("invalid signature file: {0}")]
    Format(String),
}

/// The value domain of one attribute name.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Any literal is accepted (schemas taken from ingested logs).
    Open,
    Finite(Vec<Value>),
}

impl Domain {
    pub fn admits(&self, value: &Value) -> bool {
        match self {
            Domain::Open => true,
            Domain::Finite(values) => values.contains(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    event_types: BTreeSet<String>,
    object_types: BTreeSet<String>,
    attributes: BTreeMap<String, Domain>,
    relation_types: BTreeSet<String>,
    reflexive_relations: BTreeSet<String>,
    max_time: u64,
    max_observes: usize,
}

impl Signature {
    pub fn new<E, O, S>(
        event_types: E,
        object_types: O,
        attributes: BTreeMap<String, Domain>,
        relation_types: impl IntoIterator<Item = S>,
        max_time: u64,
        max_observes: usize,
    ) -> Result<Self, SignatureError>
    where
        E: IntoIterator<Item = S>,
        O: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sig = Signature {
            event_types: event_types.into_iter().map(Into::into).collect(),
            object_types: object_types.into_iter().map(Into::into).collect(),
            attributes,
            relation_types: relation_types.into_iter().map(Into::into).collect(),
            reflexive_relations: BTreeSet::new(),
            max_time,
            max_observes,
        };
        sig.validate()?;
        Ok(sig)
    }

    /// Declares relation types that may link an object to itself.
    pub fn with_reflexive<S: Into<String>>(
        mut self,
        rtypes: impl IntoIterator<Item = S>,
    ) -> Result<Self, SignatureError> {
        self.reflexive_relations.extend(rtypes.into_iter().map(Into::into));
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), SignatureError> {
        if self.event_types.is_empty() {
            return Err(SignatureError::EmptySort("event types"));
        }
        if self.object_types.is_empty() {
            return Err(SignatureError::EmptySort("object types"));
        }
        if self.attributes.is_empty() {
            return Err(SignatureError::EmptySort("attribute names"));
        }
        if self.max_observes == 0 {
            return Err(SignatureError::ZeroMaxObserves);
        }
        for (name, domain) in &self.attributes {
            if matches!(domain, Domain::Finite(v) if v.is_empty()) {
                return Err(SignatureError::EmptyDomain(name.clone()));
            }
        }
        if let Some(r) = self.reflexive_relations.difference(&self.relation_types).next() {
            return Err(SignatureError::UnknownReflexive(r.clone()));
        }
        Ok(())
    }

    pub fn event_types(&self) -> &BTreeSet<String> {
        &self.event_types
    }

    pub fn object_types(&self) -> &BTreeSet<String> {
        &self.object_types
    }

    pub fn attributes(&self) -> &BTreeMap<String, Domain> {
        &self.attributes
    }

    pub fn relation_types(&self) -> &BTreeSet<String> {
        &self.relation_types
    }

    pub fn is_reflexive(&self, rtype: &str) -> bool {
        self.reflexive_relations.contains(rtype)
    }

    pub fn max_time(&self) -> u64 {
        self.max_time
    }

    pub fn max_observes(&self) -> usize {
        self.max_observes
    }

    /// Checks one attribute against the declared names and domains; `Err`
    /// carries the offending attribute name.
    pub fn check_attr(&self, name: &str, value: &Value) -> Result<(), String> {
        match self.attributes.get(name) {
            Some(domain) if domain.admits(value) => Ok(()),
            _ => Err(name.to_string()),
        }
    }

    /// Reads the TOML signature file format.
    pub fn from_toml(text: &str) -> Result<Self, SignatureError> {
        let raw: SignatureFile =
            toml::from_str(text).map_err(|e| SignatureError::Format(e.to_string()))?;
        let mut attributes = BTreeMap::new();
        for (name, domain) in raw.attributes {
            let domain = match domain {
                RawDomain::Open(s) if s == "open" => Domain::Open,
                RawDomain::Open(s) => {
                    return Err(SignatureError::Format(format!(
                        "attribute `{name}`: expected a value list or \"open\", got \"{s}\""
                    )))
                }
                RawDomain::Values(values) => {
                    Domain::Finite(values.into_iter().map(RawLiteral::into_value).collect())
                }
            };
            attributes.insert(name, domain);
        }
        Signature::new(
            raw.event_types,
            raw.object_types,
            attributes,
            raw.relation_types,
            raw.max_time,
            raw.max_observes,
        )?
        .with_reflexive(raw.reflexive_relations)
    }

    pub fn to_toml(&self) -> String {
        let raw = SignatureFile {
            event_types: self.event_types.iter().cloned().collect(),
            object_types: self.object_types.iter().cloned().collect(),
            relation_types: self.relation_types.iter().cloned().collect(),
            reflexive_relations: self.reflexive_relations.iter().cloned().collect(),
            max_time: self.max_time,
            max_observes: self.max_observes,
            attributes: self
                .attributes
                .iter()
                .map(|(k, d)| {
                    let raw = match d {
                        Domain::Open => RawDomain::Open("open".into()),
                        Domain::Finite(vs) => {
                            RawDomain::Values(vs.iter().filter_map(RawLiteral::from_value).collect())
                        }
                    };
                    (k.clone(), raw)
                })
                .collect(),
        };
        toml::to_string(&raw).expect("signature serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureFile {
    event_types: Vec<String>,
    object_types: Vec<String>,
    #[serde(default)]
    relation_types: Vec<String>,
    #[serde(default)]
    reflexive_relations: Vec<String>,
    max_time: u64,
    max_observes: usize,
    attributes: BTreeMap<String, RawDomain>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawDomain {
    Open(String),
    Values(Vec<RawLiteral>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawLiteral {
    Bool(bool),
    Int(i64),
    Dec(f64),
    Str(String),
}

impl RawLiteral {
    fn into_value(self) -> Value {
        match self {
            RawLiteral::Bool(b) => Value::Bool(b),
            RawLiteral::Int(i) => Value::Int(i),
            RawLiteral::Dec(d) => Value::Dec(d),
            RawLiteral::Str(s) => Value::Str(s),
        }
    }

    fn from_value(v: &Value) -> Option<Self> {
        Some(match v {
            Value::Bool(b) => RawLiteral::Bool(*b),
            Value::Int(i) => RawLiteral::Int(*i),
            Value::Dec(d) => RawLiteral::Dec(*d),
            Value::Str(s) => RawLiteral::Str(s.clone()),
            Value::Instant(_) => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn priority() -> BTreeMap<String, Domain> {
        BTreeMap::from([(
            "priority".to_string(),
            Domain::Finite(vec!["low".into(), "medium".into(), "high".into()]),
        )])
    }

    #[test]
    fn rejects_empty_sorts_and_zero_cap() {
        let none: [&str; 0] = [];
        assert_eq!(
            Signature::new(none, ["incident"], priority(), none, 5, 3),
            Err(SignatureError::EmptySort("event types"))
        );
        assert_eq!(
            Signature::new(["create"], ["incident"], priority(), none, 5, 0),
            Err(SignatureError::ZeroMaxObserves)
        );
        let empty = BTreeMap::from([("p".to_string(), Domain::Finite(vec![]))]);
        assert_eq!(
            Signature::new(["create"], ["incident"], empty, none, 5, 1),
            Err(SignatureError::EmptyDomain("p".into()))
        );
    }

    #[test]
    fn relation_types_may_be_empty() {
        let none: [&str; 0] = [];
        assert!(Signature::new(["create"], ["incident"], priority(), none, 0, 1).is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
event_types = ["create", "close"]
object_types = ["incident"]
relation_types = ["belongs_to"]
max_time = 3
max_observes = 2

[attributes]
priority = ["low", "high"]
note = "open"
weight = [1, 2.5, true]
"#;
        let sig = Signature::from_toml(text).unwrap();
        assert_eq!(sig.max_observes(), 2);
        assert_eq!(sig.attributes()["note"], Domain::Open);
        assert_eq!(
            sig.attributes()["weight"],
            Domain::Finite(vec![Value::Int(1), Value::Dec(2.5), Value::Bool(true)])
        );
        assert_eq!(Signature::from_toml(&sig.to_toml()).unwrap(), sig);
    }

    #[test]
    fn bad_open_marker() {
        let text = r#"
event_types = ["a"]
object_types = ["b"]
max_time = 1
max_observes = 1
[attributes]
x = "closed"
"#;
        assert!(matches!(Signature::from_toml(text), Err(SignatureError::Format(_))));
    }
}
