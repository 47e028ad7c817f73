use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::eval::{localize, localize_count};
use super::{Body, Constraint, Family, Scope, StructuralKind};
use crate::store::{OcedEvent, OcedStore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("constraint `{constraint}` is scoped to undeclared object type `{otype}`")]
    UnknownObjectTypeInScope { constraint: String, otype: String },
}

/// Where a violation shows up. `positions` index into the scoped object's
/// trace; `events` are the matching event ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub positions: Vec<usize>,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub family: Family,
    /// Object id, or `store` for structural checks.
    pub scope: String,
    pub witness: Witness,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A store element breaking a structural check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offender {
    pub entity: &'static str,
    pub id: String,
    pub reason: String,
}

/// Elements of `store` that break `kind`. Checks that need a signature
/// pass vacuously on unbound stores.
pub fn structural_offenders(kind: StructuralKind, store: &OcedStore) -> Vec<Offender> {
    let mut out = Vec::new();
    let mut offend = |entity, id: &str, reason: String| {
        out.push(Offender { entity, id: id.to_string(), reason })
    };
    match kind {
        StructuralKind::ReferentialIntegrity => {
            for e in store.events() {
                for oid in e.observed.iter().filter(|o| store.object(o).is_none()) {
                    offend("event", &e.id, format!("observes missing object `{oid}`"));
                }
            }
            for r in store.relations() {
                for end in [&r.source, &r.target] {
                    if store.object(end).is_none() {
                        offend("relation", &r.seq.to_string(), format!("endpoint `{end}` missing"));
                    }
                }
            }
        }
        StructuralKind::MaxObserves => {
            if let Some(sig) = store.signature() {
                for e in store.events().iter().filter(|e| e.observed.len() > sig.max_observes()) {
                    offend(
                        "event",
                        &e.id,
                        format!("observes {} objects, cap is {}", e.observed.len(), sig.max_observes()),
                    );
                }
            }
        }
        StructuralKind::AttributeDomain => {
            if let Some(sig) = store.signature() {
                for o in store.objects() {
                    for (k, v) in &o.attrs {
                        if sig.check_attr(k, v).is_err() {
                            offend("object", &o.id, format!("attribute `{k}` = {v} outside its domain"));
                        }
                    }
                }
                for e in store.events() {
                    for (k, v) in &e.attrs {
                        if sig.check_attr(k, v).is_err() {
                            offend("event", &e.id, format!("attribute `{k}` = {v} outside its domain"));
                        }
                    }
                }
            }
        }
        StructuralKind::RelationTypeValidity => {
            if let Some(sig) = store.signature() {
                for r in store.relations() {
                    if !sig.relation_types().contains(&r.rtype) {
                        offend("relation", &r.seq.to_string(), format!("undeclared type `{}`", r.rtype));
                    } else if r.source == r.target && !sig.is_reflexive(&r.rtype) {
                        offend("relation", &r.seq.to_string(), format!("self-loop on `{}`", r.source));
                    }
                }
            }
        }
    }
    out
}

fn check_trace(c: &Constraint, oid: &str, trace: &[&OcedEvent]) -> Option<Violation> {
    if c.holds_on_trace(trace) {
        return None;
    }
    let positions = match &c.body {
        Body::Ltlf(f) => localize(f, trace, 0),
        Body::Count(cb) => localize_count(cb, trace),
        Body::Structural(_) => unreachable!("structural bodies are store-scoped"),
    };
    let events: Vec<String> = positions.iter().map(|&i| trace[i].id.clone()).collect();
    let message = match positions.as_slice() {
        [] => format!("`{}` fails on the empty trace of `{oid}`", c.name),
        [i] => format!("`{}` fails on `{oid}` at position {i} (event `{}`)", c.name, events[0]),
        _ if positions.len() == trace.len() => {
            format!("`{}` fails on `{oid}` over the whole trace", c.name)
        }
        [first, .., last] => {
            format!("`{}` fails on `{oid}` over positions {first}..={last}", c.name)
        }
    };
    Some(Violation {
        constraint: c.name.clone(),
        family: c.family,
        scope: oid.to_string(),
        witness: Witness { positions, events },
        message,
    })
}

fn check_structural(c: &Constraint, kind: StructuralKind, store: &OcedStore) -> Option<Violation> {
    let offenders = structural_offenders(kind, store);
    let first = offenders.first()?;
    let events = offenders.iter().filter(|o| o.entity == "event").map(|o| o.id.clone()).collect();
    let message = format!(
        "`{}` ({}) fails on {} element(s); first: {} `{}` {}",
        c.name,
        kind.keyword(),
        offenders.len(),
        first.entity,
        first.id,
        first.reason
    );
    Some(Violation {
        constraint: c.name.clone(),
        family: c.family,
        scope: "store".into(),
        witness: Witness { positions: Vec::new(), events },
        message,
    })
}

/// Judges every constraint: scoped bodies on each object trace of the
/// scoped type, structural bodies once. Violations are sorted by
/// (constraint name, scope), so the result does not depend on the order of
/// `constraints` or on scheduling.
pub fn check_store(store: &OcedStore, constraints: &[Constraint]) -> Result<ViolationReport, CheckError> {
    if let Some(sig) = store.signature() {
        for c in constraints {
            if let Scope::ObjectType(t) = &c.scope {
                if !sig.object_types().contains(t) {
                    return Err(CheckError::UnknownObjectTypeInScope {
                        constraint: c.name.clone(),
                        otype: t.clone(),
                    });
                }
            }
        }
    }

    let mut jobs: Vec<(&Constraint, Option<&str>)> = Vec::new();
    for c in constraints {
        match (&c.scope, &c.body) {
            (_, Body::Structural(_)) | (Scope::Store, _) => jobs.push((c, None)),
            (Scope::ObjectType(t), _) => jobs.extend(
                store.objects().iter().filter(|o| &o.otype == t).map(|o| (c, Some(o.id.as_str()))),
            ),
        }
    }

    let mut violations: Vec<Violation> = jobs
        .par_iter()
        .filter_map(|&(c, oid)| match (oid, &c.body) {
            (_, Body::Structural(kind)) => check_structural(c, *kind, store),
            (Some(oid), _) => {
                let trace = store.object_trace(oid).expect("object listed by the store");
                check_trace(c, oid, &trace)
            }
            (None, _) => {
                let trace: Vec<&OcedEvent> = store.events_in_order().collect();
                check_trace(c, "store", &trace)
            }
        })
        .collect();
    violations.sort_by(|a, b| (&a.constraint, &a.scope).cmp(&(&b.constraint, &b.scope)));

    let checked = jobs.len();
    let failed = violations.len();
    Ok(ViolationReport { violations, checked, passed: checked - failed, failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_constraints;
    use crate::value::Timestamp;

    fn incidents() -> OcedStore {
        let mut s = OcedStore::new();
        let a = s.add_object("incident", Default::default()).unwrap();
        let b = s.add_object("incident", Default::default()).unwrap();
        s.add_event("Open", Timestamp::Tick(0), Default::default(), &[&a, &b]).unwrap();
        s.add_event("Closed", Timestamp::Tick(1), Default::default(), &[&a]).unwrap();
        s
    }

    #[test]
    fn empty_store_has_no_violations() {
        let rules = parse_constraints(
            "liveness close_all on incident: F (etype = \"Closed\")\nstructural cap on store: max-observes",
        )
        .unwrap();
        let report = check_store(&OcedStore::new(), &rules).unwrap();
        assert!(report.is_clean());
        assert_eq!((report.checked, report.passed, report.failed), (1, 1, 0));
    }

    #[test]
    fn one_liveness_breach() {
        let rules = parse_constraints("liveness close_all on incident: F (etype = \"Closed\")").unwrap();
        let report = check_store(&incidents(), &rules).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.scope, "o2");
        assert_eq!(v.witness.positions, vec![0]);
        assert_eq!(v.witness.events, vec!["e1"]);
        assert_eq!((report.checked, report.failed), (2, 1));
    }

    #[test]
    fn order_insensitive() {
        let text = "safety a on incident: G etype = \"Open\"\nliveness b on incident: F etype = \"Closed\"\n";
        let mut rules = parse_constraints(text).unwrap();
        let forward = check_store(&incidents(), &rules).unwrap();
        rules.reverse();
        assert_eq!(check_store(&incidents(), &rules).unwrap(), forward);
        assert_eq!(forward.violations.iter().map(|v| &v.constraint[..]).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn undeclared_scope_on_bound_store() {
        use crate::signature::{Domain, Signature};
        use std::collections::BTreeMap;
        let sig = Signature::new(
            ["Open"],
            ["incident"],
            BTreeMap::from([("p".to_string(), Domain::Open)]),
            Vec::<&str>::new(),
            3,
            2,
        )
        .unwrap();
        let store = OcedStore::with_signature(sig);
        let rules = parse_constraints("liveness l on spaceship: F true").unwrap();
        assert!(matches!(
            check_store(&store, &rules),
            Err(CheckError::UnknownObjectTypeInScope { .. })
        ));
        assert!(check_store(&OcedStore::new(), &rules).unwrap().is_clean());
    }
}
