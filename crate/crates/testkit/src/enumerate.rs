//! Exhaustive enumeration of small stores over a signature, with no
//! symmetry breaking and no ordering restrictions. Slow by intent; used to
//! cross-check the bounded search on tiny signatures.

use foced_core::constraints::{check_store, Constraint};
use foced_core::{Attrs, Domain, OcedStore, Signature, Timestamp, Value};

#[derive(Debug, Clone)]
struct EventChoice {
    tick: u64,
    etype: String,
    mask: u32,
    attrs: Attrs,
}

fn attr_assignments(sig: &Signature) -> Vec<Attrs> {
    let mut out = vec![Attrs::new()];
    for (name, domain) in sig.attributes() {
        let Domain::Finite(values) = domain else { continue };
        out = out
            .into_iter()
            .flat_map(|a| {
                values.iter().map(move |v: &Value| {
                    let mut a = a.clone();
                    a.insert(name.clone(), v.clone());
                    a
                })
            })
            .collect();
    }
    out
}

fn sequences<T: Clone>(items: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut grown = Vec::new();
        for s in &frontier {
            for it in items {
                let mut v = s.clone();
                v.push(it.clone());
                grown.push(v);
            }
        }
        out.extend(grown.iter().cloned());
        frontier = grown;
    }
    out
}

/// Visits every store with at most `max_objects` attribute-free objects and
/// at most `max_events` events (any ticks in the horizon, any event type,
/// any subset of objects observed regardless of the cap, every combination
/// of finite attribute values), bound to `sig`. Stops at the first store
/// for which `visit` returns true and reports whether that happened.
pub fn any_store(
    sig: &Signature,
    max_objects: usize,
    max_events: usize,
    mut visit: impl FnMut(&OcedStore) -> bool,
) -> bool {
    let otypes: Vec<String> = sig.object_types().iter().cloned().collect();
    let assignments = attr_assignments(sig);
    for objects in sequences(&otypes, max_objects) {
        let mut choices = Vec::new();
        for tick in 0..=sig.max_time() {
            for etype in sig.event_types() {
                for mask in 0..(1u32 << objects.len()) {
                    for attrs in &assignments {
                        choices.push(EventChoice { tick, etype: etype.clone(), mask, attrs: attrs.clone() });
                    }
                }
            }
        }
        for events in sequences(&choices, max_events) {
            let mut store = OcedStore::new();
            let ids: Vec<String> = objects.iter().map(|t| store.add_object(t, Attrs::new()).unwrap()).collect();
            for ev in &events {
                let linked: Vec<&str> =
                    (0..ids.len()).filter(|i| ev.mask & (1 << i) != 0).map(|i| ids[i].as_str()).collect();
                store.add_event(&ev.etype, Timestamp::Tick(ev.tick), ev.attrs.clone(), &linked).unwrap();
            }
            store.bind_signature(sig.clone());
            if visit(&store) {
                return true;
            }
        }
    }
    false
}

/// Whether some store in the bounded universe satisfies every fact.
pub fn instance_exists(sig: &Signature, facts: &[Constraint], max_objects: usize, max_events: usize) -> bool {
    any_store(sig, max_objects, max_events, |s| check_store(s, facts).map(|r| r.is_clean()).unwrap_or(false))
}

/// Whether some store in the bounded universe satisfies every fact and
/// violates `assertion`.
pub fn counterexample_exists(
    sig: &Signature,
    facts: &[Constraint],
    assertion: &Constraint,
    max_objects: usize,
    max_events: usize,
) -> bool {
    any_store(sig, max_objects, max_events, |s| {
        check_store(s, facts).map(|r| r.is_clean()).unwrap_or(false)
            && check_store(s, std::slice::from_ref(assertion)).map(|r| !r.is_clean()).unwrap_or(false)
    })
}
