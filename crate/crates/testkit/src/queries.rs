//! Query answers computed straight from the store, without the graph.

use std::collections::{BTreeMap, BTreeSet};

use chrono::SecondsFormat;
use foced_core::{OcedStore, Timestamp, Value};

fn is_case(store: &OcedStore, oid: &str) -> bool {
    store.objects().iter().any(|o| o.id == oid && o.otype == "case")
}

/// `(case, event)` pairs ordered by case id then event insertion, and the
/// ids of events observing no case, in insertion order.
pub fn paths(store: &OcedStore) -> (Vec<(String, String)>, Vec<String>) {
    let mut rows = Vec::new();
    let mut loose = Vec::new();
    for (i, e) in store.events().iter().enumerate() {
        let cases: Vec<&String> = e.observed.iter().filter(|o| is_case(store, o)).collect();
        if cases.is_empty() {
            loose.push(e.id.clone());
        }
        for c in cases {
            rows.push((c.clone(), i, e.id.clone()));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    (rows.into_iter().map(|(c, _, e)| (c, e)).collect(), loose)
}

/// `(activity, frequency, sorted distinct lifecycles)` for stores whose
/// activities are event types and whose lifecycles are strings. Most
/// frequent first, ties by activity name.
pub fn activity_frequency(store: &OcedStore) -> Vec<(String, u64, Vec<String>)> {
    let mut groups: BTreeMap<String, (u64, BTreeSet<String>)> = BTreeMap::new();
    for e in store.events() {
        let g = groups.entry(e.etype.clone()).or_default();
        g.0 += 1;
        if let Some(Value::Str(l)) = e.attrs.get("lifecycle") {
            g.1.insert(l.clone());
        }
    }
    let mut out: Vec<(String, u64, Vec<String>)> =
        groups.into_iter().map(|(a, (n, l))| (a, n, l.into_iter().collect())).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

fn time_key(t: &Timestamp) -> (i64, u32) {
    match t {
        Timestamp::Tick(n) => (*n as i64, 0),
        Timestamp::Instant(t) => (t.timestamp(), t.timestamp_subsec_nanos()),
    }
}

/// Millisecond ISO-8601 rendering of an instant, or the tick number.
pub fn timestamp_text(t: &Timestamp) -> String {
    match t {
        Timestamp::Instant(t) => t.to_rfc3339_opts(SecondsFormat::Millis, true),
        Timestamp::Tick(n) => n.to_string(),
    }
}

/// `(case, activity, lifecycle, timestamp)` per case-event pair, ordered
/// by case id, then event time, then insertion.
pub fn event_sequence(store: &OcedStore) -> Vec<(String, String, Option<String>, String)> {
    let mut rows = Vec::new();
    for (i, e) in store.events().iter().enumerate() {
        for c in e.observed.iter().filter(|o| is_case(store, o)) {
            let lifecycle = match e.attrs.get("lifecycle") {
                Some(Value::Str(s)) => Some(s.clone()),
                Some(other) => panic!("non-string lifecycle {other:?}"),
                None => None,
            };
            rows.push((c.clone(), time_key(&e.time), i, e.etype.clone(), lifecycle, e.time));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    rows.into_iter().map(|(c, _, _, a, l, t)| (c, a, l, timestamp_text(&t))).collect()
}
