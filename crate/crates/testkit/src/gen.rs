//! Random store generators. Stores are built in the layout the parsers
//! produce, so a faithful emit/parse cycle must reproduce them exactly.

use std::collections::BTreeMap;

use chrono::{DateTime, TimeZone, Utc};
use foced_core::{Attrs, Domain, OcedStore, Signature, Timestamp, Value};
use rand::seq::SliceRandom;
use rand::Rng;

/// Fragments that stress escaping in XML, JSON, Cypher and CSV.
const AWKWARD: &[&str] = &[
    "a", "b", "plain", "with space", "quote'single", "quote\"double", "back\\slash", "comma,sep",
    "semi;colon", "<tag>", "amp&er", "new\nline", "tab\tbed", "cr\rret", "ünïcödé", "日本", "`tick`",
    "{brace}", "", "-", "0", "null",
];

const ACTIVITIES: &[&str] =
    &["Accepted", "Queued", "Completed", "Escalate", "Status Change", "Operator Update", "a'b", "x,y"];
const LIFECYCLES: &[&str] = &["In Progress", "Resolved", "Closed", "Wait", "Awaiting Assignment"];
const EVENT_KEYS: &[&str] = &["org:resource", "cost", "weird key", "note", "flag", "seen at", "über"];
const OBJECT_KEYS: &[&str] = &["priority", "impact", "size", "label", "owner", "when"];

pub fn awkward_string<R: Rng>(rng: &mut R) -> String {
    let parts = rng.gen_range(1..=3);
    (0..parts).map(|_| *AWKWARD.choose(rng).unwrap()).collect::<Vec<_>>().join("")
}

pub fn instant<R: Rng>(rng: &mut R) -> DateTime<Utc> {
    let secs = rng.gen_range(0..4_102_444_800i64);
    let nanos = match rng.gen_range(0..3) {
        0 => 0,
        1 => rng.gen_range(0..1000) * 1_000_000,
        _ => rng.gen_range(0..1_000_000_000),
    };
    Utc.timestamp_opt(secs, nanos).unwrap()
}

/// A value of any kind. Decimals are finite; with `instants` false no
/// instant is produced.
pub fn value<R: Rng>(rng: &mut R, instants: bool) -> Value {
    match rng.gen_range(0..if instants { 5 } else { 4 }) {
        0 => Value::Str(awkward_string(rng)),
        1 => Value::Int(match rng.gen_range(0..3) {
            0 => rng.gen_range(-5..5),
            1 => i64::MIN,
            _ => rng.gen(),
        }),
        2 => Value::Dec(match rng.gen_range(0..3) {
            0 => rng.gen_range(-4..4) as f64,
            1 => rng.gen_range(-1e6..1e6),
            _ => rng.gen::<f64>() * 1e-9,
        }),
        3 => Value::Bool(rng.gen()),
        _ => Value::Instant(instant(rng)),
    }
}

fn attrs<R: Rng>(rng: &mut R, keys: &[&str], max: usize, instants: bool) -> Attrs {
    let n = rng.gen_range(0..=max);
    keys.choose_multiple(rng, n).map(|k| (k.to_string(), value(rng, instants))).collect()
}

fn unique(base: String, taken: &mut Vec<String>) -> String {
    let mut id = base.clone();
    let mut n = 1;
    while taken.contains(&id) {
        n += 1;
        id = format!("{base}#{n}");
    }
    taken.push(id.clone());
    id
}

/// Instants drawn from a small pool so ties are common.
fn clustered_instant<R: Rng>(rng: &mut R, pool: &[DateTime<Utc>]) -> DateTime<Utc> {
    if rng.gen_bool(0.6) {
        *pool.choose(rng).unwrap()
    } else {
        instant(rng)
    }
}

/// A store XES can represent: `case` objects, each followed by its events,
/// every event observing its case, instant times, no relations. Lifecycle
/// values are strings because XES stores them as `lifecycle:transition`.
pub fn xes_store<R: Rng>(rng: &mut R, max_cases: usize, max_events: usize) -> OcedStore {
    let mut store = OcedStore::new();
    let cases = rng.gen_range(0..=max_cases);
    let pool: Vec<DateTime<Utc>> = (0..4).map(|_| instant(rng)).collect();
    let mut ids = Vec::new();
    let mut event_ids = Vec::new();
    let mut budget = max_events;
    for _ in 0..cases {
        let id = unique(awkward_string(rng), &mut ids);
        store.insert_object(&id, "case", attrs(rng, OBJECT_KEYS, 3, true)).unwrap();
        let n = rng.gen_range(0..=budget.min(8));
        budget -= n;
        for _ in 0..n {
            let eid = unique(format!("ev-{}", awkward_string(rng)), &mut event_ids);
            let mut a = attrs(rng, EVENT_KEYS, 3, true);
            if rng.gen_bool(0.7) {
                a.insert("lifecycle".into(), Value::from(*LIFECYCLES.choose(rng).unwrap()));
            }
            let etype = ACTIVITIES.choose(rng).unwrap();
            let time = Timestamp::Instant(clustered_instant(rng, &pool));
            store.insert_event(&eid, etype, time, a, &[id.as_str()]).unwrap();
        }
    }
    store
}

/// A general store in OCEL layout: objects, then events, then relations.
/// Times are ticks or instants. Attribute values are never instants, since
/// OCEL attribute maps have no date type. When `bind` is set the store
/// carries the signature an OCEL reader derives from its global log.
pub fn ocel_store<R: Rng>(rng: &mut R, max_objects: usize, max_events: usize, bind: bool) -> OcedStore {
    let otypes = ["case", "resource", "order", "item line"];
    let mut store = OcedStore::new();
    let ticks = !bind && rng.gen_bool(0.5);
    let mut ids = Vec::new();
    let n_obj = rng.gen_range(0..=max_objects);
    for _ in 0..n_obj {
        let id = unique(awkward_string(rng), &mut ids);
        let otype = otypes.choose(rng).unwrap();
        store.insert_object(&id, otype, attrs(rng, OBJECT_KEYS, 3, false)).unwrap();
    }
    let pool: Vec<DateTime<Utc>> = (0..4).map(|_| instant(rng)).collect();
    let mut event_ids = Vec::new();
    for _ in 0..rng.gen_range(0..=max_events) {
        let eid = unique(awkward_string(rng), &mut event_ids);
        let k = rng.gen_range(0..=ids.len().min(3));
        let linked: Vec<&str> = ids.choose_multiple(rng, k).map(String::as_str).collect();
        let time = if ticks {
            Timestamp::Tick(rng.gen_range(0..6))
        } else {
            Timestamp::Instant(clustered_instant(rng, &pool))
        };
        let mut a = attrs(rng, EVENT_KEYS, 3, false);
        if rng.gen_bool(0.5) {
            a.insert("lifecycle".into(), Value::from(*LIFECYCLES.choose(rng).unwrap()));
        }
        store.insert_event(&eid, ACTIVITIES.choose(rng).unwrap(), time, a, &linked).unwrap();
    }
    if ids.len() >= 2 {
        for _ in 0..rng.gen_range(0..=4) {
            let pair: Vec<&String> = ids.choose_multiple(rng, 2).collect();
            let rtype = ["assigned_to", "contains", "part-of"].choose(rng).unwrap();
            store.add_relation(rtype, pair[0], pair[1]).unwrap();
        }
    }
    if bind && !store.events().is_empty() {
        let mut names: Vec<String> = EVENT_KEYS.iter().chain(OBJECT_KEYS).map(|s| s.to_string()).collect();
        names.push("lifecycle".into());
        let attributes: BTreeMap<String, Domain> = names.into_iter().map(|n| (n, Domain::Open)).collect();
        let etypes: Vec<String> = store.events().iter().map(|e| e.etype.clone()).collect();
        let rtypes: Vec<String> = store.relations().iter().map(|r| r.rtype.clone()).collect();
        let widest = store.events().iter().map(|e| e.observed.len()).max().unwrap_or(0).max(1);
        let sig = Signature::new(etypes, otypes.iter().map(|s| s.to_string()), attributes, rtypes, 0, widest)
            .unwrap();
        assert!(store.bind_signature(sig).is_empty());
    }
    store
}

/// A store shaped for the graph queries: some cases, some other objects,
/// events observing zero, one or several of them, instant times.
pub fn query_store<R: Rng>(rng: &mut R, max_cases: usize, max_events: usize) -> OcedStore {
    let mut store = OcedStore::new();
    let mut ids = Vec::new();
    let mut cases = Vec::new();
    let mut others = Vec::new();
    for _ in 0..rng.gen_range(0..=max_cases) {
        let id = unique(awkward_string(rng), &mut ids);
        store.insert_object(&id, "case", attrs(rng, OBJECT_KEYS, 2, true)).unwrap();
        cases.push(id);
    }
    for _ in 0..rng.gen_range(0..=3) {
        let id = unique(awkward_string(rng), &mut ids);
        store.insert_object(&id, "resource", Attrs::new()).unwrap();
        others.push(id);
    }
    let pool: Vec<DateTime<Utc>> = (0..5).map(|_| instant(rng)).collect();
    let mut event_ids = Vec::new();
    for _ in 0..rng.gen_range(0..=max_events) {
        let eid = unique(awkward_string(rng), &mut event_ids);
        let mut linked: Vec<&str> = Vec::new();
        let k = if cases.is_empty() { 0 } else { [0, 1, 1, 1, 1, 2].choose(rng).copied().unwrap() };
        linked.extend(cases.choose_multiple(rng, k.min(cases.len())).map(String::as_str));
        if !others.is_empty() && rng.gen_bool(0.3) {
            linked.push(others.choose(rng).unwrap());
        }
        let mut a = attrs(rng, EVENT_KEYS, 2, true);
        if rng.gen_bool(0.7) {
            a.insert("lifecycle".into(), Value::from(*LIFECYCLES.choose(rng).unwrap()));
        }
        let time = Timestamp::Instant(clustered_instant(rng, &pool));
        store.insert_event(&eid, ACTIVITIES.choose(rng).unwrap(), time, a, &linked).unwrap();
    }
    store
}

/// Random tick-timed store over fixed small vocabularies, for checker tests.
pub fn tick_store<R: Rng>(rng: &mut R, max_objects: usize, max_events: usize) -> OcedStore {
    let mut store = OcedStore::new();
    let n_obj = rng.gen_range(1..=max_objects.max(1));
    let ids: Vec<String> = (0..n_obj)
        .map(|_| store.add_object(["case", "resource"].choose(rng).unwrap(), Attrs::new()).unwrap())
        .collect();
    for _ in 0..rng.gen_range(0..=max_events) {
        let k = rng.gen_range(0..=ids.len().min(2));
        let linked: Vec<&str> = ids.choose_multiple(rng, k).map(String::as_str).collect();
        let mut a = Attrs::new();
        if rng.gen_bool(0.6) {
            a.insert("level".into(), Value::Int(rng.gen_range(0..4)));
        }
        if rng.gen_bool(0.6) {
            a.insert("lifecycle".into(), Value::from(["Open", "Closed"].choose(rng).copied().unwrap()));
        }
        let time = Timestamp::Tick(rng.gen_range(0..5));
        store.add_event(["a", "b", "c"].choose(rng).unwrap(), time, a, &linked).unwrap();
    }
    store
}
