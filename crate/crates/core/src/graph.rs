//! Property-graph projection of a store, Cypher and CSV export, and three
//! in-process analysis queries.
//!
//! Objects of type `case` become `Case` nodes linked to their events by
//! `HAS_EVENT`; all other objects become `Object` nodes that events point to
//! with `INVOLVES`. Object relations become edges named after the relation
//! type in upper case.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};

use crate::ingest::CASE_TYPE;
use crate::store::{OcedStore, ACTIVITY_ATTR, LIFECYCLE_ATTR, TIMESTAMP_ATTR};
use crate::value::{format_decimal, format_instant_millis, Timestamp, Value};

pub const HAS_EVENT: &str = "HAS_EVENT";
pub const INVOLVES: &str = "INVOLVES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Case,
    Event,
    Object,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Case => "Case",
            Label::Event => "Event",
            Label::Object => "Object",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Unique across the graph: object ids and event ids live in separate
    /// namespaces in the store, so keys carry an `o:` or `e:` prefix.
    pub key: String,
    pub label: Label,
    /// Ordered properties; `id` always comes first.
    pub props: Vec<(String, Value)>,
    pub seq: u64,
}

impl Node {
    pub fn prop(&self, name: &str) -> Option<&Value> {
        self.props.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn id(&self) -> &str {
        self.prop("id").and_then(Value::as_str).expect("every node has a string id")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: String,
    pub etype: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl PropertyGraph {
    pub fn node(&self, key: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.key == key)
    }
}

fn object_key(id: &str) -> String {
    format!("o:{id}")
}

fn event_key(id: &str) -> String {
    format!("e:{id}")
}

/// Property value of an event time: ISO-8601 UTC with milliseconds for
/// instants, the tick number for logical time.
pub fn timestamp_property(t: &Timestamp) -> Value {
    match t {
        Timestamp::Instant(i) => Value::Str(format_instant_millis(i)),
        Timestamp::Tick(n) => Value::Int(*n as i64),
    }
}

pub fn project(store: &OcedStore) -> PropertyGraph {
    // (seq, node) and (seq, edge) pairs, merged by seq at the end.
    let mut nodes: Vec<Node> = Vec::with_capacity(store.objects().len() + store.events().len());
    let mut edges: Vec<(u64, Edge)> = Vec::new();

    for o in store.objects() {
        let label = if o.otype == CASE_TYPE { Label::Case } else { Label::Object };
        let mut props = vec![("id".to_string(), Value::Str(o.id.clone()))];
        if label == Label::Object {
            props.push(("type".to_string(), Value::Str(o.otype.clone())));
        }
        props.extend(o.attrs.iter().filter(|(k, _)| !matches!(k.as_str(), "id" | "type")).map(|(k, v)| (k.clone(), v.clone())));
        nodes.push(Node { key: object_key(&o.id), label, props, seq: o.seq });
    }

    for e in store.events() {
        let mut props = vec![
            ("id".to_string(), Value::Str(e.id.clone())),
            (ACTIVITY_ATTR.to_string(), e.attr(ACTIVITY_ATTR).expect("virtual").into_owned()),
        ];
        if let Some(l) = e.attrs.get(LIFECYCLE_ATTR) {
            props.push((LIFECYCLE_ATTR.to_string(), l.clone()));
        }
        props.push((TIMESTAMP_ATTR.to_string(), timestamp_property(&e.time)));
        props.extend(
            e.attrs
                .iter()
                .filter(|(k, _)| !matches!(k.as_str(), "id" | ACTIVITY_ATTR | LIFECYCLE_ATTR | TIMESTAMP_ATTR))
                .map(|(k, v)| (k.clone(), v.clone())),
        );
        nodes.push(Node { key: event_key(&e.id), label: Label::Event, props, seq: e.seq });

        for oid in &e.observed {
            let is_case = store.object(oid).is_some_and(|o| o.otype == CASE_TYPE);
            let edge = if is_case {
                Edge { source: object_key(oid), etype: HAS_EVENT.into(), target: event_key(&e.id) }
            } else {
                Edge { source: event_key(&e.id), etype: INVOLVES.into(), target: object_key(oid) }
            };
            edges.push((e.seq, edge));
        }
    }

    for r in store.relations() {
        edges.push((
            r.seq,
            Edge { source: object_key(&r.source), etype: r.rtype.to_uppercase(), target: object_key(&r.target) },
        ));
    }

    nodes.sort_by_key(|n| n.seq);
    edges.sort_by_key(|(seq, _)| *seq);
    PropertyGraph { nodes, edges: edges.into_iter().map(|(_, e)| e).collect() }
}

/// Escapes a string as a single-quoted openCypher literal.
pub fn cypher_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn cypher_name(name: &str) -> String {
    let mut chars = name.chars();
    let plain = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn cypher_literal(v: &Value) -> String {
    match v {
        Value::Str(s) => cypher_string(s),
        Value::Int(i) => i.to_string(),
        Value::Dec(d) if d.is_finite() => format_decimal(*d),
        Value::Dec(d) => cypher_string(&d.to_string()),
        Value::Bool(b) => b.to_string(),
        Value::Instant(t) => cypher_string(&format_instant_millis(t)),
    }
}

fn cypher_map(props: &[(String, Value)]) -> String {
    let body: Vec<String> =
        props.iter().map(|(k, v)| format!("{}: {}", cypher_name(k), cypher_literal(v))).collect();
    format!("{{{}}}", body.join(", "))
}

/// An openCypher script: one `CREATE` per node, then one `MATCH ... CREATE`
/// per edge, each on its own line and terminated by `;`.
pub fn emit_cypher(graph: &PropertyGraph) -> String {
    let mut out = String::new();
    for n in &graph.nodes {
        out.push_str(&format!("CREATE (:{} {});\n", n.label.as_str(), cypher_map(&n.props)));
    }
    let matcher = |key: &str| {
        let n = graph.node(key).expect("edge endpoints are nodes");
        format!("{} {{id: {}}}", n.label.as_str(), cypher_string(n.id()))
    };
    for e in &graph.edges {
        out.push_str(&format!(
            "MATCH (a:{}), (b:{}) CREATE (a)-[:{}]->(b);\n",
            matcher(&e.source),
            matcher(&e.target),
            cypher_name(&e.etype)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFile {
    pub name: String,
    pub contents: String,
}

fn csv_type_suffix(values: &[&Value]) -> &'static str {
    let all = |f: fn(&Value) -> bool| !values.is_empty() && values.iter().all(|v| f(v));
    if all(|v| matches!(v, Value::Int(_))) {
        ":long"
    } else if all(|v| matches!(v, Value::Dec(_))) {
        ":double"
    } else if all(|v| matches!(v, Value::Bool(_))) {
        ":boolean"
    } else {
        ""
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        Value::Int(i) => i.to_string(),
        Value::Dec(d) => format_decimal(*d),
        Value::Bool(b) => b.to_string(),
        Value::Instant(t) => format_instant_millis(t),
    }
}

fn write_csv(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// Bulk-import CSV: one node file per label and one edge file per edge
/// type. The three labels and the two observation edge types always get a
/// file, so an empty graph yields header-only files.
pub fn emit_csv(graph: &PropertyGraph) -> Vec<CsvFile> {
    let mut files = Vec::new();
    for label in [Label::Case, Label::Event, Label::Object] {
        let nodes: Vec<&Node> = graph.nodes.iter().filter(|n| n.label == label).collect();
        let mut columns: Vec<String> = Vec::new();
        for n in &nodes {
            for (k, _) in &n.props {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
        if columns.is_empty() {
            columns.push("id".into());
        }
        let mut header = vec![":ID".to_string(), ":LABEL".to_string()];
        for c in &columns {
            let values: Vec<&Value> = nodes.iter().filter_map(|n| n.prop(c)).collect();
            header.push(format!("{c}{}", csv_type_suffix(&values)));
        }
        let mut rows = vec![header];
        for n in &nodes {
            let mut row = vec![n.key.clone(), label.as_str().to_string()];
            row.extend(columns.iter().map(|c| n.prop(c).map(csv_cell).unwrap_or_default()));
            rows.push(row);
        }
        files.push(CsvFile { name: format!("nodes_{}.csv", label.as_str()), contents: write_csv(rows) });
    }

    let mut types: Vec<String> = vec![HAS_EVENT.into(), INVOLVES.into()];
    for e in &graph.edges {
        if !types.contains(&e.etype) {
            types.push(e.etype.clone());
        }
    }
    for t in types {
        let mut rows = vec![vec![":START_ID".to_string(), ":END_ID".to_string(), ":TYPE".to_string()]];
        rows.extend(
            graph
                .edges
                .iter()
                .filter(|e| e.etype == t)
                .map(|e| vec![e.source.clone(), e.target.clone(), t.clone()]),
        );
        files.push(CsvFile { name: format!("edges_{t}.csv"), contents: write_csv(rows) });
    }
    files
}

fn plain_value<S: Serializer>(v: &Value, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Value::Str(x) => s.serialize_str(x),
        Value::Int(x) => s.serialize_i64(*x),
        Value::Dec(x) => s.serialize_f64(*x),
        Value::Bool(x) => s.serialize_bool(*x),
        Value::Instant(t) => s.serialize_str(&format_instant_millis(t)),
    }
}

fn plain_option<S: Serializer>(v: &Option<Value>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => plain_value(v, s),
        None => s.serialize_none(),
    }
}

/// Orders property values the way a graph database sorts mixed columns:
/// numbers by value, then strings, then booleans.
fn order_values(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Int(_) | Value::Dec(_) => 0,
            Value::Str(_) | Value::Instant(_) => 1,
            Value::Bool(_) => 2,
        }
    }
    a.compare(b).unwrap_or_else(|| rank(a).cmp(&rank(b)).then_with(|| csv_cell(a).cmp(&csv_cell(b))))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseEventRow {
    pub case: String,
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseEventPaths {
    pub rows: Vec<CaseEventRow>,
    /// Events with no incoming `HAS_EVENT` edge.
    pub disconnected_events: Vec<String>,
}

/// Every `(Case)-[:HAS_EVENT]->(Event)` path, ordered by case id then event
/// sequence, plus the events no case reaches.
pub fn query_case_event_paths(graph: &PropertyGraph) -> CaseEventPaths {
    let mut rows: Vec<(&Node, &Node)> = graph
        .edges
        .iter()
        .filter(|e| e.etype == HAS_EVENT)
        .filter_map(|e| Some((graph.node(&e.source)?, graph.node(&e.target)?)))
        .filter(|(c, e)| c.label == Label::Case && e.label == Label::Event)
        .collect();
    rows.sort_by(|a, b| a.0.id().cmp(b.0.id()).then(a.1.seq.cmp(&b.1.seq)));
    let reached: BTreeSet<&str> = rows.iter().map(|(_, e)| e.key.as_str()).collect();
    let disconnected_events = graph
        .nodes
        .iter()
        .filter(|n| n.label == Label::Event && !reached.contains(n.key.as_str()))
        .map(|n| n.id().to_string())
        .collect();
    CaseEventPaths {
        rows: rows
            .into_iter()
            .map(|(c, e)| CaseEventRow { case: c.id().to_string(), event: e.id().to_string() })
            .collect(),
        disconnected_events,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityFrequency {
    #[serde(serialize_with = "plain_value")]
    pub activity: Value,
    pub frequency: u64,
    /// Distinct lifecycle values, sorted.
    pub transitions: Vec<String>,
}

/// Event count and distinct lifecycle transitions per activity; most frequent
/// first, ties by activity.
pub fn query_activity_frequency(graph: &PropertyGraph) -> Vec<ActivityFrequency> {
    let mut groups: Vec<(Value, u64, BTreeSet<String>)> = Vec::new();
    for n in graph.nodes.iter().filter(|n| n.label == Label::Event) {
        let Some(activity) = n.prop(ACTIVITY_ATTR) else { continue };
        let slot = match groups.iter().position(|(a, _, _)| a == activity) {
            Some(i) => i,
            None => {
                groups.push((activity.clone(), 0, BTreeSet::new()));
                groups.len() - 1
            }
        };
        groups[slot].1 += 1;
        if let Some(l) = n.prop(LIFECYCLE_ATTR) {
            groups[slot].2.insert(csv_cell(l));
        }
    }
    groups.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| order_values(&a.0, &b.0)));
    groups
        .into_iter()
        .map(|(activity, frequency, t)| ActivityFrequency { activity, frequency, transitions: t.into_iter().collect() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSequenceRow {
    pub case: String,
    #[serde(serialize_with = "plain_value")]
    pub activity: Value,
    #[serde(serialize_with = "plain_option")]
    pub lifecycle: Option<Value>,
    #[serde(serialize_with = "plain_option")]
    pub timestamp: Option<Value>,
}

/// One row per `HAS_EVENT` edge, ordered by case id, then timestamp, then
/// event sequence.
pub fn query_event_sequence(graph: &PropertyGraph) -> Vec<EventSequenceRow> {
    let mut rows: Vec<(&Node, &Node)> = graph
        .edges
        .iter()
        .filter(|e| e.etype == HAS_EVENT)
        .filter_map(|e| Some((graph.node(&e.source)?, graph.node(&e.target)?)))
        .filter(|(c, e)| c.label == Label::Case && e.label == Label::Event)
        .collect();
    let ts = |n: &Node| n.prop(TIMESTAMP_ATTR).cloned();
    rows.sort_by(|a, b| {
        a.0.id()
            .cmp(b.0.id())
            .then_with(|| match (ts(a.1), ts(b.1)) {
                (Some(x), Some(y)) => order_values(&x, &y),
                (x, y) => x.is_none().cmp(&y.is_none()),
            })
            .then(a.1.seq.cmp(&b.1.seq))
    });
    rows.into_iter()
        .map(|(c, e)| EventSequenceRow {
            case: c.id().to_string(),
            activity: e.prop(ACTIVITY_ATTR).cloned().unwrap_or(Value::Str(String::new())),
            lifecycle: e.prop(LIFECYCLE_ATTR).cloned(),
            timestamp: ts(e),
        })
        .collect()
}

/// Node and edge counts per label and type, for summaries.
pub fn graph_counts(graph: &PropertyGraph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for n in &graph.nodes {
        *out.entry(n.label.as_str().to_string()).or_default() += 1;
    }
    for e in &graph.edges {
        *out.entry(e.etype.clone()).or_default() += 1;
    }
    out
}
