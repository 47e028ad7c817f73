use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde_json::{Map, Number, Value as Json};

use super::{IngestError, IngestMode, IngestReport, SourceFormat};
use crate::signature::{Domain, Signature};
use crate::store::{Attrs, OcedStore};
use crate::value::{format_instant, parse_instant, Timestamp, Value};

const GLOBAL_LOG: &str = "ocel:global-log";
const EVENTS: &str = "ocel:events";
const OBJECTS: &str = "ocel:objects";
const ATTRIBUTE_NAMES: &str = "ocel:attribute-names";
const OBJECT_TYPES: &str = "ocel:object-types";
/// Object-to-object relations have no OCEL 1.0 key; they travel under this
/// extension key so that emitted documents stay lossless.
const RELATIONS: &str = "foced:relations";

const KNOWN_TOP_LEVEL: [&str; 6] =
    [GLOBAL_LOG, "ocel:global-event", "ocel:global-object", EVENTS, OBJECTS, RELATIONS];

struct OcelReader {
    mode: IngestMode,
    report: IngestReport,
}

impl OcelReader {
    fn reject(&mut self, err: IngestError, location: &str) -> Result<(), IngestError> {
        match self.mode {
            IngestMode::Strict => Err(err),
            IngestMode::Lenient => {
                self.report.skip(location, err.to_string());
                Ok(())
            }
        }
    }

    fn warn_unknown_keys(&mut self, map: &Map<String, Json>, known: &[&str], location: &str) {
        for key in map.keys().filter(|k| !known.contains(&k.as_str())) {
            self.report.warnings.push(format!("UnknownOcelKey `{key}` at {location}"));
        }
    }

    /// Converts a value map; unsupported JSON values are errors in strict
    /// mode and dropped (with a skip record) in lenient mode.
    fn value_map(&mut self, map: Option<&Json>, location: &str) -> Result<Attrs, IngestError> {
        let mut attrs = Attrs::new();
        let Some(map) = map else { return Ok(attrs) };
        let Json::Object(map) = map else {
            return Err(IngestError::MalformedJson(format!("{location}: value map is not an object")));
        };
        for (key, raw) in map {
            let value = match raw {
                Json::String(s) => Some(Value::Str(s.clone())),
                Json::Bool(b) => Some(Value::Bool(*b)),
                Json::Number(n) => n.as_i64().map(Value::Int).or(n.as_f64().map(Value::Dec)),
                _ => None,
            };
            match value {
                Some(v) => {
                    attrs.insert(key.clone(), v);
                }
                None => {
                    let err = IngestError::InvalidValue {
                        key: key.clone(),
                        location: location.to_string(),
                        message: "only strings, numbers and booleans are supported".into(),
                    };
                    self.reject(err, location)?;
                }
            }
        }
        Ok(attrs)
    }
}

fn required_str<'a>(
    map: &'a Map<String, Json>,
    key: &str,
    location: &str,
) -> Result<&'a str, IngestError> {
    match map.get(key) {
        Some(Json::String(s)) => Ok(s),
        Some(_) => Err(IngestError::InvalidValue {
            key: key.into(),
            location: location.into(),
            message: "expected a string".into(),
        }),
        None => Err(IngestError::MissingRequiredAttribute {
            which: key.into(),
            location: location.into(),
        }),
    }
}

fn string_list(value: Option<&Json>) -> Option<Vec<String>> {
    match value {
        Some(Json::Array(items)) => {
            items.iter().map(|v| v.as_str().map(str::to_string)).collect::<Option<Vec<_>>>()
        }
        _ => None,
    }
}

/// Parses an OCEL 1.0 JSON document.
///
/// When `ocel:global-log` declares attribute names and object types, a
/// partial signature is bound: declared object types and attribute names
/// (open value domains), event types as observed, no time horizon on
/// instants, and an observation cap equal to the widest event.
pub fn parse_ocel<R: Read>(
    mut input: R,
    mode: IngestMode,
) -> Result<(OcedStore, IngestReport), IngestError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| IngestError::MalformedJson(format!("input is not UTF-8 text: {e}")))?;
    let doc: Json = serde_json::from_str(&text).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    let Json::Object(doc) = doc else {
        return Err(IngestError::MalformedJson("top level is not a JSON object".into()));
    };
    let mut reader = OcelReader { mode, report: IngestReport::new(SourceFormat::Ocel) };
    reader.warn_unknown_keys(&doc, &KNOWN_TOP_LEVEL, "top level");

    let section = |key: &str| match doc.get(key) {
        Some(Json::Object(m)) => Ok(m),
        Some(_) => Err(IngestError::MalformedJson(format!("`{key}` is not an object"))),
        None => Err(IngestError::MissingRequiredAttribute {
            which: key.into(),
            location: "top level".into(),
        }),
    };
    let events = section(EVENTS)?;
    let objects = section(OBJECTS)?;

    let mut store = OcedStore::new();
    for (id, raw) in objects {
        let location = format!("{OBJECTS}.{id}");
        let Json::Object(obj) = raw else {
            return Err(IngestError::MalformedJson(format!("{location} is not an object")));
        };
        reader.warn_unknown_keys(obj, &["ocel:type", "ocel:ovmap"], &location);
        let otype = match required_str(obj, "ocel:type", &location) {
            Ok(t) => t,
            Err(err) => {
                reader.reject(err, &location)?;
                continue;
            }
        };
        let attrs = reader.value_map(obj.get("ocel:ovmap"), &location)?;
        match store.insert_object(id, otype, attrs) {
            Ok(()) => reader.report.objects_created += 1,
            Err(source) => reader.reject(IngestError::Store { location: location.clone(), source }, &location)?,
        }
    }

    for (id, raw) in events {
        let location = format!("{EVENTS}.{id}");
        let Json::Object(ev) = raw else {
            return Err(IngestError::MalformedJson(format!("{location} is not an object")));
        };
        reader.warn_unknown_keys(
            ev,
            &["ocel:activity", "ocel:timestamp", "ocel:omap", "ocel:vmap"],
            &location,
        );
        let activity = match required_str(ev, "ocel:activity", &location) {
            Ok(a) => a,
            Err(err) => {
                reader.reject(err, &location)?;
                continue;
            }
        };
        let time = match ev.get("ocel:timestamp") {
            Some(Json::String(s)) => parse_instant(s).map(Timestamp::Instant),
            Some(Json::Number(n)) => n.as_u64().map(Timestamp::Tick),
            _ => None,
        };
        let Some(time) = time else {
            let err = match ev.get("ocel:timestamp") {
                None => IngestError::MissingRequiredAttribute {
                    which: "ocel:timestamp".into(),
                    location: location.clone(),
                },
                Some(_) => IngestError::InvalidValue {
                    key: "ocel:timestamp".into(),
                    location: location.clone(),
                    message: "expected an ISO-8601 instant".into(),
                },
            };
            reader.reject(err, &location)?;
            continue;
        };
        let omap = match ev.get("ocel:omap") {
            None => Vec::new(),
            other => match string_list(other) {
                Some(list) => list,
                None => {
                    return Err(IngestError::MalformedJson(format!(
                        "{location}: ocel:omap is not a list of object ids"
                    )))
                }
            },
        };
        let attrs = reader.value_map(ev.get("ocel:vmap"), &location)?;
        let linked: Vec<&str> = omap.iter().map(String::as_str).collect();
        match store.insert_event(id, activity, time, attrs, &linked) {
            Ok(()) => reader.report.events_read += 1,
            Err(source) => reader.reject(IngestError::Store { location: location.clone(), source }, &location)?,
        }
    }

    if let Some(raw) = doc.get(RELATIONS) {
        let Json::Array(items) = raw else {
            return Err(IngestError::MalformedJson(format!("`{RELATIONS}` is not a list")));
        };
        for (i, item) in items.iter().enumerate() {
            let location = format!("{RELATIONS}[{i}]");
            let parts = string_list(Some(item)).filter(|p| p.len() == 3);
            let Some(parts) = parts else {
                return Err(IngestError::MalformedJson(format!(
                    "{location}: expected [type, source, target]"
                )));
            };
            if let Err(source) = store.add_relation(&parts[0], &parts[1], &parts[2]) {
                reader.reject(IngestError::Store { location: location.clone(), source }, &location)?;
            }
        }
    }

    if let Some(Json::Object(global)) = doc.get(GLOBAL_LOG) {
        bind_declared_schema(&mut store, global, &mut reader)?;
    }
    Ok((store, reader.report))
}

fn bind_declared_schema(
    store: &mut OcedStore,
    global: &Map<String, Json>,
    reader: &mut OcelReader,
) -> Result<(), IngestError> {
    let names = string_list(global.get(ATTRIBUTE_NAMES)).unwrap_or_default();
    let otypes = string_list(global.get(OBJECT_TYPES)).unwrap_or_default();
    let etypes: BTreeSet<String> = store.events().iter().map(|e| e.etype.clone()).collect();
    if names.is_empty() || otypes.is_empty() || etypes.is_empty() {
        reader
            .report
            .warnings
            .push("global log declares no complete schema; store left unbound".into());
        return Ok(());
    }
    let attributes: BTreeMap<String, Domain> = names.into_iter().map(|n| (n, Domain::Open)).collect();
    let rtypes: BTreeSet<String> = store.relations().iter().map(|r| r.rtype.clone()).collect();
    let widest = store.events().iter().map(|e| e.observed.len()).max().unwrap_or(0).max(1);
    let sig = Signature::new(etypes, otypes, attributes, rtypes, 0, widest)
        .map_err(|e| IngestError::MalformedJson(format!("{GLOBAL_LOG}: {e}")))?;
    let violations = store.bind_signature(sig);
    if let Some(first) = violations.first() {
        let first = format!("{} `{}`: {}", first.entity, first.id, first.error);
        match reader.mode {
            IngestMode::Strict => {
                return Err(IngestError::SchemaViolations { count: violations.len(), first })
            }
            IngestMode::Lenient => {
                for v in &violations {
                    reader.report.warnings.push(format!("{} `{}`: {}", v.entity, v.id, v.error));
                }
            }
        }
    }
    Ok(())
}

fn json_value(value: &Value) -> Json {
    match value {
        Value::Str(s) => Json::String(s.clone()),
        Value::Int(i) => Json::Number((*i).into()),
        Value::Dec(d) => Number::from_f64(*d).map(Json::Number).unwrap_or(Json::Null),
        Value::Bool(b) => Json::Bool(*b),
        Value::Instant(t) => Json::String(format_instant(t)),
    }
}

fn json_map(attrs: &Attrs) -> Json {
    Json::Object(attrs.iter().map(|(k, v)| (k.clone(), json_value(v))).collect())
}

/// Writes a store as OCEL 1.0 JSON. Tick timestamps are written as integers
/// and relations under an extension key; instant-valued attributes become
/// ISO-8601 strings.
pub fn emit_ocel(store: &OcedStore) -> Vec<u8> {
    let mut doc = Map::new();
    if let Some(sig) = store.signature() {
        let mut global = Map::new();
        global.insert("ocel:version".into(), Json::String("1.0".into()));
        global.insert("ocel:ordering".into(), Json::String("timestamp".into()));
        global.insert(
            ATTRIBUTE_NAMES.into(),
            Json::Array(sig.attributes().keys().cloned().map(Json::String).collect()),
        );
        global.insert(
            OBJECT_TYPES.into(),
            Json::Array(sig.object_types().iter().cloned().map(Json::String).collect()),
        );
        doc.insert(GLOBAL_LOG.into(), Json::Object(global));
    }
    let events: Map<String, Json> = store
        .events()
        .iter()
        .map(|e| {
            let mut ev = Map::new();
            ev.insert("ocel:activity".into(), Json::String(e.etype.clone()));
            let time = match e.time {
                Timestamp::Tick(t) => Json::Number(t.into()),
                Timestamp::Instant(t) => Json::String(format_instant(&t)),
            };
            ev.insert("ocel:timestamp".into(), time);
            ev.insert(
                "ocel:omap".into(),
                Json::Array(e.observed.iter().cloned().map(Json::String).collect()),
            );
            ev.insert("ocel:vmap".into(), json_map(&e.attrs));
            (e.id.clone(), Json::Object(ev))
        })
        .collect();
    let objects: Map<String, Json> = store
        .objects()
        .iter()
        .map(|o| {
            let mut obj = Map::new();
            obj.insert("ocel:type".into(), Json::String(o.otype.clone()));
            obj.insert("ocel:ovmap".into(), json_map(&o.attrs));
            (o.id.clone(), Json::Object(obj))
        })
        .collect();
    doc.insert(EVENTS.into(), Json::Object(events));
    doc.insert(OBJECTS.into(), Json::Object(objects));
    if !store.relations().is_empty() {
        let rels = store
            .relations()
            .iter()
            .map(|r| {
                Json::Array(vec![
                    Json::String(r.rtype.clone()),
                    Json::String(r.source.clone()),
                    Json::String(r.target.clone()),
                ])
            })
            .collect();
        doc.insert(RELATIONS.into(), Json::Array(rels));
    }
    let mut out = serde_json::to_vec_pretty(&Json::Object(doc)).expect("JSON serializes");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
  "ocel:global-log": {"ocel:attribute-names": ["prio", "cost"], "ocel:object-types": ["order", "item"]},
  "ocel:events": {
    "e1": {"ocel:activity": "place", "ocel:timestamp": "2021-01-01T10:00:00Z",
           "ocel:omap": ["o1", "i1"], "ocel:vmap": {"prio": "high", "cost": 2.5}}
  },
  "ocel:objects": {
    "o1": {"ocel:type": "order", "ocel:ovmap": {}},
    "i1": {"ocel:type": "item", "ocel:ovmap": {"cost": 3}}
  }
}"#;

    #[test]
    fn event_observes_both_objects() {
        let (store, report) = parse_ocel(DOC.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(store.objects().len(), 2);
        assert_eq!(store.events()[0].observed, vec!["o1".to_string(), "i1".to_string()]);
        assert_eq!(store.events()[0].attrs["cost"], Value::Dec(2.5));
        assert_eq!(store.object("i1").unwrap().attrs["cost"], Value::Int(3));
        assert_eq!(report.events_read, 1);
        let sig = store.signature().expect("declared schema is bound");
        assert!(sig.object_types().contains("item"));
        assert_eq!(sig.max_observes(), 2);
    }

    #[test]
    fn ghost_reference() {
        let doc = DOC.replace("[\"o1\", \"i1\"]", "[\"o1\", \"ghost\"]");
        match parse_ocel(doc.as_bytes(), IngestMode::Strict) {
            Err(e @ IngestError::Store { .. }) => {
                assert_eq!(e.kind(), "DanglingObjectRef");
                assert!(e.to_string().contains("ghost"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let (store, report) = parse_ocel(doc.as_bytes(), IngestMode::Lenient).unwrap();
        assert!(store.events().is_empty());
        assert_eq!(report.skipped_records.len(), 1);
    }

    #[test]
    fn unknown_keys_warn() {
        let doc = DOC.replace("\"ocel:events\"", "\"vendor:x\": 1, \"ocel:events\"");
        let (_, report) = parse_ocel(doc.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("vendor:x"));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(
            parse_ocel("<log/>".as_bytes(), IngestMode::Strict),
            Err(IngestError::MalformedJson(_))
        ));
        assert!(matches!(
            parse_ocel("{\"ocel:events\": {}}".as_bytes(), IngestMode::Strict),
            Err(IngestError::MissingRequiredAttribute { .. })
        ));
    }

    #[test]
    fn undeclared_object_type_is_a_schema_violation() {
        let doc = DOC.replace("\"ocel:type\": \"item\"", "\"ocel:type\": \"pallet\"");
        assert!(matches!(
            parse_ocel(doc.as_bytes(), IngestMode::Strict),
            Err(IngestError::SchemaViolations { count: 1, .. })
        ));
        let (store, report) = parse_ocel(doc.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(store.objects().len(), 2);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let (store, _) = parse_ocel(DOC.as_bytes(), IngestMode::Strict).unwrap();
        let (again, _) = parse_ocel(emit_ocel(&store).as_slice(), IngestMode::Strict).unwrap();
        assert_eq!(again, store);
    }

    #[test]
    fn empty_store() {
        let text = String::from_utf8(emit_ocel(&OcedStore::new())).unwrap();
        let (store, report) = parse_ocel(text.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(store, OcedStore::new());
        assert_eq!(report.events_read, 0);
    }
}
