use std::io::Read;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{IngestError, IngestMode, IngestReport, SourceFormat, CASE_TYPE};
use crate::store::{Attrs, OcedStore, LIFECYCLE_ATTR};
use crate::value::{format_decimal, format_instant, parse_instant, Timestamp, Value};

const CONCEPT_NAME: &str = "concept:name";
const TIMESTAMP: &str = "time:timestamp";
const TRANSITION: &str = "lifecycle:transition";
const IDENTITY: &str = "identity:id";

/// Maps byte offsets to 1-based line/column positions.
struct Lines {
    starts: Vec<usize>,
}

impl Lines {
    fn new(text: &[u8]) -> Self {
        let mut starts = vec![0];
        starts.extend(text.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i + 1));
        Lines { starts }
    }

    fn locate(&self, offset: usize) -> String {
        let line = self.starts.partition_point(|&s| s <= offset);
        let col = offset - self.starts[line - 1] + 1;
        format!("line {line}, column {col}")
    }
}

struct EventBuf {
    location: String,
    attrs: Attrs,
}

struct TraceBuf {
    location: String,
    attrs: Attrs,
    events: Vec<EventBuf>,
}

enum Frame {
    Log,
    Trace(TraceBuf),
    Event { buf: EventBuf, orphan: bool },
    Skip,
}

struct XesParser<'a> {
    mode: IngestMode,
    lines: &'a Lines,
    store: OcedStore,
    report: IngestReport,
}

fn attribute_kind(tag: &[u8]) -> Option<&'static str> {
    Some(match tag {
        b"string" => "string",
        b"date" => "date",
        b"int" => "int",
        b"float" => "float",
        b"boolean" => "boolean",
        b"id" => "id",
        _ => return None,
    })
}

impl XesParser<'_> {
    /// Records a problem in lenient mode; returns it as an error in strict mode.
    fn reject(&mut self, err: IngestError, location: &str) -> Result<(), IngestError> {
        match self.mode {
            IngestMode::Strict => Err(err),
            IngestMode::Lenient => {
                self.report.skip(location, err.to_string());
                Ok(())
            }
        }
    }

    fn read_attribute(
        &mut self,
        kind: &str,
        start: &BytesStart<'_>,
        location: &str,
    ) -> Result<Option<(String, Value)>, IngestError> {
        let mut key = None;
        let mut raw = None;
        for attr in start.attributes() {
            let attr = attr.map_err(|e| IngestError::MalformedXml {
                location: location.to_string(),
                message: e.to_string(),
            })?;
            let value = attr.unescape_value().map_err(|e| IngestError::MalformedXml {
                location: location.to_string(),
                message: e.to_string(),
            })?;
            match attr.key.as_ref() {
                b"key" => key = Some(value.into_owned()),
                b"value" => raw = Some(value.into_owned()),
                _ => {}
            }
        }
        let Some(key) = key else {
            let err = IngestError::MissingRequiredAttribute {
                which: "key".into(),
                location: location.to_string(),
            };
            self.reject(err, location)?;
            return Ok(None);
        };
        let Some(raw) = raw else {
            let err = IngestError::MissingRequiredAttribute {
                which: format!("value of `{key}`"),
                location: location.to_string(),
            };
            self.reject(err, location)?;
            return Ok(None);
        };
        let parsed = match kind {
            "string" | "id" => Ok(Value::Str(raw)),
            "date" => parse_instant(&raw).map(Value::Instant).ok_or("not an ISO-8601 instant"),
            "int" => raw.trim().parse().map(Value::Int).map_err(|_| "not an integer"),
            "float" => raw.trim().parse().map(Value::Dec).map_err(|_| "not a decimal"),
            _ => match raw.trim().to_ascii_lowercase().as_str() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err("not a boolean"),
            },
        };
        match parsed {
            Ok(v) => Ok(Some((key, v))),
            Err(message) => {
                let err = IngestError::InvalidValue {
                    key,
                    location: location.to_string(),
                    message: message.into(),
                };
                self.reject(err, location)?;
                Ok(None)
            }
        }
    }

    fn finish_trace(&mut self, mut trace: TraceBuf) -> Result<(), IngestError> {
        let Some(name) = trace.attrs.remove(CONCEPT_NAME) else {
            let err = IngestError::MissingRequiredAttribute {
                which: CONCEPT_NAME.into(),
                location: trace.location.clone(),
            };
            return self.reject(err, &trace.location);
        };
        let case_id = name.to_string();
        if let Err(source) = self.store.insert_object(&case_id, CASE_TYPE, trace.attrs) {
            let err = IngestError::Store { location: trace.location.clone(), source };
            return self.reject(err, &trace.location);
        }
        self.report.cases_read += 1;
        self.report.objects_created += 1;
        for event in trace.events {
            self.finish_event(event, &case_id)?;
        }
        Ok(())
    }

    fn finish_event(&mut self, mut event: EventBuf, case_id: &str) -> Result<(), IngestError> {
        let location = event.location.clone();
        let missing = |which: &str| IngestError::MissingRequiredAttribute {
            which: which.into(),
            location: location.clone(),
        };
        let Some(name) = event.attrs.remove(CONCEPT_NAME) else {
            return self.reject(missing(CONCEPT_NAME), &location);
        };
        let time = match event.attrs.remove(TIMESTAMP) {
            Some(Value::Instant(t)) => t,
            Some(Value::Str(s)) if parse_instant(&s).is_some() => parse_instant(&s).unwrap(),
            Some(other) => {
                let err = IngestError::InvalidValue {
                    key: TIMESTAMP.into(),
                    location: location.clone(),
                    message: format!("expected a date, got a {}", other.kind()),
                };
                return self.reject(err, &location);
            }
            None => return self.reject(missing(TIMESTAMP), &location),
        };
        if let Some(lifecycle) = event.attrs.remove(TRANSITION) {
            event.attrs.insert(LIFECYCLE_ATTR.into(), lifecycle);
        }
        let id = event.attrs.remove(IDENTITY).map(|v| v.to_string());
        let etype = name.to_string();
        let time = Timestamp::Instant(time);
        let result = match id {
            Some(id) => self.store.insert_event(&id, &etype, time, event.attrs, &[case_id]),
            None => self.store.add_event(&etype, time, event.attrs, &[case_id]).map(|_| ()),
        };
        match result {
            Ok(()) => {
                self.report.events_read += 1;
                Ok(())
            }
            Err(source) => {
                let err = IngestError::Store { location: location.clone(), source };
                self.reject(err, &location)
            }
        }
    }

    fn open(
        &mut self,
        stack: &mut Vec<Frame>,
        start: &BytesStart<'_>,
        location: String,
    ) -> Result<(), IngestError> {
        let name = start.local_name();
        let tag = name.as_ref();
        let frame = match (stack.last(), tag) {
            (None, b"log") => Frame::Log,
            (None, _) => {
                return Err(IngestError::Structure {
                    location,
                    message: format!(
                        "root element must be <log>, found <{}>",
                        String::from_utf8_lossy(tag)
                    ),
                })
            }
            (Some(Frame::Log), b"trace") => {
                Frame::Trace(TraceBuf { location, attrs: Attrs::new(), events: Vec::new() })
            }
            (Some(Frame::Log), b"event") => {
                Frame::Event { buf: EventBuf { location, attrs: Attrs::new() }, orphan: true }
            }
            (Some(Frame::Trace(_)), b"event") => {
                Frame::Event { buf: EventBuf { location, attrs: Attrs::new() }, orphan: false }
            }
            (Some(Frame::Trace(_) | Frame::Event { .. }), tag) if attribute_kind(tag).is_some() => {
                let kind = attribute_kind(tag).unwrap();
                if let Some((key, value)) = self.read_attribute(kind, start, &location)? {
                    match stack.last_mut() {
                        Some(Frame::Trace(t)) => t.attrs.insert(key, value),
                        Some(Frame::Event { buf, .. }) => buf.attrs.insert(key, value),
                        _ => unreachable!(),
                    };
                }
                Frame::Skip
            }
            _ => Frame::Skip,
        };
        stack.push(frame);
        Ok(())
    }

    fn close(&mut self, stack: &mut Vec<Frame>) -> Result<(), IngestError> {
        match stack.pop() {
            Some(Frame::Trace(trace)) => self.finish_trace(trace),
            Some(Frame::Event { buf, orphan: true }) => {
                let err = IngestError::Structure {
                    location: buf.location.clone(),
                    message: "event outside of any trace".into(),
                };
                self.reject(err, &buf.location)
            }
            Some(Frame::Event { buf, orphan: false }) => {
                if let Some(Frame::Trace(trace)) = stack.last_mut() {
                    trace.events.push(buf);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parses an XES document. Each trace becomes a `case` object named by its
/// `concept:name`; each event observes exactly its enclosing case.
pub fn parse_xes<R: Read>(
    mut input: R,
    mode: IngestMode,
) -> Result<(OcedStore, IngestReport), IngestError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let lines = Lines::new(&bytes);
    let mut parser = XesParser {
        mode,
        lines: &lines,
        store: OcedStore::new(),
        report: IngestReport::new(SourceFormat::Xes),
    };
    let mut reader = Reader::from_reader(bytes.as_slice());
    let mut stack: Vec<Frame> = Vec::new();
    let mut seen_root = false;
    let mut buf = Vec::new();
    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event_into(&mut buf).map_err(|e| IngestError::MalformedXml {
            location: parser.lines.locate(reader.error_position() as usize),
            message: e.to_string(),
        })?;
        let location = || parser.lines.locate(offset);
        match event {
            Event::Start(start) => {
                if stack.is_empty() && seen_root {
                    return Err(IngestError::MalformedXml {
                        location: location(),
                        message: "more than one root element".into(),
                    });
                }
                seen_root = true;
                let loc = location();
                parser.open(&mut stack, &start, loc)?;
            }
            Event::Empty(start) => {
                seen_root = true;
                let loc = location();
                parser.open(&mut stack, &start, loc)?;
                parser.close(&mut stack)?;
            }
            Event::End(_) => parser.close(&mut stack)?,
            Event::Eof => {
                if !stack.is_empty() {
                    return Err(IngestError::MalformedXml {
                        location: location(),
                        message: "unexpected end of document, elements left open".into(),
                    });
                }
                if !seen_root {
                    return Err(IngestError::MalformedXml {
                        location: location(),
                        message: "document has no root element".into(),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok((parser.store, parser.report))
}

fn attr_value(text: &str) -> String {
    escape(text).replace('\n', "&#10;").replace('\r', "&#13;").replace('\t', "&#9;")
}

fn write_attribute(out: &mut String, indent: &str, key: &str, value: &Value) {
    let (tag, text) = match value {
        Value::Str(s) => ("string", s.clone()),
        Value::Int(i) => ("int", i.to_string()),
        Value::Dec(d) => ("float", format_decimal(*d)),
        Value::Bool(b) => ("boolean", b.to_string()),
        Value::Instant(t) => ("date", format_instant(t)),
    };
    out.push_str(&format!(
        "{indent}<{tag} key=\"{}\" value=\"{}\"/>\n",
        attr_value(key),
        attr_value(&text)
    ));
}

/// Writes a case-shaped store as XES. Every object must be a `case`, every
/// event must observe exactly one case, and times must be instants.
pub fn emit_xes(store: &OcedStore) -> Result<Vec<u8>, IngestError> {
    if let Some(o) = store.objects().iter().find(|o| o.otype != CASE_TYPE) {
        return Err(IngestError::NotCaseShaped(format!(
            "object `{}` has type `{}`; XES only holds cases",
            o.id, o.otype
        )));
    }
    if let Some(e) = store.events().iter().find(|e| e.observed.len() != 1) {
        return Err(IngestError::NotCaseShaped(format!(
            "event `{}` observes {} objects; XES events belong to exactly one case",
            e.id,
            e.observed.len()
        )));
    }
    if !store.relations().is_empty() {
        return Err(IngestError::NotCaseShaped("object relations have no XES encoding".into()));
    }
    if let Some(e) = store.events().iter().find(|e| matches!(e.time, Timestamp::Tick(_))) {
        return Err(IngestError::Unrepresentable(format!(
            "event `{}` has a logical tick; XES needs instants",
            e.id
        )));
    }

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<log xes.version=\"1849-2016\" xes.features=\"\" xmlns=\"http://www.xes-standard.org/\">\n",
    );
    for (name, prefix) in
        [("Concept", "concept"), ("Time", "time"), ("Lifecycle", "lifecycle"), ("Identity", "identity")]
    {
        out.push_str(&format!(
            "  <extension name=\"{name}\" prefix=\"{prefix}\" uri=\"http://www.xes-standard.org/{prefix}.xesext\"/>\n"
        ));
    }
    let mut by_case: Vec<Vec<usize>> = vec![Vec::new(); store.objects().len()];
    let slot: std::collections::HashMap<&str, usize> =
        store.objects().iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
    for (i, e) in store.events().iter().enumerate() {
        by_case[slot[e.observed[0].as_str()]].push(i);
    }
    for (case, events) in store.objects().iter().zip(by_case) {
        out.push_str("  <trace>\n");
        write_attribute(&mut out, "    ", CONCEPT_NAME, &Value::Str(case.id.clone()));
        for (k, v) in &case.attrs {
            write_attribute(&mut out, "    ", k, v);
        }
        for i in events {
            let e = &store.events()[i];
            out.push_str("    <event>\n");
            write_attribute(&mut out, "      ", IDENTITY, &Value::Str(e.id.clone()));
            write_attribute(&mut out, "      ", CONCEPT_NAME, &Value::Str(e.etype.clone()));
            write_attribute(&mut out, "      ", TIMESTAMP, &e.time.to_value());
            for (k, v) in &e.attrs {
                let key = if k == LIFECYCLE_ATTR { TRANSITION } else { k.as_str() };
                write_attribute(&mut out, "      ", key, v);
            }
            out.push_str("    </event>\n");
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_EVENTS: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="c1"/>
    <event>
      <string key="concept:name" value="Accepted"/>
      <string key="lifecycle:transition" value="In Progress"/>
      <date key="time:timestamp" value="2012-05-10T08:00:00+02:00"/>
      <string key="org:resource" value="Siebel"/>
      <int key="n" value="3"/>
    </event>
    <event>
      <string key="concept:name" value="Completed"/>
      <date key="time:timestamp" value="2012-05-11T08:00:00+02:00"/>
      <boolean key="flag" value="TRUE"/>
      <list key="nested"><string key="x" value="y"/></list>
    </event>
  </trace>
</log>
"#;

    #[test]
    fn one_trace_two_events() {
        let (store, report) = parse_xes(TWO_EVENTS.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(store.objects().len(), 1);
        assert_eq!(store.objects()[0].id, "c1");
        assert_eq!(store.objects()[0].otype, CASE_TYPE);
        assert_eq!(store.events().len(), 2);
        assert!(store.events().iter().all(|e| e.observed == vec!["c1".to_string()]));
        let first = &store.events()[0];
        assert_eq!(first.etype, "Accepted");
        assert_eq!(first.attrs["lifecycle"], Value::from("In Progress"));
        assert_eq!(first.attrs["org:resource"], Value::from("Siebel"));
        assert_eq!(first.attrs["n"], Value::Int(3));
        assert_eq!(first.attr("activity").unwrap().as_ref(), &Value::from("Accepted"));
        assert_eq!(store.events()[1].attrs["flag"], Value::Bool(true));
        assert!(!store.events()[1].attrs.contains_key("nested"));
        assert!(!store.events()[1].attrs.contains_key("x"));
        assert_eq!(report.cases_read, 1);
        assert_eq!(report.events_read, 2);
        assert!(report.skipped_records.is_empty());
        assert!(store.signature().is_none());
    }

    #[test]
    fn missing_timestamp_strict_and_lenient() {
        let doc = TWO_EVENTS.replace(
            r#"<date key="time:timestamp" value="2012-05-11T08:00:00+02:00"/>"#,
            "",
        );
        match parse_xes(doc.as_bytes(), IngestMode::Strict) {
            Err(IngestError::MissingRequiredAttribute { which, location }) => {
                assert_eq!(which, "time:timestamp");
                assert_eq!(location, "line 12, column 5");
            }
            other => panic!("unexpected {other:?}"),
        }
        let (store, report) = parse_xes(doc.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(store.events().len(), 1);
        assert_eq!(report.events_read, 1);
        assert_eq!(report.skipped_records.len(), 1);
    }

    #[test]
    fn malformed_xml_names_a_line() {
        let doc = "<log>\n<trace>\n</log>\n";
        match parse_xes(doc.as_bytes(), IngestMode::Strict) {
            Err(IngestError::MalformedXml { location, .. }) => assert!(location.starts_with("line 3")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_xes("<log><trace>".as_bytes(), IngestMode::Strict),
            Err(IngestError::MalformedXml { .. })
        ));
        assert!(matches!(
            parse_xes("{\"ocel:events\":{}}".as_bytes(), IngestMode::Strict),
            Err(IngestError::MalformedXml { .. })
        ));
    }

    #[test]
    fn duplicate_case_names() {
        let doc = r#"<log><trace><string key="concept:name" value="a"/></trace><trace><string key="concept:name" value="a"/></trace></log>"#;
        assert!(matches!(
            parse_xes(doc.as_bytes(), IngestMode::Strict),
            Err(IngestError::Store { .. })
        ));
        let (store, report) = parse_xes(doc.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(store.objects().len(), 1);
        assert_eq!(report.skipped_records.len(), 1);
    }

    #[test]
    fn bad_date_value() {
        let doc = TWO_EVENTS.replace("2012-05-10T08:00:00+02:00", "soon");
        assert!(matches!(
            parse_xes(doc.as_bytes(), IngestMode::Strict),
            Err(IngestError::InvalidValue { .. })
        ));
    }

    #[test]
    fn empty_store_emits_an_empty_log() {
        let bytes = emit_xes(&OcedStore::new()).unwrap();
        let (store, report) = parse_xes(bytes.as_slice(), IngestMode::Strict).unwrap();
        assert_eq!(store, OcedStore::new());
        assert_eq!(report.cases_read, 0);
    }

    #[test]
    fn parse_emit_parse_is_a_fixed_point() {
        let (store, _) = parse_xes(TWO_EVENTS.as_bytes(), IngestMode::Strict).unwrap();
        let bytes = emit_xes(&store).unwrap();
        let (again, _) = parse_xes(bytes.as_slice(), IngestMode::Strict).unwrap();
        assert_eq!(again, store);
    }

    #[test]
    fn multi_object_events_are_not_case_shaped() {
        let mut store = OcedStore::new();
        let a = store.add_object(CASE_TYPE, Attrs::new()).unwrap();
        let b = store.add_object(CASE_TYPE, Attrs::new()).unwrap();
        store
            .add_event("x", Timestamp::Instant(chrono::Utc::now()), Attrs::new(), &[&a, &b])
            .unwrap();
        assert!(matches!(emit_xes(&store), Err(IngestError::NotCaseShaped(_))));
    }

    #[test]
    fn awkward_strings_survive() {
        let mut store = OcedStore::new();
        let c = store
            .add_object(CASE_TYPE, Attrs::from([("note".into(), Value::from("a<b>&\"c'\n\td"))]))
            .unwrap();
        store
            .add_event(
                "O'Brien & co",
                Timestamp::Instant(parse_instant("2020-01-01T00:00:00.123456Z").unwrap()),
                Attrs::from([("lifecycle".into(), Value::from("start"))]),
                &[&c],
            )
            .unwrap();
        let bytes = emit_xes(&store).unwrap();
        let (again, _) = parse_xes(bytes.as_slice(), IngestMode::Strict).unwrap();
        assert_eq!(again, store);
    }
}
