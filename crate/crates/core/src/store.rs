//! The object-centric event store: typed objects, events observing them, and
//! object-to-object relations, validated at insertion time.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::signature::Signature;
use crate::value::{TimeMode, Timestamp, Value};

pub type Attrs = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum StoreError {
    #[error("unknown object type `{0}`")]
    UnknownObjectType(String),
    #[error("unknown event type `{0}`")]
    UnknownEventType(String),
    #[error("unknown relation type `{0}`")]
    UnknownRelationType(String),
    #[error("invalid attribute `{0}`")]
    InvalidAttribute(String),
    #[error("time {time} lies outside the horizon [0, {max_time}]")]
    TimeOutOfHorizon { time: u64, max_time: u64 },
    #[error("reference to unknown object `{0}`")]
    DanglingObjectRef(String),
    #[error("event observes {count} objects, more than the cap of {cap}")]
    MaxObservesExceeded { count: usize, cap: usize },
    #[error("relation `{0}` may not link an object to itself")]
    SelfLoopRejected(String),
    #[error("duplicate object id `{0}`")]
    DuplicateObjectId(String),
    #[error("duplicate event id `{0}`")]
    DuplicateEventId(String),
    #[error("store holds {expected} timestamps, got a {found} timestamp")]
    TimeModeMismatch { expected: TimeMode, found: TimeMode },
    #[error("sequence number {seq} does not follow {last}")]
    SeqOutOfOrder { seq: u64, last: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcedObject {
    pub id: String,
    pub otype: String,
    pub attrs: Attrs,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcedEvent {
    pub id: String,
    pub etype: String,
    pub time: Timestamp,
    pub attrs: Attrs,
    /// Observed object ids, duplicates removed, first occurrence kept.
    pub observed: Vec<String>,
    pub seq: u64,
}

/// Event attribute that mirrors the event type when not stored explicitly.
pub const ACTIVITY_ATTR: &str = "activity";
/// Event attribute that mirrors the event time when not stored explicitly.
pub const TIMESTAMP_ATTR: &str = "timestamp";
/// Event attribute holding the lifecycle transition of ingested events.
pub const LIFECYCLE_ATTR: &str = "lifecycle";

impl OcedEvent {
    /// Attribute lookup. `activity` and `timestamp` fall back to the event
    /// type and time when the event carries no explicit value for them.
    pub fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        if let Some(v) = self.attrs.get(name) {
            return Some(Cow::Borrowed(v));
        }
        match name {
            ACTIVITY_ATTR => Some(Cow::Owned(Value::Str(self.etype.clone()))),
            TIMESTAMP_ATTR => Some(Cow::Owned(self.time.to_value())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Relation {
    pub rtype: String,
    pub source: String,
    pub target: String,
    pub seq: u64,
}

/// A schema violation found when binding a signature to a populated store.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaViolation {
    /// `object`, `event` or `relation`.
    pub entity: &'static str,
    /// Object or event id; for relations the relation's sequence number.
    pub id: String,
    pub error: StoreError,
}

#[derive(Debug, Clone, Default)]
pub struct OcedStore {
    signature: Option<Signature>,
    objects: Vec<OcedObject>,
    object_index: HashMap<String, usize>,
    /// Event indices observing each object, in insertion order.
    observers: Vec<Vec<usize>>,
    events: Vec<OcedEvent>,
    event_index: HashMap<String, usize>,
    order: BTreeMap<(Timestamp, u64), usize>,
    relations: Vec<Relation>,
    time_mode: Option<TimeMode>,
    next_seq: u64,
}

impl PartialEq for OcedStore {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.objects == other.objects
            && self.events == other.events
            && self.relations == other.relations
    }
}

impl OcedStore {
    /// An unbound store: any type names and attributes are accepted.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_signature(signature: Signature) -> Self {
        OcedStore { signature: Some(signature), ..Self::default() }
    }

    pub fn signature(&self) -> Option<&Signature> {
        self.signature.as_ref()
    }

    /// Binds `signature`, re-validating everything already stored. The
    /// signature is bound even when violations are found; all of them are
    /// returned rather than just the first.
    pub fn bind_signature(&mut self, signature: Signature) -> Vec<SchemaViolation> {
        let mut found = Vec::new();
        for o in &self.objects {
            let mut push = |error| {
                found.push(SchemaViolation { entity: "object", id: o.id.clone(), error })
            };
            if !signature.object_types().contains(&o.otype) {
                push(StoreError::UnknownObjectType(o.otype.clone()));
            }
            for (k, v) in &o.attrs {
                if let Err(name) = signature.check_attr(k, v) {
                    push(StoreError::InvalidAttribute(name));
                }
            }
        }
        for e in &self.events {
            let mut push =
                |error| found.push(SchemaViolation { entity: "event", id: e.id.clone(), error });
            if !signature.event_types().contains(&e.etype) {
                push(StoreError::UnknownEventType(e.etype.clone()));
            }
            if let Timestamp::Tick(t) = e.time {
                if t > signature.max_time() {
                    push(StoreError::TimeOutOfHorizon { time: t, max_time: signature.max_time() });
                }
            }
            if e.observed.len() > signature.max_observes() {
                push(StoreError::MaxObservesExceeded {
                    count: e.observed.len(),
                    cap: signature.max_observes(),
                });
            }
            for (k, v) in &e.attrs {
                if let Err(name) = signature.check_attr(k, v) {
                    push(StoreError::InvalidAttribute(name));
                }
            }
        }
        for r in &self.relations {
            let mut push = |error| {
                found.push(SchemaViolation { entity: "relation", id: r.seq.to_string(), error })
            };
            if !signature.relation_types().contains(&r.rtype) {
                push(StoreError::UnknownRelationType(r.rtype.clone()));
            }
            if r.source == r.target && !signature.is_reflexive(&r.rtype) {
                push(StoreError::SelfLoopRejected(r.rtype.clone()));
            }
        }
        self.signature = Some(signature);
        found
    }

    pub fn unbind_signature(&mut self) -> Option<Signature> {
        self.signature.take()
    }

    pub fn time_mode(&self) -> Option<TimeMode> {
        self.time_mode
    }

    pub fn objects(&self) -> &[OcedObject] {
        &self.objects
    }

    /// Events in insertion order.
    pub fn events(&self) -> &[OcedEvent] {
        &self.events
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn object(&self, id: &str) -> Option<&OcedObject> {
        self.object_index.get(id).map(|&i| &self.objects[i])
    }

    pub fn event(&self, id: &str) -> Option<&OcedEvent> {
        self.event_index.get(id).map(|&i| &self.events[i])
    }

    /// Events in the store's total order: time, then insertion sequence.
    pub fn events_in_order(&self) -> impl Iterator<Item = &OcedEvent> + '_ {
        self.order.values().map(|&i| &self.events[i])
    }

    /// Number of occurrences of an identical relation (multiset count).
    pub fn relation_count(&self, rtype: &str, source: &str, target: &str) -> usize {
        self.relations
            .iter()
            .filter(|r| r.rtype == rtype && r.source == source && r.target == target)
            .count()
    }

    fn take_seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    /// Forces the sequence number of the next insertion. Used when replaying
    /// snapshots whose records already carry sequence numbers.
    pub(crate) fn expect_seq(&mut self, seq: u64) -> Result<(), StoreError> {
        if seq <= self.next_seq {
            return Err(StoreError::SeqOutOfOrder { seq, last: self.next_seq });
        }
        self.next_seq = seq - 1;
        Ok(())
    }

    fn check_attrs(&self, attrs: &Attrs) -> Result<(), StoreError> {
        if let Some(sig) = &self.signature {
            for (k, v) in attrs {
                sig.check_attr(k, v).map_err(StoreError::InvalidAttribute)?;
            }
        }
        Ok(())
    }

    fn fresh_id(prefix: char, start: usize, taken: &HashMap<String, usize>) -> String {
        (start..)
            .map(|n| format!("{prefix}{n}"))
            .find(|id| !taken.contains_key(id))
            .expect("unbounded id space")
    }

    /// Adds an object under a fresh id (`o1`, `o2`, ...).
    pub fn add_object(&mut self, otype: &str, attrs: Attrs) -> Result<String, StoreError> {
        let id = Self::fresh_id('o', self.objects.len() + 1, &self.object_index);
        self.insert_object(&id, otype, attrs)?;
        Ok(id)
    }

    /// Adds an object under a caller-chosen id.
    pub fn insert_object(&mut self, id: &str, otype: &str, attrs: Attrs) -> Result<(), StoreError> {
        if self.object_index.contains_key(id) {
            return Err(StoreError::DuplicateObjectId(id.to_string()));
        }
        if let Some(sig) = &self.signature {
            if !sig.object_types().contains(otype) {
                return Err(StoreError::UnknownObjectType(otype.to_string()));
            }
        }
        self.check_attrs(&attrs)?;
        let seq = self.take_seq();
        self.object_index.insert(id.to_string(), self.objects.len());
        self.objects.push(OcedObject { id: id.to_string(), otype: otype.to_string(), attrs, seq });
        self.observers.push(Vec::new());
        Ok(())
    }

    /// Adds an event under a fresh id (`e1`, `e2`, ...).
    pub fn add_event(
        &mut self,
        etype: &str,
        time: Timestamp,
        attrs: Attrs,
        linked: &[&str],
    ) -> Result<String, StoreError> {
        let id = Self::fresh_id('e', self.events.len() + 1, &self.event_index);
        self.insert_event(&id, etype, time, attrs, linked)?;
        Ok(id)
    }

    pub fn insert_event(
        &mut self,
        id: &str,
        etype: &str,
        time: Timestamp,
        attrs: Attrs,
        linked: &[&str],
    ) -> Result<(), StoreError> {
        let mut observed: Vec<String> = Vec::with_capacity(linked.len());
        for &oid in linked {
            if !observed.iter().any(|o| o == oid) {
                observed.push(oid.to_string());
            }
        }
        self.insert_event_checked(id, etype, time, attrs, observed, true)
    }

    /// Insertion used by the bounded search, which must be able to build
    /// stores that break the observation cap in order to find counterexamples.
    pub(crate) fn insert_event_uncapped(
        &mut self,
        id: &str,
        etype: &str,
        time: Timestamp,
        attrs: Attrs,
        observed: Vec<String>,
    ) -> Result<(), StoreError> {
        self.insert_event_checked(id, etype, time, attrs, observed, false)
    }

    fn insert_event_checked(
        &mut self,
        id: &str,
        etype: &str,
        time: Timestamp,
        attrs: Attrs,
        observed: Vec<String>,
        enforce_cap: bool,
    ) -> Result<(), StoreError> {
        if self.event_index.contains_key(id) {
            return Err(StoreError::DuplicateEventId(id.to_string()));
        }
        if let Some(sig) = &self.signature {
            if !sig.event_types().contains(etype) {
                return Err(StoreError::UnknownEventType(etype.to_string()));
            }
            if let Timestamp::Tick(t) = time {
                if t > sig.max_time() {
                    return Err(StoreError::TimeOutOfHorizon { time: t, max_time: sig.max_time() });
                }
            }
        }
        if let Some(mode) = self.time_mode {
            if mode != time.mode() {
                return Err(StoreError::TimeModeMismatch { expected: mode, found: time.mode() });
            }
        }
        let mut object_slots = Vec::with_capacity(observed.len());
        for oid in &observed {
            match self.object_index.get(oid) {
                Some(&i) => object_slots.push(i),
                None => return Err(StoreError::DanglingObjectRef(oid.clone())),
            }
        }
        if enforce_cap {
            if let Some(sig) = &self.signature {
                if observed.len() > sig.max_observes() {
                    return Err(StoreError::MaxObservesExceeded {
                        count: observed.len(),
                        cap: sig.max_observes(),
                    });
                }
            }
        }
        self.check_attrs(&attrs)?;

        let seq = self.take_seq();
        let index = self.events.len();
        for slot in object_slots {
            self.observers[slot].push(index);
        }
        self.time_mode = Some(time.mode());
        self.event_index.insert(id.to_string(), index);
        self.order.insert((time, seq), index);
        self.events.push(OcedEvent {
            id: id.to_string(),
            etype: etype.to_string(),
            time,
            attrs,
            observed,
            seq,
        });
        Ok(())
    }

    /// Removes the most recently inserted event.
    pub(crate) fn pop_event(&mut self) -> Option<OcedEvent> {
        let event = self.events.pop()?;
        let index = self.events.len();
        self.event_index.remove(&event.id);
        self.order.remove(&(event.time, event.seq));
        for oid in &event.observed {
            let slot = self.object_index[oid];
            debug_assert_eq!(self.observers[slot].last(), Some(&index));
            self.observers[slot].pop();
        }
        if self.events.is_empty() {
            self.time_mode = None;
        }
        self.next_seq = event.seq - 1;
        Some(event)
    }

    pub fn add_relation(&mut self, rtype: &str, source: &str, target: &str) -> Result<(), StoreError> {
        let reflexive = match &self.signature {
            Some(sig) => {
                if !sig.relation_types().contains(rtype) {
                    return Err(StoreError::UnknownRelationType(rtype.to_string()));
                }
                sig.is_reflexive(rtype)
            }
            None => false,
        };
        for end in [source, target] {
            if !self.object_index.contains_key(end) {
                return Err(StoreError::DanglingObjectRef(end.to_string()));
            }
        }
        if source == target && !reflexive {
            return Err(StoreError::SelfLoopRejected(rtype.to_string()));
        }
        let seq = self.take_seq();
        self.relations.push(Relation {
            rtype: rtype.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            seq,
        });
        Ok(())
    }

    /// All events observing `oid`, in (time, sequence) order.
    pub fn object_trace(&self, oid: &str) -> Result<Vec<&OcedEvent>, StoreError> {
        let slot = *self
            .object_index
            .get(oid)
            .ok_or_else(|| StoreError::DanglingObjectRef(oid.to_string()))?;
        let mut trace: Vec<&OcedEvent> = self.observers[slot].iter().map(|&i| &self.events[i]).collect();
        trace.sort_by_key(|e| (e.time, e.seq));
        Ok(trace)
    }
}
