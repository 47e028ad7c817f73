//! A hand-built incident trace that satisfies the builtin pack, and single
//! mutations of it that each break exactly one rule. Expected rule names and
//! witness positions were worked out by hand from the rule texts.

use chrono::{Duration, TimeZone, Utc};
use foced_core::{Attrs, OcedStore, Timestamp, Value};

#[derive(Debug, Clone)]
pub struct Step {
    pub activity: &'static str,
    pub lifecycle: &'static str,
    pub attrs: Vec<(&'static str, &'static str)>,
}

fn step(activity: &'static str, lifecycle: &'static str) -> Step {
    Step { activity, lifecycle, attrs: Vec::new() }
}

pub const CASE_ID: &str = "INC-1";

/// Accepted, an operator update, three escalations, resolution, closure.
pub fn compliant() -> Vec<Step> {
    let mut first = step("Accepted", "In Progress");
    first.attrs = vec![("priority", "medium"), ("impact", "medium"), ("urgency", "medium")];
    vec![
        first,
        step("Operator Update", "In Progress"),
        step("Escalate", "In Progress"),
        step("Escalate", "In Progress"),
        step("Escalate", "In Progress"),
        step("Status Change", "Resolved"),
        step("Completed", "Closed"),
    ]
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub description: &'static str,
    pub steps: Vec<Step>,
    /// The one rule expected to fail.
    pub rule: &'static str,
    pub positions: Vec<usize>,
}

pub fn mutations() -> Vec<Mutation> {
    let mut no_close = compliant();
    no_close.pop();

    let mut extra_escalation = compliant();
    extra_escalation.insert(5, step("Escalate", "In Progress"));

    let mut status_first = compliant();
    let status = status_first.remove(5);
    status_first.insert(1, status);

    let mut incoherent = compliant();
    incoherent[0].attrs = vec![("priority", "high"), ("impact", "low"), ("urgency", "high")];

    vec![
        Mutation {
            description: "closing event removed",
            steps: no_close,
            rule: "eventually_closed",
            positions: (0..6).collect(),
        },
        Mutation {
            description: "fourth escalation before resolution",
            steps: extra_escalation,
            rule: "escalation_cap",
            positions: vec![5],
        },
        Mutation {
            description: "status change before any operator update",
            steps: status_first,
            rule: "update_before_status",
            positions: vec![1],
        },
        Mutation {
            description: "priority high with impact low",
            steps: incoherent,
            rule: "priority_coherence",
            positions: vec![0],
        },
    ]
}

/// One `case` object and one event per step, a minute apart.
pub fn build(steps: &[Step]) -> OcedStore {
    let mut store = OcedStore::new();
    store.insert_object(CASE_ID, "case", Attrs::new()).unwrap();
    let start = Utc.with_ymd_and_hms(2013, 3, 31, 9, 0, 0).unwrap();
    for (i, s) in steps.iter().enumerate() {
        let mut attrs: Attrs = s.attrs.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect();
        attrs.insert("lifecycle".into(), Value::from(s.lifecycle));
        let time = Timestamp::Instant(start + Duration::minutes(i as i64));
        store.insert_event(&format!("ev{i}"), s.activity, time, attrs, &[CASE_ID]).unwrap();
    }
    store
}
