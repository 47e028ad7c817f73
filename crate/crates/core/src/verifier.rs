//! Bounded instance finding and assertion checking over a [`Signature`].
//!
//! The search is a depth-first enumeration of small stores in tick mode:
//! first a multiset of typed objects, then a sequence of events with
//! nondecreasing ticks, each with an event type, an observation set and
//! values for the attributes that facts or the assertion read. Candidates
//! are visited in a canonical order (fewer events, then fewer objects, then
//! lexicographic), so the first hit is the smallest instance. Verdicts are bounded: `Valid`
//! means no counterexample exists within the scope.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant as WallClock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{
    check_store, parse_constraints, structural_offenders, Body, CheckError, Constraint, Formula,
    Scope as RuleScope, Sense,
};
use crate::signature::{Domain, Signature};
use crate::store::{Attrs, OcedEvent, OcedStore, ACTIVITY_ATTR, TIMESTAMP_ATTR};
use crate::value::{Timestamp, Value};

/// Name of the builtin observation-cap assertion.
pub const MAX_OBSERVE_PROPERTY: &str = "MaxObserveProperty";

/// Per-sort upper bounds ("up to", not "exactly").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scope {
    pub max_objects: usize,
    pub max_events: usize,
}

impl Scope {
    pub fn new(max_objects: usize, max_events: usize) -> Result<Self, VerifyError> {
        if max_objects == 0 || max_events == 0 {
            return Err(VerifyError::ZeroScope);
        }
        Ok(Scope { max_objects, max_events })
    }

    /// The same bound for objects and events.
    pub fn uniform(n: usize) -> Result<Self, VerifyError> {
        Self::new(n, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Upper limit on the estimated number of search nodes.
    pub node_ceiling: u64,
    /// Explore object configurations on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { node_ceiling: 1_000_000_000, parallel: true }
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("scope bounds must be at least 1")]
    ZeroScope,
    #[error("scope too large: about {estimated:.3e} search nodes, ceiling is {ceiling}")]
    ScopeTooLarge { estimated: f64, ceiling: u64 },
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("constraint `{constraint}` reads undeclared attribute `{attr}`")]
    UnknownAttribute { constraint: String, attr: String },
    #[error("constraint `{constraint}` reads attribute `{attr}`, whose domain is open")]
    OpenDomain { constraint: String, attr: String },
    #[error("internal error: witness failed re-validation: {0}")]
    WitnessRejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerdictKind {
    Valid,
    Counterexample(OcedStore),
    InstanceFound(OcedStore),
    Unsat,
}

impl VerdictKind {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictKind::Valid => "Valid",
            VerdictKind::Counterexample(_) => "Counterexample",
            VerdictKind::InstanceFound(_) => "InstanceFound",
            VerdictKind::Unsat => "Unsat",
        }
    }

    pub fn instance(&self) -> Option<&OcedStore> {
        match self {
            VerdictKind::Counterexample(s) | VerdictKind::InstanceFound(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchStats {
    /// Candidate stores judged against the facts.
    pub candidates: u64,
    /// Subtrees cut because a fact was violated for good.
    pub pruned: u64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub stats: SearchStats,
}

/// The store-construction constraints enforced by the builder operations.
pub fn builder_facts() -> Vec<Constraint> {
    parse_constraints(
        "structural builder_max_observes on store: max-observes\n\
         structural builder_referential_integrity on store: referential-integrity\n\
         structural builder_attribute_domain on store: attribute-domain\n",
    )
    .expect("builtin facts parse")
}

/// Every event observes at most `max_observes` objects.
pub fn max_observe_property() -> Constraint {
    parse_constraints(&format!("structural {MAX_OBSERVE_PROPERTY} on store: max-observes"))
        .expect("builtin assertion parses")
        .remove(0)
}

pub fn find_instance(sig: &Signature, facts: &[Constraint], scope: Scope) -> Result<Verdict, VerifyError> {
    find_instance_with(sig, facts, scope, &SearchConfig::default())
}

pub fn find_instance_with(
    sig: &Signature,
    facts: &[Constraint],
    scope: Scope,
    config: &SearchConfig,
) -> Result<Verdict, VerifyError> {
    let (found, stats) = run(sig, facts, None, scope, config)?;
    let kind = match found {
        Some(store) => {
            revalidate(&store, facts, None)?;
            VerdictKind::InstanceFound(store)
        }
        None => VerdictKind::Unsat,
    };
    Ok(Verdict { kind, stats })
}

pub fn check_assertion(
    sig: &Signature,
    facts: &[Constraint],
    assertion: &Constraint,
    scope: Scope,
) -> Result<Verdict, VerifyError> {
    check_assertion_with(sig, facts, assertion, scope, &SearchConfig::default())
}

pub fn check_assertion_with(
    sig: &Signature,
    facts: &[Constraint],
    assertion: &Constraint,
    scope: Scope,
    config: &SearchConfig,
) -> Result<Verdict, VerifyError> {
    let (found, stats) = run(sig, facts, Some(assertion), scope, config)?;
    let kind = match found {
        Some(store) => {
            revalidate(&store, facts, Some(assertion))?;
            VerdictKind::Counterexample(store)
        }
        None => VerdictKind::Valid,
    };
    Ok(Verdict { kind, stats })
}

fn revalidate(store: &OcedStore, facts: &[Constraint], assertion: Option<&Constraint>) -> Result<(), VerifyError> {
    let report = check_store(store, facts)?;
    if let Some(v) = report.violations.first() {
        return Err(VerifyError::WitnessRejected(v.message.clone()));
    }
    if let Some(a) = assertion {
        if check_store(store, std::slice::from_ref(a))?.is_clean() {
            return Err(VerifyError::WitnessRejected(format!("assertion `{}` holds", a.name)));
        }
    }
    Ok(())
}

/// True when a violation of `c` on a prefix survives every extension that
/// only appends events.
fn violation_is_permanent(c: &Constraint) -> bool {
    fn globally_state(f: &Formula) -> bool {
        match f {
            Formula::Globally(g) => !g.is_temporal(),
            Formula::And(a, b) => globally_state(a) && globally_state(b),
            _ => false,
        }
    }
    match &c.body {
        Body::Structural(_) => true,
        Body::Count(cb) => cb.sense == Sense::AtMost,
        Body::Ltlf(f) => globally_state(f),
    }
}

fn holds(c: &Constraint, store: &OcedStore) -> bool {
    match (&c.body, &c.scope) {
        (Body::Structural(kind), _) => structural_offenders(*kind, store).is_empty(),
        (_, RuleScope::Store) => {
            let trace: Vec<&OcedEvent> = store.events_in_order().collect();
            c.holds_on_trace(&trace)
        }
        (_, RuleScope::ObjectType(t)) => store
            .objects()
            .iter()
            .filter(|o| &o.otype == t)
            .all(|o| c.holds_on_trace(&store.object_trace(&o.id).expect("listed object"))),
    }
}

/// Like [`holds`], but only re-examines what the last event can have broken.
fn holds_after_push(c: &Constraint, store: &OcedStore, last: &OcedEvent) -> bool {
    match (&c.body, &c.scope) {
        (_, RuleScope::ObjectType(t)) if !matches!(c.body, Body::Structural(_)) => {
            last.observed.iter().all(|oid| {
                store.object(oid).is_none_or(|o| &o.otype != t)
                    || c.holds_on_trace(&store.object_trace(oid).expect("observed object"))
            })
        }
        _ => holds(c, store),
    }
}

struct Space<'a> {
    sig: &'a Signature,
    facts: &'a [Constraint],
    permanent: Vec<&'a Constraint>,
    assertion: Option<&'a Constraint>,
    scope: Scope,
    object_types: Vec<String>,
    event_types: Vec<String>,
    /// Attributes enumerated per event, with their candidate values.
    varied: Vec<(String, Vec<Value>)>,
    /// Attributes every event carries with a fixed value.
    fixed: Attrs,
    candidates: AtomicU64,
    pruned: AtomicU64,
}

fn run(
    sig: &Signature,
    facts: &[Constraint],
    assertion: Option<&Constraint>,
    scope: Scope,
    config: &SearchConfig,
) -> Result<(Option<OcedStore>, SearchStats), VerifyError> {
    let started = WallClock::now();
    let mut mentioned: Vec<(String, String)> = Vec::new();
    for c in facts.iter().chain(assertion) {
        if let RuleScope::ObjectType(t) = &c.scope {
            if !sig.object_types().contains(t) {
                return Err(CheckError::UnknownObjectTypeInScope {
                    constraint: c.name.clone(),
                    otype: t.clone(),
                }
                .into());
            }
        }
        for attr in c.mentioned_attrs() {
            mentioned.push((c.name.clone(), attr));
        }
    }

    let mut varied: Vec<(String, Vec<Value>)> = Vec::new();
    for (constraint, attr) in mentioned {
        if varied.iter().any(|(a, _)| *a == attr) {
            continue;
        }
        match sig.attributes().get(&attr) {
            Some(Domain::Finite(values)) => varied.push((attr, values.clone())),
            Some(Domain::Open) => return Err(VerifyError::OpenDomain { constraint, attr }),
            None if attr == ACTIVITY_ATTR || attr == TIMESTAMP_ATTR => {}
            None => return Err(VerifyError::UnknownAttribute { constraint, attr }),
        }
    }
    varied.sort_by(|a, b| a.0.cmp(&b.0));
    let fixed: Attrs = sig
        .attributes()
        .iter()
        .filter(|(name, _)| !varied.iter().any(|(v, _)| v == *name))
        .filter_map(|(name, domain)| match domain {
            Domain::Finite(values) => Some((name.clone(), values[0].clone())),
            Domain::Open => None,
        })
        .collect();

    let space = Space {
        sig,
        facts,
        permanent: facts.iter().filter(|c| violation_is_permanent(c)).collect(),
        assertion,
        scope,
        object_types: sig.object_types().iter().cloned().collect(),
        event_types: sig.event_types().iter().cloned().collect(),
        varied,
        fixed,
        candidates: AtomicU64::new(0),
        pruned: AtomicU64::new(0),
    };

    let configs = space.object_configs();
    let estimated = space.estimate(&configs);
    if estimated > config.node_ceiling as f64 {
        return Err(VerifyError::ScopeTooLarge { estimated, ceiling: config.node_ceiling });
    }

    let mut found = None;
    for events in 0..=scope.max_events {
        found = if config.parallel {
            configs.par_iter().find_map_first(|types| space.search(types, events))
        } else {
            configs.iter().find_map(|types| space.search(types, events))
        };
        if found.is_some() {
            break;
        }
    }
    let stats = SearchStats {
        candidates: space.candidates.load(Ordering::Relaxed),
        pruned: space.pruned.load(Ordering::Relaxed),
        wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok((found, stats))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Space<'_> {
    /// Nondecreasing sequences of object-type indices, shortest first.
    fn object_configs(&self) -> Vec<Vec<usize>> {
        fn walk(prefix: &mut Vec<usize>, min: usize, types: usize, max: usize, out: &mut Vec<Vec<usize>>) {
            out.push(prefix.clone());
            if prefix.len() == max {
                return;
            }
            for t in min..types {
                prefix.push(t);
                walk(prefix, t, types, max, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&mut Vec::new(), 0, self.object_types.len(), self.scope.max_objects, &mut out);
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    /// Node count without pruning or symmetry breaking.
    fn estimate(&self, configs: &[Vec<usize>]) -> f64 {
        let attr_choices: f64 = self.varied.iter().map(|(_, v)| v.len() as f64).product();
        let ticks = self.sig.max_time() + 1;
        configs
            .iter()
            .map(|types| {
                let per_event =
                    self.event_types.len() as f64 * 2f64.powi(types.len() as i32) * attr_choices;
                (0..=self.scope.max_events as u64)
                    .map(|m| binomial(ticks + m - 1, m) * per_event.powi(m as i32))
                    .sum::<f64>()
            })
            .sum()
    }

    fn search(&self, types: &Vec<usize>, events: usize) -> Option<OcedStore> {
        let mut store = OcedStore::with_signature(self.sig.clone());
        for (i, &t) in types.iter().enumerate() {
            store
                .insert_object(&format!("o{}", i + 1), &self.object_types[t], Attrs::new())
                .expect("declared object type");
        }
        // Objects of one type occupy a contiguous index range.
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        for (i, &t) in types.iter().enumerate() {
            match ranges.last_mut() {
                Some(r) if types[r.0] == t => r.1 = i + 1,
                _ => ranges.push((i, i + 1)),
            }
        }
        let subsets = subsets_in_order(types.len());
        let attr_combos = self.attr_combos();
        let used = vec![0usize; ranges.len()];
        let walk = Walk { space: self, ranges, subsets, attr_combos };
        if walk.dfs(&mut store, 0, &used, events) {
            Some(store)
        } else {
            None
        }
    }

    fn attr_combos(&self) -> Vec<Attrs> {
        let mut combos = vec![self.fixed.clone()];
        for (name, values) in &self.varied {
            combos = combos
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut a = base.clone();
                        a.insert(name.clone(), v.clone());
                        a
                    })
                })
                .collect();
        }
        combos
    }

    fn accepts(&self, store: &OcedStore) -> bool {
        self.facts.iter().all(|c| holds(c, store)) && self.assertion.is_none_or(|a| !holds(a, store))
    }
}

/// Index subsets of `0..n` as sorted lists in lexicographic order, where a
/// list precedes its extensions.
fn subsets_in_order(n: usize) -> Vec<Vec<usize>> {
    fn walk(prefix: &mut Vec<usize>, from: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        out.push(prefix.clone());
        for i in from..n {
            prefix.push(i);
            walk(prefix, i + 1, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(&mut Vec::new(), 0, n, &mut out);
    out
}

struct Walk<'a> {
    space: &'a Space<'a>,
    ranges: Vec<(usize, usize)>,
    subsets: Vec<Vec<usize>>,
    attr_combos: Vec<Attrs>,
}

impl Walk<'_> {
    /// New objects of each type must be the lowest unused indices. Returns
    /// the updated usage counts, or `None` when the subset breaks symmetry.
    fn admit(&self, subset: &[usize], used: &[usize]) -> Option<Vec<usize>> {
        let mut next = used.to_vec();
        for (r, &(lo, hi)) in self.ranges.iter().enumerate() {
            for &i in subset.iter().filter(|&&i| i >= lo && i < hi) {
                let first_unused = lo + next[r];
                if i == first_unused {
                    next[r] += 1;
                } else if i > first_unused {
                    return None;
                }
            }
        }
        Some(next)
    }

    /// Searches stores with exactly `target` events extending `store`.
    fn dfs(&self, store: &mut OcedStore, min_tick: u64, used: &[usize], target: usize) -> bool {
        let space = self.space;
        let depth = store.events().len();
        if depth == target {
            space.candidates.fetch_add(1, Ordering::Relaxed);
            return space.accepts(store);
        }
        let id = format!("e{}", depth + 1);
        for tick in min_tick..=space.sig.max_time() {
            for etype in &space.event_types {
                for s in 0..self.subsets.len() {
                    let Some(next_used) = self.admit(&self.subsets[s], used) else {
                        continue;
                    };
                    let observed: Vec<String> =
                        self.subsets[s].iter().map(|i| format!("o{}", i + 1)).collect();
                    for a in 0..self.attr_combos.len() {
                        store
                            .insert_event_uncapped(
                                &id,
                                etype,
                                Timestamp::Tick(tick),
                                self.attr_combos[a].clone(),
                                observed.clone(),
                            )
                            .expect("enumerated event fits the signature");
                        let last = store.events().last().expect("just inserted");
                        if space.permanent.iter().any(|c| !holds_after_push(c, store, last)) {
                            space.pruned.fetch_add(1, Ordering::Relaxed);
                        } else if self.dfs(store, tick, &next_used, target) {
                            return true;
                        }
                        store.pop_event();
                    }
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn sig(event_types: &[&str], object_types: &[&str], max_time: u64, max_observes: usize) -> Signature {
        Signature::new(
            event_types.iter().copied(),
            object_types.iter().copied(),
            BTreeMap::from([("flag".to_string(), Domain::Finite(vec![Value::Bool(false), Value::Bool(true)]))]),
            Vec::<&str>::new(),
            max_time,
            max_observes,
        )
        .unwrap()
    }

    #[test]
    fn zero_scope_rejected() {
        assert!(matches!(Scope::uniform(0), Err(VerifyError::ZeroScope)));
    }

    #[test]
    fn no_facts_gives_empty_instance() {
        let v = find_instance(&sig(&["a"], &["t"], 0, 1), &[], Scope::uniform(1).unwrap()).unwrap();
        match v.kind {
            VerdictKind::InstanceFound(s) => {
                assert!(s.objects().is_empty() && s.events().is_empty())
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contradictory_observation_bounds_are_unsat() {
        let mut facts = builder_facts();
        facts.extend(
            parse_constraints(
                "structural every_event_wide on store: count(observed < 2) <= 0\n\
                 structural some_event on store: count(true) >= 1\n",
            )
            .unwrap(),
        );
        for n in 1..=3 {
            let v = find_instance(&sig(&["a"], &["t"], 1, 1), &facts, Scope::uniform(n).unwrap()).unwrap();
            assert_eq!(v.kind, VerdictKind::Unsat, "scope {n}");
        }
    }

    #[test]
    fn max_observe_property_holds_with_builder_facts() {
        let s = sig(&["a", "b"], &["t", "u"], 2, 2);
        let v = check_assertion(&s, &builder_facts(), &max_observe_property(), Scope::uniform(3).unwrap())
            .unwrap();
        assert_eq!(v.kind, VerdictKind::Valid);
        assert!(v.stats.pruned > 0);
    }

    #[test]
    fn max_observe_counterexample_without_builder_facts() {
        let s = sig(&["a"], &["t"], 1, 1);
        let v = check_assertion(&s, &[], &max_observe_property(), Scope::uniform(2).unwrap()).unwrap();
        let store = v.kind.instance().expect("counterexample").clone();
        assert_eq!(store.objects().len(), 2);
        assert_eq!(store.events().len(), 1);
        assert_eq!(store.events()[0].observed, ["o1", "o2"]);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let s = sig(&["a", "b"], &["t", "u"], 1, 2);
        let facts = parse_constraints(
            "liveness l on t: F etype = \"b\"\nsafety s on u: G attr(\"flag\") = true\nstructural w on store: count(true) >= 2",
        )
        .unwrap();
        let scope = Scope::uniform(2).unwrap();
        let par = find_instance_with(&s, &facts, scope, &SearchConfig::default()).unwrap();
        let seq = find_instance_with(&s, &facts, scope, &SearchConfig { parallel: false, ..Default::default() })
            .unwrap();
        assert_eq!(par.kind, seq.kind);
        assert!(matches!(par.kind, VerdictKind::InstanceFound(_)));
    }

    #[test]
    fn ceiling_is_enforced() {
        let s = sig(&["a", "b", "c"], &["t", "u"], 5, 2);
        let tight = SearchConfig { node_ceiling: 1000, parallel: false };
        assert!(matches!(
            find_instance_with(&s, &[], Scope::uniform(3).unwrap(), &tight),
            Err(VerifyError::ScopeTooLarge { .. })
        ));
    }

    #[test]
    fn open_domain_attributes_cannot_be_enumerated() {
        let s = Signature::new(
            ["a"],
            ["t"],
            BTreeMap::from([("note".to_string(), Domain::Open)]),
            Vec::<&str>::new(),
            1,
            1,
        )
        .unwrap();
        let facts = parse_constraints("safety s on t: G has(\"note\")").unwrap();
        assert!(matches!(
            find_instance(&s, &facts, Scope::uniform(1).unwrap()),
            Err(VerifyError::OpenDomain { .. })
        ));
    }
}
