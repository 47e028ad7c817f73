use super::formula::Formula;
use super::{CountBound, Sense};
use crate::store::OcedEvent;

/// Truth value of `f` at every position `0..=trace.len()`; the last entry is
/// the empty suffix.
pub fn ltlf_table(f: &Formula, trace: &[&OcedEvent]) -> Vec<bool> {
    let n = trace.len();
    match f {
        Formula::True => vec![true; n + 1],
        Formula::False => vec![false; n + 1],
        Formula::Atom(a) => {
            let mut t: Vec<bool> = trace.iter().map(|e| a.holds(e)).collect();
            t.push(false);
            t
        }
        Formula::Not(g) => ltlf_table(g, trace).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip(ltlf_table(a, trace), ltlf_table(b, trace), |x, y| x && y),
        Formula::Or(a, b) => zip(ltlf_table(a, trace), ltlf_table(b, trace), |x, y| x || y),
        Formula::Implies(a, b) => zip(ltlf_table(a, trace), ltlf_table(b, trace), |x, y| !x || y),
        Formula::Next(g) => {
            let inner = ltlf_table(g, trace);
            (0..=n).map(|i| i + 1 < n && inner[i + 1]).collect()
        }
        Formula::WeakNext(g) => {
            let inner = ltlf_table(g, trace);
            (0..=n).map(|i| i + 1 >= n || inner[i + 1]).collect()
        }
        Formula::Eventually(g) => {
            let inner = ltlf_table(g, trace);
            let mut t = vec![false; n + 1];
            for i in (0..n).rev() {
                t[i] = inner[i] || t[i + 1];
            }
            t
        }
        Formula::Globally(g) => {
            let inner = ltlf_table(g, trace);
            let mut t = vec![true; n + 1];
            for i in (0..n).rev() {
                t[i] = inner[i] && t[i + 1];
            }
            t
        }
        Formula::Until(a, b) => {
            let lhs = ltlf_table(a, trace);
            let rhs = ltlf_table(b, trace);
            let mut t = vec![false; n + 1];
            for i in (0..n).rev() {
                t[i] = rhs[i] || (lhs[i] && t[i + 1]);
            }
            t
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Finite-trace semantics of `f` at `pos`, where `pos == trace.len()` is
/// the empty suffix.
///
/// # Panics
/// If `pos > trace.len()`.
pub fn eval_ltlf(f: &Formula, trace: &[&OcedEvent], pos: usize) -> bool {
    assert!(pos <= trace.len(), "position {pos} beyond trace of length {}", trace.len());
    ltlf_table(f, trace)[pos]
}

fn cut(cb: &CountBound, trace: &[&OcedEvent]) -> usize {
    cb.delimiter
        .as_ref()
        .and_then(|q| trace.iter().position(|e| q.holds_on(e)))
        .unwrap_or(trace.len())
}

pub fn eval_count_bound(cb: &CountBound, trace: &[&OcedEvent]) -> bool {
    let count = trace[..cut(cb, trace)].iter().filter(|e| cb.counted.holds_on(e)).count() as u64;
    match cb.sense {
        Sense::AtMost => count <= cb.bound,
        Sense::AtLeast => count >= cb.bound,
    }
}

/// Positions of a failing count bound: the first counted event over the
/// bound for `<=`, otherwise every position before the cut.
pub(crate) fn localize_count(cb: &CountBound, trace: &[&OcedEvent]) -> Vec<usize> {
    let end = cut(cb, trace);
    match cb.sense {
        Sense::AtMost => (0..end)
            .filter(|&i| cb.counted.holds_on(trace[i]))
            .nth(cb.bound as usize)
            .into_iter()
            .collect(),
        Sense::AtLeast => (0..end).collect(),
    }
}

/// Positions explaining why `f` is false at `pos`. A single position when
/// one event is to blame, the whole remaining suffix when the failure is an
/// absence (e.g. `F`).
pub fn localize(f: &Formula, trace: &[&OcedEvent], pos: usize) -> Vec<usize> {
    let n = trace.len();
    let suffix = || (pos..n).collect::<Vec<_>>();
    let here = || if pos < n { vec![pos] } else { Vec::new() };
    if !f.is_temporal() {
        return here();
    }
    match f {
        Formula::And(a, b) => {
            if !eval_ltlf(a, trace, pos) {
                localize(a, trace, pos)
            } else {
                localize(b, trace, pos)
            }
        }
        Formula::Implies(a, b) => {
            if a.is_temporal() {
                localize(b, trace, pos)
            } else {
                here()
            }
        }
        Formula::Globally(g) => {
            let table = ltlf_table(g, trace);
            match (pos..n).find(|&i| !table[i]) {
                Some(i) => localize(g, trace, i),
                None => suffix(),
            }
        }
        Formula::Next(g) | Formula::WeakNext(g) if pos + 1 < n => localize(g, trace, pos + 1),
        Formula::Not(g) => match g.as_ref() {
            Formula::Not(h) => localize(h, trace, pos),
            Formula::Until(_, h) | Formula::Eventually(h) => {
                let table = ltlf_table(h, trace);
                match (pos..n).find(|&i| table[i]) {
                    Some(i) => vec![i],
                    None => suffix(),
                }
            }
            Formula::Next(_) if pos + 1 < n => vec![pos + 1],
            _ => suffix(),
        },
        _ => suffix(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::OcedStore;
    use crate::value::Timestamp;

    fn trace_of(types: &[&str]) -> OcedStore {
        let mut s = OcedStore::new();
        for (i, t) in types.iter().enumerate() {
            s.add_event(t, Timestamp::Tick(i as u64), Default::default(), &[]).unwrap();
        }
        s
    }

    fn events(s: &OcedStore) -> Vec<&OcedEvent> {
        s.events_in_order().collect()
    }

    #[test]
    fn globally_true_on_empty_trace() {
        assert!(eval_ltlf(&Formula::globally(Formula::True), &[], 0));
        assert!(!eval_ltlf(&Formula::eventually(Formula::True), &[], 0));
    }

    #[test]
    fn next_at_last_position() {
        let s = trace_of(&["a", "b", "a"]);
        let t = events(&s);
        let a = Formula::etype_is("a");
        assert!(!eval_ltlf(&Formula::next(a.clone()), &t, 2));
        assert!(eval_ltlf(&Formula::weak_next(a.clone()), &t, 2));
        assert!(eval_ltlf(&Formula::next(Formula::etype_is("b")), &t, 0));
    }

    #[test]
    fn empty_suffix() {
        let s = trace_of(&["a"]);
        let t = events(&s);
        let a = Formula::etype_is("a");
        assert!(!eval_ltlf(&a, &t, 1));
        assert!(eval_ltlf(&Formula::not(a.clone()), &t, 1));
        assert!(!eval_ltlf(&Formula::until(Formula::True, a), &t, 1));
    }

    fn count(bound: u64, delim: bool) -> CountBound {
        CountBound {
            counted: Formula::etype_is("E"),
            delimiter: delim.then(|| Formula::etype_is("R")),
            bound,
            sense: Sense::AtMost,
        }
    }

    #[test]
    fn count_bound_examples() {
        let s = trace_of(&["E", "E", "E", "E", "R"]);
        let t = events(&s);
        assert!(!eval_count_bound(&count(3, true), &t));
        assert_eq!(localize_count(&count(3, true), &t), vec![3]);
        assert!(eval_count_bound(&count(4, true), &t));

        let s = trace_of(&["E", "E"]);
        assert!(eval_count_bound(&count(3, true), &events(&s)));
    }

    #[test]
    fn count_stops_at_first_delimiter() {
        let s = trace_of(&["E", "R", "E", "E", "E", "E"]);
        assert!(eval_count_bound(&count(1, true), &events(&s)));
        assert!(!eval_count_bound(&count(1, false), &events(&s)));
    }

    #[test]
    fn localization() {
        let s = trace_of(&["a", "a", "b", "a"]);
        let t = events(&s);
        let g = Formula::globally(Formula::etype_is("a"));
        assert_eq!(localize(&g, &t, 0), vec![2]);
        let f = Formula::eventually(Formula::etype_is("c"));
        assert_eq!(localize(&f, &t, 0), vec![0, 1, 2, 3]);
        let precedes = Formula::not(Formula::until(
            Formula::not(Formula::etype_is("c")),
            Formula::etype_is("b"),
        ));
        assert_eq!(localize(&precedes, &t, 0), vec![2]);
        let both = Formula::and(f.clone(), g.clone());
        assert_eq!(localize(&both, &t, 0), vec![0, 1, 2, 3]);
        let reopen = Formula::globally(Formula::implies(Formula::etype_is("b"), f));
        assert_eq!(localize(&reopen, &t, 0), vec![2]);
    }
}
