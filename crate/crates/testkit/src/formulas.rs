//! Random formulas over the small vocabulary of [`crate::gen::tick_store`],
//! and an atom evaluator for that vocabulary written from scratch.

use foced_core::constraints::{Atom, CmpOp, Field, Formula};
use foced_core::{OcedEvent, Value};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_atom<R: Rng>(rng: &mut R) -> Formula {
    match rng.gen_range(0..6) {
        0..=1 => Formula::etype_is(["a", "b", "c"].choose(rng).unwrap()),
        2 => {
            let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).copied().unwrap();
            Formula::attr("level", op, Value::Int(rng.gen_range(0..4)))
        }
        3 => Formula::attr("lifecycle", CmpOp::Eq, Value::from(*["Open", "Closed"].choose(rng).unwrap())),
        4 => Formula::atom(Atom::Present("level".into())),
        _ => Formula::atom(Atom::Compare {
            field: Field::Observed,
            op: [CmpOp::Eq, CmpOp::Ge].choose(rng).copied().unwrap(),
            value: Value::Int(rng.gen_range(0..3)),
        }),
    }
}

/// A non-temporal formula of at most `depth` connective levels.
pub fn random_state<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.4) {
        return random_atom(rng);
    }
    let sub = |rng: &mut R| random_state(rng, depth - 1);
    match rng.gen_range(0..4) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        _ => Formula::implies(sub(rng), sub(rng)),
    }
}

/// Any formula of at most `depth` operator levels.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => random_atom(rng),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 => Formula::weak_next(sub(rng)),
        6 => Formula::eventually(sub(rng)),
        7 => Formula::globally(sub(rng)),
        _ => Formula::until(sub(rng), sub(rng)),
    }
}

fn compare_int(actual: i64, op: CmpOp, expected: i64) -> bool {
    match op {
        CmpOp::Eq => actual == expected,
        CmpOp::Ne => actual != expected,
        CmpOp::Lt => actual < expected,
        CmpOp::Le => actual <= expected,
        CmpOp::Gt => actual > expected,
        CmpOp::Ge => actual >= expected,
    }
}

/// Decides the atoms [`random_atom`] produces. Missing attributes make
/// every comparison false.
pub fn eval_atom(atom: &Atom, e: &OcedEvent) -> bool {
    match atom {
        Atom::Present(name) => e.attrs.contains_key(name),
        Atom::Compare { field: Field::EventType, op, value: Value::Str(s) } => match op {
            CmpOp::Eq => &e.etype == s,
            CmpOp::Ne => &e.etype != s,
            _ => panic!("ordered etype comparison"),
        },
        Atom::Compare { field: Field::Observed, op, value: Value::Int(n) } => {
            compare_int(e.observed.len() as i64, *op, *n)
        }
        Atom::Compare { field: Field::Attr(name), op, value } => match (e.attrs.get(name), value) {
            (Some(Value::Int(a)), Value::Int(b)) => compare_int(*a, *op, *b),
            (Some(Value::Str(a)), Value::Str(b)) => match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                _ => panic!("ordered string comparison"),
            },
            (None, _) => false,
            (Some(a), b) => panic!("unexpected comparison {a:?} vs {b:?}"),
        },
        other => panic!("atom outside the test vocabulary: {other:?}"),
    }
}

/// Events observing `oid`, ordered by time then insertion.
pub fn trace_of<'a>(events: &'a [OcedEvent], oid: &str) -> Vec<&'a OcedEvent> {
    let mut t: Vec<(usize, &OcedEvent)> =
        events.iter().enumerate().filter(|(_, e)| e.observed.iter().any(|o| o == oid)).collect();
    t.sort_by(|(i, a), (j, b)| {
        let ka = match a.time {
            foced_core::Timestamp::Tick(n) => n,
            _ => panic!("tick stores only"),
        };
        let kb = match b.time {
            foced_core::Timestamp::Tick(n) => n,
            _ => panic!("tick stores only"),
        };
        ka.cmp(&kb).then(i.cmp(j))
    });
    t.into_iter().map(|(_, e)| e).collect()
}
