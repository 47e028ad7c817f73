//! Reference LTLf semantics by direct quantification over suffixes, plus the
//! exhaustive formula and trace corpora.

use foced_core::constraints::{Atom, Formula};

/// Truth of `f` at position `i` of a trace of length `n`, where
/// `atom(a, j)` decides atom `a` at a position `j < n`. Position `n` is the
/// empty suffix. Follows the textbook clauses literally, no memoisation.
pub fn holds(f: &Formula, n: usize, i: usize, atom: &dyn Fn(&Atom, usize) -> bool) -> bool {
    let rec = |g: &Formula, j: usize| holds(g, n, j, atom);
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => i < n && atom(a, i),
        Formula::Not(g) => !rec(g, i),
        Formula::And(a, b) => rec(a, i) && rec(b, i),
        Formula::Or(a, b) => rec(a, i) || rec(b, i),
        Formula::Implies(a, b) => !rec(a, i) || rec(b, i),
        Formula::Next(g) => i + 1 < n && rec(g, i + 1),
        Formula::WeakNext(g) => i + 1 >= n || rec(g, i + 1),
        Formula::Eventually(g) => (i..n).any(|j| rec(g, j)),
        Formula::Globally(g) => (i..n).all(|j| rec(g, j)),
        Formula::Until(a, b) => (i..n).any(|k| rec(b, k) && (i..k).all(|j| rec(a, j))),
    }
}

/// Atom evaluator for traces given as plain event-type names. Only
/// `etype = "x"` and `etype != "x"` atoms are understood.
pub fn etype_atoms<'a>(trace: &'a [&'a str]) -> impl Fn(&Atom, usize) -> bool + 'a {
    use foced_core::constraints::{CmpOp, Field};
    use foced_core::Value;
    move |a, j| match a {
        Atom::Compare { field: Field::EventType, op, value: Value::Str(s) } => match op {
            CmpOp::Eq => trace[j] == s,
            CmpOp::Ne => trace[j] != s,
            _ => panic!("ordering atom in an etype-only formula"),
        },
        other => panic!("unsupported atom {other:?}"),
    }
}

/// Every formula up to `depth` built from `atoms` with the unary operators
/// ¬ X WX F G and the binary operators ∧ ∨ → U. Atoms count as depth 1.
pub fn corpus(atoms: &[Formula], depth: usize) -> Vec<Formula> {
    // levels[d] holds the formulas of depth exactly d + 1.
    let mut levels: Vec<Vec<Formula>> = Vec::new();
    if depth == 0 {
        return Vec::new();
    }
    levels.push(atoms.to_vec());
    for d in 1..depth {
        let below: Vec<&Formula> = levels.iter().flatten().collect();
        let top = &levels[d - 1];
        let mut next = Vec::new();
        for f in top {
            next.push(Formula::not(f.clone()));
            next.push(Formula::next(f.clone()));
            next.push(Formula::weak_next(f.clone()));
            next.push(Formula::eventually(f.clone()));
            next.push(Formula::globally(f.clone()));
        }
        // Binary nodes: at least one child from the top level.
        for a in &below {
            for b in &below {
                let a_top = top.contains(a);
                let b_top = top.contains(b);
                if !(a_top || b_top) {
                    continue;
                }
                let (a, b) = ((*a).clone(), (*b).clone());
                next.push(Formula::and(a.clone(), b.clone()));
                next.push(Formula::or(a.clone(), b.clone()));
                next.push(Formula::implies(a.clone(), b.clone()));
                next.push(Formula::until(a, b));
            }
        }
        levels.push(next);
    }
    levels.into_iter().flatten().collect()
}

/// All words over `alphabet` of length at most `max_len`, shortest first.
pub fn traces<'a>(alphabet: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut grown = Vec::new();
        for w in &frontier {
            for &c in alphabet {
                let mut v = w.clone();
                v.push(c);
                grown.push(v);
            }
        }
        out.extend(grown.iter().cloned());
        frontier = grown;
    }
    out
}
