use foced_core::constraints::{eval_count_bound, eval_ltlf, ltlf_table, CountBound, Formula, Sense};
use foced_core::{Attrs, OcedEvent, Timestamp, Value};
use foced_testkit::formulas::{eval_atom, random_formula, random_state};
use foced_testkit::ltlf;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn events_named(names: &[&str]) -> Vec<OcedEvent> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| OcedEvent {
            id: format!("e{i}"),
            etype: n.to_string(),
            time: Timestamp::Tick(i as u64),
            attrs: Attrs::new(),
            observed: vec!["o1".into()],
            seq: i as u64 + 2,
        })
        .collect()
}

fn random_events(rng: &mut ChaCha8Rng, len: usize) -> Vec<OcedEvent> {
    (0..len)
        .map(|i| {
            let mut attrs = Attrs::new();
            if rng.gen_bool(0.6) {
                attrs.insert("level".into(), Value::Int(rng.gen_range(0..4)));
            }
            if rng.gen_bool(0.5) {
                attrs.insert("lifecycle".into(), Value::from(if rng.gen() { "Open" } else { "Closed" }));
            }
            let observed = (0..rng.gen_range(0..3)).map(|k| format!("o{k}")).collect();
            OcedEvent {
                id: format!("e{i}"),
                etype: ["a", "b", "c"][rng.gen_range(0..3)].into(),
                time: Timestamp::Tick(i as u64),
                attrs,
                observed,
                seq: i as u64,
            }
        })
        .collect()
}

fn oracle(f: &Formula, trace: &[&OcedEvent], i: usize) -> bool {
    ltlf::holds(f, trace.len(), i, &|a, j| eval_atom(a, trace[j]))
}

#[test]
fn corpus_agrees_with_suffix_semantics() {
    let atoms = [Formula::etype_is("a"), Formula::etype_is("b")];
    let formulas = ltlf::corpus(&atoms, 3);
    let words = ltlf::traces(&["a", "b"], 6);
    assert_eq!(words.len(), 127);
    let traces: Vec<Vec<OcedEvent>> = words.iter().map(|w| events_named(w)).collect();
    let mut pairs = 0;
    for f in &formulas {
        for (w, evs) in words.iter().zip(&traces) {
            let refs: Vec<&OcedEvent> = evs.iter().collect();
            let table = ltlf_table(f, &refs);
            for (i, &got) in table.iter().enumerate() {
                let want = ltlf::holds(f, w.len(), i, &ltlf::etype_atoms(w));
                assert_eq!(got, want, "{f} on {w:?} at {i}");
            }
            pairs += 1;
        }
    }
    assert_eq!(pairs, formulas.len() * 127);
}

#[test]
fn corpus_size_matches_a_direct_count() {
    // d1 = 2 atoms; d2 = 5 unary * 2 + 4 binary * 2 * 2;
    // d3 = 5 * 26 + 4 * (28 * 28 - 2 * 2).
    let atoms = [Formula::etype_is("a"), Formula::etype_is("b")];
    let d2 = 5 * 2 + 4 * 2 * 2;
    let d3 = 5 * d2 + 4 * ((2 + d2) * (2 + d2) - 2 * 2);
    assert_eq!(ltlf::corpus(&atoms, 3).len(), 2 + d2 + d3);
}

#[test]
fn empty_trace_boundaries() {
    let empty: Vec<&OcedEvent> = Vec::new();
    let a = Formula::etype_is("a");
    assert!(eval_ltlf(&Formula::globally(a.clone()), &empty, 0));
    assert!(!eval_ltlf(&Formula::eventually(Formula::True), &empty, 0));
    assert!(eval_ltlf(&Formula::weak_next(Formula::False), &empty, 0));
    assert!(!eval_ltlf(&Formula::next(Formula::True), &empty, 0));
    assert!(!eval_ltlf(&a, &empty, 0));
    assert!(!eval_ltlf(&Formula::until(Formula::True, Formula::True), &empty, 0));
}

#[test]
fn strong_and_weak_next_at_the_last_position() {
    let evs = events_named(&["a", "b"]);
    let refs: Vec<&OcedEvent> = evs.iter().collect();
    assert!(!eval_ltlf(&Formula::next(Formula::True), &refs, 1));
    assert!(eval_ltlf(&Formula::weak_next(Formula::False), &refs, 1));
    assert!(eval_ltlf(&Formula::next(Formula::etype_is("b")), &refs, 0));
}

fn count_oracle(counted: &Formula, delim: Option<&Formula>, trace: &[&OcedEvent]) -> u64 {
    let mut n = 0;
    for (i, _) in trace.iter().enumerate() {
        if let Some(d) = delim {
            if oracle(d, trace, i) {
                break;
            }
        }
        if oracle(counted, trace, i) {
            n += 1;
        }
    }
    n
}

#[test]
fn escalation_count_examples() {
    let bound = |n| CountBound {
        counted: Formula::etype_is("E"),
        delimiter: Some(Formula::etype_is("R")),
        bound: n,
        sense: Sense::AtMost,
    };
    let four = events_named(&["E", "E", "E", "E", "R"]);
    let four: Vec<&OcedEvent> = four.iter().collect();
    assert!(!eval_count_bound(&bound(3), &four));
    assert!(eval_count_bound(&bound(4), &four));
    let two = events_named(&["E", "E"]);
    let two: Vec<&OcedEvent> = two.iter().collect();
    assert!(eval_count_bound(&bound(3), &two));
    let after = events_named(&["R", "E", "E", "E", "E"]);
    let after: Vec<&OcedEvent> = after.iter().collect();
    assert!(eval_count_bound(&bound(0), &after));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn random_formulas_match_the_oracle(seed in any::<u64>(), len in 0usize..8, depth in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, depth);
        let evs = random_events(&mut rng, len);
        let refs: Vec<&OcedEvent> = evs.iter().collect();
        let table = ltlf_table(&f, &refs);
        prop_assert_eq!(table.len(), len + 1);
        for (i, got) in table.into_iter().enumerate() {
            prop_assert_eq!(got, oracle(&f, &refs, i), "{} at {}", f, i);
        }
    }

    #[test]
    fn dualities_and_negation(seed in any::<u64>(), len in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 3);
        let g = random_formula(&mut rng, 3);
        let evs = random_events(&mut rng, len);
        let t: Vec<&OcedEvent> = evs.iter().collect();
        let not = Formula::not;
        for i in 0..=len {
            let at = |h: &Formula| eval_ltlf(h, &t, i);
            prop_assert_eq!(at(&Formula::globally(f.clone())), at(&not(Formula::eventually(not(f.clone())))));
            prop_assert_eq!(at(&Formula::weak_next(f.clone())), at(&not(Formula::next(not(f.clone())))));
            prop_assert_eq!(at(&not(f.clone())), !at(&f));
            prop_assert_eq!(
                at(&Formula::eventually(f.clone())),
                at(&Formula::until(Formula::True, f.clone()))
            );
            // Expansion law for until; on the empty suffix `true` holds but
            // every until is false, so it applies to real positions only.
            prop_assert!(i == len || at(&Formula::until(f.clone(), g.clone())) ==
                at(&Formula::or(
                    g.clone(),
                    Formula::and(f.clone(), Formula::next(Formula::until(f.clone(), g.clone())))
                ))
            );
        }
    }

    #[test]
    fn globally_of_a_state_formula_survives_truncation(seed in any::<u64>(), len in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_state(&mut rng, 2);
        let evs = random_events(&mut rng, len);
        let t: Vec<&OcedEvent> = evs.iter().collect();
        let g = Formula::globally(p);
        if eval_ltlf(&g, &t, 0) {
            for k in 0..=len {
                prop_assert!(eval_ltlf(&g, &t[..k], 0));
            }
        } else {
            // Once broken, no extension repairs it.
            let more = random_events(&mut rng, 3);
            let mut longer = t.clone();
            longer.extend(more.iter());
            prop_assert!(!eval_ltlf(&g, &longer, 0));
        }
    }

    #[test]
    fn count_bounds_match_a_direct_tally(seed in any::<u64>(), len in 0usize..10, bound in 0u64..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counted = random_state(&mut rng, 1);
        let delimiter = if rng.gen() { Some(random_state(&mut rng, 1)) } else { None };
        let evs = random_events(&mut rng, len);
        let t: Vec<&OcedEvent> = evs.iter().collect();
        let n = count_oracle(&counted, delimiter.as_ref(), &t);
        for sense in [Sense::AtMost, Sense::AtLeast] {
            let cb = CountBound { counted: counted.clone(), delimiter: delimiter.clone(), bound, sense };
            let want = match sense { Sense::AtMost => n <= bound, Sense::AtLeast => n >= bound };
            prop_assert_eq!(eval_count_bound(&cb, &t), want);
        }
    }
}
