use foced_core::ingest::{emit_ocel, emit_xes, parse_ocel, parse_xes, IngestMode};
use foced_core::snapshot::{read_snapshot, snapshot_string};
use foced_testkit::gen::{ocel_store, query_store, xes_store};
use foced_testkit::store_eq::diff;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Raw XES with a known number of traces and events, padded with elements
/// the reader must skip.
fn handwritten_xes(rng: &mut ChaCha8Rng) -> (String, usize, usize) {
    let mut s = String::from("<?xml version=\"1.0\"?>\n<!-- generated -->\n<log xes.version=\"1.0\">\n");
    s.push_str("<extension name=\"Concept\" prefix=\"concept\" uri=\"x\"/>\n");
    s.push_str("<global scope=\"event\"><string key=\"concept:name\" value=\"x\"/></global>\n");
    s.push_str("<classifier name=\"Activity\" keys=\"concept:name\"/>\n");
    let traces = rng.gen_range(0..6);
    let mut events = 0;
    for t in 0..traces {
        s.push_str(&format!("<trace>\n<string key=\"concept:name\" value=\"case {t}\"/>\n"));
        for e in 0..rng.gen_range(0..7) {
            events += 1;
            s.push_str("<event>\n");
            s.push_str(&format!("<string key=\"concept:name\" value=\"act {}\"/>\n", e % 3));
            s.push_str(&format!("<date key=\"time:timestamp\" value=\"2013-01-0{}T10:00:00+01:00\"/>\n", 1 + e % 9));
            if rng.gen() {
                s.push_str("<list key=\"tags\"><values><string key=\"v\" value=\"1\"/></values></list>\n");
            }
            s.push_str("</event>\n");
        }
        s.push_str("</trace>\n");
    }
    s.push_str("</log>\n");
    (s, traces, events)
}

fn scan_count(text: &str, tag: &str) -> usize {
    text.matches(&format!("<{tag}>")).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn xes_counts_match_a_text_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (text, traces, events) = handwritten_xes(&mut rng);
        prop_assert_eq!(scan_count(&text, "trace"), traces);
        prop_assert_eq!(scan_count(&text, "event"), events);
        let (store, report) = parse_xes(text.as_bytes(), IngestMode::Strict).unwrap();
        prop_assert_eq!(store.objects().len(), traces);
        prop_assert_eq!(store.events().len(), events);
        prop_assert_eq!(report.events_read, events);
        prop_assert_eq!(report.cases_read, traces);
    }

    #[test]
    fn xes_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = xes_store(&mut rng, 6, 30);
        let bytes = emit_xes(&store).unwrap();
        let (back, _) = parse_xes(bytes.as_slice(), IngestMode::Strict).unwrap();
        let d = diff(&store, &back);
        prop_assert!(d.is_empty(), "{:?}\n{}", d, String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn ocel_round_trip_is_exact(seed in any::<u64>(), bind in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = ocel_store(&mut rng, 8, 25, bind);
        let bytes = emit_ocel(&store);
        let (back, _) = parse_ocel(bytes.as_slice(), IngestMode::Strict).unwrap();
        let d = diff(&store, &back);
        prop_assert!(d.is_empty(), "{:?}\n{}", d, String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn snapshot_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = match rng.gen_range(0..3) {
            0 => xes_store(&mut rng, 5, 20),
            1 => {
                let bind = rng.gen();
                ocel_store(&mut rng, 6, 20, bind)
            }
            _ => query_store(&mut rng, 5, 20),
        };
        let text = snapshot_string(&store);
        let back = read_snapshot(text.as_bytes()).unwrap();
        let d = diff(&store, &back);
        prop_assert!(d.is_empty(), "{:?}", d);
    }
}

#[test]
fn multi_case_events_cannot_be_written_as_xes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let store = loop {
        let s = query_store(&mut rng, 4, 12);
        if s.events().iter().any(|e| e.observed.len() != 1) {
            break s;
        }
    };
    assert!(emit_xes(&store).is_err());
}
